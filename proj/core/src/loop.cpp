#include "storyecho/loop.hpp"

namespace storyecho {

namespace {

std::optional<InteractionType> page_type_for(InteractionKind kind)
{
    switch (kind) {
    case InteractionKind::Tap: return InteractionType::Tap;
    case InteractionKind::Drag: return InteractionType::Drag;
    case InteractionKind::ChoiceSelected: return InteractionType::Choice;
    case InteractionKind::MimicDone: return InteractionType::Mimic;
    case InteractionKind::VoiceRecorded: return InteractionType::RecordVoice;
    }
    return std::nullopt;
}

bool accepts_interactions(SessionState state)
{
    return state == SessionState::StoryReady || state == SessionState::ReadDone ||
           state == SessionState::EndingReady || state == SessionState::Revisited;
}

} // namespace

InterventionLoop::InterventionLoop(Store& store, Pipeline& pipeline, LoopConfig config)
    : store_(store), pipeline_(pipeline), config_(std::move(config))
{
    check_invariants(config_.constraints);
}

std::mutex& InterventionLoop::session_mutex(const std::string& session_id)
{
    std::lock_guard lock(locks_mutex_);
    auto& slot = locks_[session_id];
    if (!slot) {
        slot = std::make_unique<std::mutex>();
    }
    return *slot;
}

void InterventionLoop::require_state(const TfoSession& session, SessionEvent event) const
{
    if (session.closed || !next_state(session.state, event)) {
        fail(Errc::IllegalTransition, std::string(enum_name(event)) + " is not allowed in " +
                                          std::string(enum_name(session.state)) +
                                          (session.closed ? " (closed)" : ""));
    }
}

TfoSession InterventionLoop::apply(
    const std::string& session_id, SessionEvent event,
    const std::function<std::optional<std::string>(TfoSession&)>& update)
{
    std::lock_guard lock(session_mutex(session_id));
    const auto current = store_.get_session(session_id);
    auto next = transition(current, event, store_.now());
    const auto ref = update ? update(next) : std::nullopt;
    store_.commit_transition(next, event, current.state, ref);
    return next;
}

std::string InterventionLoop::create_avatar(const ChildAvatar& avatar, const std::string& family_id)
{
    return store_.put(avatar, family_id);
}

StoryFramework InterventionLoop::create_framework(const std::string& child_id,
                                                  const std::string& theme, StoryMode mode,
                                                  GenerationJob* job)
{
    const auto avatar = store_.get_avatar(child_id);
    auto framework = pipeline_.generate_framework(theme, mode, config_.constraints, avatar, job);
    framework.framework_id.clear();
    framework.framework_id = store_.put(framework, child_id);
    if (job) {
        job->result_id = framework.framework_id;
    }
    return framework;
}

TfoSession InterventionLoop::create_session(const std::string& child_id,
                                            const std::string& target_food,
                                            const std::optional<std::string>& framework_id)
{
    std::lock_guard lock(create_mutex_);
    if (!store_.has_child(child_id)) {
        fail(Errc::ChildNotFound, "child " + child_id);
    }
    if (trim(target_food).empty()) {
        fail(Errc::PreconditionFailed, "target_food must be non-empty");
    }
    if (auto active = store_.active_session(child_id)) {
        fail(Errc::SessionAlreadyActive,
             "child " + child_id + " already has session " + active->session_id + " in " +
                 std::string(enum_name(active->state)));
    }
    TfoSession session;
    session.child_id = child_id;
    session.target_food = trim(target_food);
    if (framework_id) {
        if (store_.framework_owner(*framework_id) != child_id) {
            fail(Errc::ReferentialViolation,
                 "framework " + *framework_id + " belongs to another child");
        }
        session.framework_id = framework_id;
    } else {
        session.framework_id = store_.latest_framework_id(child_id);
        if (!session.framework_id) {
            fail(Errc::PreconditionFailed, "child " + child_id + " has no story framework yet");
        }
    }
    session.session_id = store_.create_session(session);
    return store_.get_session(session.session_id);
}

TfoSession InterventionLoop::start_generation(const std::string& session_id)
{
    {
        std::lock_guard lock(session_mutex(session_id));
        auto s = store_.get_session(session_id);
        if (s.state == SessionState::StoryGenerating && !s.closed) {
            return s;
        }
    }
    return apply(session_id, SessionEvent::GenerationStarted, nullptr);
}

void InterventionLoop::illustrate(const Episode& episode, const ChildAvatar& avatar)
{
    if (!config_.render_images) {
        return;
    }
    for (const auto& package : episode.page_image_prompt_packages) {
        const auto asset =
            pipeline_.render_page_image(episode.visual_canon, package, avatar);
        store_.put_page_image(episode.episode_id, {package.page_id, asset});
    }
}

TfoSession InterventionLoop::generate_story(const std::string& session_id,
                                            const EpisodeOverrides& overrides,
                                            GenerationJob* job)
{
    const auto session = store_.get_session(session_id);
    require_state(session, SessionEvent::EpisodeDrafted);
    const auto avatar = store_.get_avatar(session.child_id);
    if (!session.framework_id) {
        fail(Errc::PreconditionFailed, "session " + session_id + " has no framework");
    }
    const auto framework = store_.get_framework(*session.framework_id);
    const auto history = store_.latest_episodes(
        session.child_id, static_cast<int>(pipeline_.config().summarize_window));
    std::optional<RecapAndGoal> recap;
    if (!history.empty()) {
        recap = pipeline_.summarize(history, framework);
    }
    auto episode = pipeline_.generate_episode(framework, recap, session.target_food, avatar,
                                              config_.constraints, overrides, job);
    episode.episode_id = store_.put(episode, session.child_id);
    if (job) {
        job->result_id = episode.episode_id;
    }
    illustrate(episode, avatar);
    return apply(session_id, SessionEvent::EpisodeDrafted, [&](TfoSession& s) {
        s.main_episode_id = episode.episode_id;
        return std::optional<std::string>(episode.episode_id);
    });
}

TfoSession InterventionLoop::review(const std::string& session_id, ReviewDecision decision)
{
    if (decision == ReviewDecision::Approve) {
        return apply(session_id, SessionEvent::Approved, [&](TfoSession& s) {
            store_.approve_episode(*s.main_episode_id);
            return s.main_episode_id;
        });
    }
    return apply(session_id, SessionEvent::RegenerationRequested,
                 [](TfoSession& s) { return s.main_episode_id; });
}

TfoSession InterventionLoop::finish_reading(const std::string& session_id)
{
    return apply(session_id, SessionEvent::ReadingFinished, nullptr);
}

TfoSession InterventionLoop::submit_post_meal(const std::string& session_id,
                                              PostMealRecord record)
{
    const auto session = store_.get_session(session_id);
    require_state(session, SessionEvent::PostMealSubmitted);
    if (trim(record.target_food) != session.target_food) {
        fail(Errc::FoodMismatch, "record food '" + record.target_food + "' vs session food '" +
                                     session.target_food + "'");
    }
    check_invariants(record);
    return apply(session_id, SessionEvent::PostMealSubmitted, [&](TfoSession& s) {
        record.record_id.clear();
        s.record_id = store_.put(record, session_id);
        return s.record_id;
    });
}

TfoSession InterventionLoop::deliver_feedback(const std::string& session_id, GenerationJob* job)
{
    const auto session = store_.get_session(session_id);
    require_state(session, SessionEvent::FeedbackShown);
    const auto record = store_.get_record(*session.record_id);
    const auto avatar = store_.get_avatar(session.child_id);
    const auto recent =
        store_.recent_feedback_phrases(session.child_id, config_.recent_phrase_window);
    const auto message =
        pipeline_.generate_feedback(record, avatar, recent, config_.feedback_seed, job);
    return apply(session_id, SessionEvent::FeedbackShown, [&](TfoSession& s) {
        const auto id = store_.put(message, session_id);
        store_.mark_delivered(id, s.updated_at);
        if (job) {
            job->result_id = id;
        }
        return std::optional<std::string>(id);
    });
}

TfoSession InterventionLoop::generate_ending(const std::string& session_id, GenerationJob* job)
{
    const auto session = store_.get_session(session_id);
    require_state(session, SessionEvent::EndingGenerated);
    const auto main = store_.get_episode(*session.main_episode_id);
    const auto record = store_.get_record(*session.record_id);
    const auto avatar = store_.get_avatar(session.child_id);
    auto history = store_.latest_episodes(
        session.child_id, static_cast<int>(pipeline_.config().summarize_window));
    if (history.empty()) {
        history.push_back(main);
    }
    std::optional<StoryFramework> framework;
    if (session.framework_id) {
        framework = store_.get_framework(*session.framework_id);
    }
    const auto summary = pipeline_.summarize(history, framework);
    auto result = pipeline_.generate_ending(main, record, summary, config_.constraints, job);
    result.episode.episode_id = store_.put(result.episode, session.child_id);
    if (job) {
        job->result_id = result.episode.episode_id;
    }
    illustrate(result.episode, avatar);
    return apply(session_id, SessionEvent::EndingGenerated, [&](TfoSession& s) {
        s.ending_episode_id = result.episode.episode_id;
        return s.ending_episode_id;
    });
}

TfoSession InterventionLoop::complete_post_meal(const std::string& session_id)
{
    deliver_feedback(session_id);
    return generate_ending(session_id);
}

TfoSession InterventionLoop::revisit(const std::string& session_id)
{
    return apply(session_id, SessionEvent::Revisited,
                 [](TfoSession& s) { return s.ending_episode_id; });
}

TfoSession InterventionLoop::close_session(const std::string& session_id)
{
    std::lock_guard lock(session_mutex(session_id));
    auto s = store_.get_session(session_id);
    if (!s.closed) {
        s.closed = true;
        s.updated_at = store_.now();
        store_.update_session(s);
    }
    return s;
}

TfoSession InterventionLoop::mark_task_completed(const std::string& session_id)
{
    std::lock_guard lock(session_mutex(session_id));
    auto s = store_.get_session(session_id);
    if (!s.task_completed) {
        s.task_completed = true;
        s.updated_at = store_.now();
        store_.update_session(s);
    }
    return s;
}

std::string InterventionLoop::record_interaction(const std::string& session_id,
                                                 InteractionEvent event)
{
    std::lock_guard lock(session_mutex(session_id));
    const auto session = store_.get_session(session_id);
    if (!accepts_interactions(session.state)) {
        fail(Errc::IllegalTransition, "interactions are not accepted in " +
                                          std::string(enum_name(session.state)));
    }
    event.session_id = session_id;
    check_invariants(event);

    std::optional<Page> page;
    for (const auto& id : {session.main_episode_id, session.ending_episode_id}) {
        if (!id || page) {
            continue;
        }
        for (const auto& p : store_.get_episode(*id).pages) {
            if (p.page_id == event.page_id) {
                page = p;
            }
        }
    }
    if (!page || !page->interaction || page->interaction->event_key != event.event_key) {
        fail(Errc::UnknownEventKey,
             "event_key '" + event.event_key + "' not on page '" + event.page_id + "'");
    }
    if (page_type_for(event.payload.kind) != page->interaction->type) {
        fail(Errc::InvariantViolation,
             std::string(enum_name(event.payload.kind)) + " does not match a " +
                 std::string(enum_name(page->interaction->type)) + " page");
    }
    if (event.payload.kind == InteractionKind::ChoiceSelected) {
        const auto& branch = *event.payload.choice_branch;
        const bool known = std::any_of(
            page->branch_choices.begin(), page->branch_choices.end(),
            [&](const BranchChoice& b) { return b.choice_id == branch || b.next_page_id == branch; });
        if (!known) {
            fail(Errc::InvariantViolation, "choice_branch '" + branch + "' is not on the page");
        }
        for (const auto& prior : store_.interactions(session_id)) {
            if (prior.page_id == event.page_id &&
                prior.payload.kind == InteractionKind::ChoiceSelected) {
                fail(Errc::DuplicateChoice, "a branch was already chosen on " + event.page_id);
            }
        }
    }
    if (event.payload.kind == InteractionKind::VoiceRecorded) {
        if (!event.payload.audio_asset || !store_.get_asset(*event.payload.audio_asset)) {
            fail(Errc::PreconditionFailed, "voice_recorded needs a stored audio_asset");
        }
        const auto text = pipeline_.provider().transcribe(*event.payload.audio_asset);
        store_.put_transcript(*event.payload.audio_asset, text);
    }
    event.event_id.clear();
    event.timestamp = store_.now();
    return store_.append_interaction(event);
}

std::optional<std::string> InterventionLoop::selected_branch(const std::string& session_id,
                                                             const std::string& page_id)
{
    std::optional<std::string> out;
    for (const auto& e : store_.interactions(session_id)) {
        if (e.page_id == page_id && e.payload.kind == InteractionKind::ChoiceSelected) {
            out = e.payload.choice_branch;
        }
    }
    return out;
}

AvatarState InterventionLoop::avatar_state(const std::string& session_id)
{
    const auto session = store_.get_session(session_id);
    if (!session.record_id) {
        fail(Errc::PreconditionFailed, "session " + session_id + " has no post-meal record yet");
    }
    return avatar_feedback_state(store_.get_record(*session.record_id));
}

} // namespace storyecho
