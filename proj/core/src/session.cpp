#include "storyecho/session.hpp"

#include "storyecho/errors.hpp"
#include "storyecho/validator.hpp"

namespace storyecho {

std::optional<SessionState> next_state(SessionState state, SessionEvent event)
{
    using S = SessionState;
    using E = SessionEvent;
    switch (event) {
    case E::GenerationStarted:
        if (state == S::FoodSelected) return S::StoryGenerating;
        break;
    case E::EpisodeDrafted:
        if (state == S::StoryGenerating) return S::ReviewPending;
        break;
    case E::Approved:
        if (state == S::ReviewPending) return S::StoryReady;
        break;
    case E::RegenerationRequested:
        if (state == S::ReviewPending) return S::StoryGenerating;
        break;
    case E::ReadingFinished:
        if (state == S::StoryReady) return S::ReadDone;
        break;
    case E::PostMealSubmitted:
        if (state == S::StoryReady || state == S::ReadDone) return S::PostMealRecorded;
        break;
    case E::FeedbackShown:
        if (state == S::PostMealRecorded) return S::FeedbackDelivered;
        break;
    case E::EndingGenerated:
        if (state == S::FeedbackDelivered) return S::EndingReady;
        break;
    case E::Revisited:
        if (state == S::EndingReady) return S::Revisited;
        break;
    }
    return std::nullopt;
}

namespace {

[[noreturn]] void illegal(SessionState state, SessionEvent event)
{
    fail(Errc::IllegalTransition,
         std::string(enum_name(state)) + " + " + std::string(enum_name(event)));
}

} // namespace

TfoSession transition(TfoSession session, SessionEvent event, Timestamp now)
{
    const auto next = next_state(session.state, event);
    if (!next || session.closed) {
        illegal(session.state, event);
    }
    if (event == SessionEvent::RegenerationRequested) {
        ++session.regeneration_count;
    }
    session.state = *next;
    session.updated_at = now;
    return session;
}

SessionState replay(std::span<const SessionEvent> events)
{
    SessionState state = SessionState::FoodSelected;
    for (auto event : events) {
        const auto next = next_state(state, event);
        if (!next) {
            illegal(state, event);
        }
        state = *next;
    }
    return state;
}

bool is_terminal(const TfoSession& session)
{
    return session.closed || session.state == SessionState::Revisited;
}

AvatarState avatar_feedback_state(const PostMealRecord& record)
{
    if (record.self_rating >= 7) {
        return AvatarState::Happy;
    }
    if (record.self_rating <= 3) {
        return AvatarState::SadButHopeful;
    }
    return AvatarState::Neutral;
}

void check_invariants(const TfoSession& value)
{
    std::string problems;
    auto require = [&](bool ok, std::string_view msg) {
        if (!ok) {
            problems += problems.empty() ? "" : "; ";
            problems += msg;
        }
    };
    using S = SessionState;
    require(!trim(value.target_food).empty(), "target_food must be non-empty");
    require(value.regeneration_count >= 0, "regeneration_count must be >= 0");
    require(value.state < S::ReviewPending || value.main_episode_id.has_value(),
            "main_episode_id required from ReviewPending on");
    require(value.state < S::PostMealRecorded || value.record_id.has_value(),
            "record_id required from PostMealRecorded on");
    require(value.state < S::EndingReady || value.ending_episode_id.has_value(),
            "ending_episode_id required from EndingReady on");
    if (!problems.empty()) {
        fail(Errc::InvariantViolation, "TfoSession: " + problems);
    }
}

void check_invariants(const InteractionEvent& value)
{
    std::string problems;
    if (!is_snake_case_key(value.event_key)) {
        problems = "event_key must be snake_case";
    }
    if (value.payload.kind == InteractionKind::ChoiceSelected && !value.payload.choice_branch) {
        problems += problems.empty() ? "" : "; ";
        problems += "choice_selected requires choice_branch";
    }
    if (!problems.empty()) {
        fail(Errc::InvariantViolation, "InteractionEvent: " + problems);
    }
}

void check_invariants(const TransitionRecord& value)
{
    const auto next = next_state(value.from, value.event);
    if (!next || *next != value.to) {
        fail(Errc::InvariantViolation, "TransitionRecord: not an edge of the transition table");
    }
}

} // namespace storyecho
