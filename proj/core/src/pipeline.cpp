#include "storyecho/pipeline.hpp"

#include "storyecho/unicode.hpp"

#include <algorithm>

namespace storyecho {

Json encode(const GenerationJob& job)
{
    return {{"job_id", job.job_id},
            {"stage", std::string(enum_name(job.stage))},
            {"status", std::string(enum_name(job.status))},
            {"attempts", job.attempts},
            {"last_report", job.last_report ? encode(*job.last_report) : Json(nullptr)},
            {"error_code", job.error_code ? Json(*job.error_code) : Json(nullptr)},
            {"error_detail", job.error_detail ? Json(*job.error_detail) : Json(nullptr)},
            {"result_id", job.result_id ? Json(*job.result_id) : Json(nullptr)}};
}

GenerationFailedError::GenerationFailedError(const std::string& detail, ValidationReport report,
                                             int attempts)
    : Error(Errc::GenerationFailed, detail), report_(std::move(report)), attempts_(attempts)
{
}

DescriptionLexicon DescriptionLexicon::defaults()
{
    return {{"尝了", "吃了", "咬了", "舔了", "试了", "尝试", "吃完", "吃光", "进步", "咽下",
             "舔一舔", "咬一口"},
            {"不吃", "拒绝", "推开", "哭", "吐出", "吐掉", "不想", "不肯", "不愿", "躲开",
             "害怕", "扔掉"}};
}

DescriptionSignal derive_description_signal(std::string_view description,
                                            const DescriptionLexicon& lexicon)
{
    auto any = [&](const std::vector<std::string>& terms) {
        return std::any_of(terms.begin(), terms.end(), [&](const std::string& t) {
            return count_occurrences(description, t) > 0;
        });
    };
    if (any(lexicon.avoidance)) {
        return DescriptionSignal::Avoidance;
    }
    if (any(lexicon.progress)) {
        return DescriptionSignal::Progress;
    }
    return DescriptionSignal::Neutral;
}

FeedbackType classify_feedback_type(const PostMealRecord& record, DescriptionSignal signal)
{
    switch (signal) {
    case DescriptionSignal::Progress: return FeedbackType::Praise;
    case DescriptionSignal::Avoidance: return FeedbackType::Encourage;
    case DescriptionSignal::Neutral: break;
    }
    return record.self_rating >= 7 ? FeedbackType::Praise : FeedbackType::Encourage;
}

EndingVariant select_ending_variant(int score)
{
    if (score < kSelfRatingMin || score > kSelfRatingMax) {
        fail(Errc::RangeError, "score " + std::to_string(score) + " outside 1-10");
    }
    if (score >= 7) {
        return EndingVariant::Positive;
    }
    if (score <= 3) {
        return EndingVariant::Gentle;
    }
    return EndingVariant::Warm;
}

std::string assemble_image_prompt(const VisualCanon& canon, const PagePromptPackage& package)
{
    std::string out;
    for (const auto* part :
         {&canon.global_visual_prompt_prefix_en, &canon.character_lock_prompt_en,
          &canon.world_lock_prompt_en, &package.image_prompt_suffix_en}) {
        if (part->empty()) {
            continue;
        }
        if (!out.empty()) {
            out += ", ";
        }
        out += *part;
    }
    return out;
}

Pipeline::Pipeline(GenerationProvider& provider, PromptLibrary prompts, PipelineConfig config)
    : provider_(provider), prompts_(std::move(prompts)), config_(std::move(config))
{
}

template <class T>
T Pipeline::call_provider(Stage stage, TypeTag tag, Json payload,
                          const std::optional<ValidationReport>& repair)
{
    if (repair) {
        payload["repair"] = encode(*repair);
    }
    const auto output =
        provider_.complete(prompts_.get(stage).text, dump_canonical(payload), tag);
    try {
        return decode<T>(parse_json(output));
    } catch (const Error& e) {
        fail(Errc::ProviderError, std::string(enum_name(stage)) + " output rejected: " + e.what());
    }
}

namespace {

// Invariant failures that survive validation are a provider contract breach.
template <class T>
void require_invariants(const T& value, Stage stage)
{
    try {
        check_invariants(value);
    } catch (const Error& e) {
        fail(Errc::ProviderError, std::string(enum_name(stage)) + " output rejected: " + e.what());
    }
}

void finish_job(GenerationJob* job, JobStatus status)
{
    if (job) {
        job->status = status;
    }
}

} // namespace

StoryFramework Pipeline::generate_framework(const std::string& theme, StoryMode mode,
                                            const BasicConstraints& constraints,
                                            const ChildAvatar& avatar, GenerationJob* job)
{
    check_invariants(avatar);
    check_invariants(constraints);
    const Json payload{{"theme", theme},
                       {"story_mode", std::string(enum_name(mode))},
                       {"child_avatar", encode(avatar)},
                       {"basic_constraints", encode(constraints)}};
    const std::string nickname = trim(avatar.nickname);
    auto result = run_with_validation<StoryFramework>(
        [&](const std::optional<ValidationReport>& repair) {
            return call_provider<StoryFramework>(Stage::Framework, TypeTag::StoryFramework,
                                                 payload, repair);
        },
        [&](const StoryFramework& fw) {
            auto report = validate_framework(fw);
            if (count_occurrences(fw.child_role, nickname) == 0) {
                report.add(ViolationCode::ChildRoleMissingAvatar, std::nullopt,
                           "child_role does not name the avatar");
            }
            return report;
        },
        config_.max_retries, job);
    if (result.story_mode != mode) {
        fail(Errc::ProviderError, "framework output has story_mode " +
                                      std::string(enum_name(result.story_mode)));
    }
    require_invariants(result, Stage::Framework);
    finish_job(job, JobStatus::Succeeded);
    return result;
}

RecapAndGoal Pipeline::summarize(std::span<const Episode> previous_episodes,
                                 const std::optional<StoryFramework>& framework,
                                 GenerationJob* job)
{
    if (previous_episodes.empty()) {
        fail(Errc::PreconditionFailed, "summarize needs at least one previous episode");
    }
    const auto window = std::min(previous_episodes.size(), config_.summarize_window);
    Json blocks = Json::array();
    for (const auto& ep : previous_episodes.subspan(previous_episodes.size() - window)) {
        blocks.push_back(encode(ep));
    }
    const Json payload{{"previous_blocks", blocks},
                       {"story_framework", framework ? encode(*framework) : Json(nullptr)}};
    auto result = run_with_validation<RecapAndGoal>(
        [&](const std::optional<ValidationReport>& repair) {
            return call_provider<RecapAndGoal>(Stage::Summarize, TypeTag::RecapAndGoal, payload,
                                               repair);
        },
        [&](const RecapAndGoal& recap) { return validate_recap(recap, config_.stage_denylist); },
        config_.max_retries, job);
    require_invariants(result, Stage::Summarize);
    finish_job(job, JobStatus::Succeeded);
    return result;
}

Episode Pipeline::generate_episode(const StoryFramework& framework,
                                   const std::optional<RecapAndGoal>& recap,
                                   const std::string& target_food, const ChildAvatar& avatar,
                                   const BasicConstraints& constraints,
                                   const EpisodeOverrides& overrides, GenerationJob* job)
{
    if (trim(target_food).empty()) {
        fail(Errc::PreconditionFailed, "target_food must be non-empty");
    }
    check_invariants(framework);
    check_invariants(avatar);
    check_invariants(constraints);
    const Json payload{
        {"story_arc", encode(framework)},
        {"recap_and_goal", recap ? encode(*recap) : Json(nullptr)},
        {"recent_story", nullptr},
        {"basic_constraints", encode(constraints)},
        {"temporal_characteristics",
         {{"child_avatar", encode(avatar)},
          {"target_food", target_food},
          {"temporary_props", overrides.temporary_props}}},
        {"run_config",
         {{"effective_inputs",
           {{"food_override_must_follow", overrides.food_override_must_follow},
            {"food_override_hint", target_food}}}}}};
    auto content = run_with_validation<EpisodeContent>(
        [&](const std::optional<ValidationReport>& repair) {
            return call_provider<EpisodeContent>(Stage::Episode, TypeTag::EpisodeDraft, payload,
                                                 repair);
        },
        [&](const EpisodeContent& c) {
            const auto ep = make_episode(c, target_food, framework.framework_id, EpisodeKind::Main);
            auto report = validate_episode(ep, constraints);
            report.merge(check_first_person(ep, config_.first_person_pronouns));
            if (overrides.food_override_must_follow) {
                report.merge(check_food_presence(ep, target_food, true));
            }
            return report;
        },
        config_.max_retries, job);
    auto episode = make_episode(std::move(content), target_food, framework.framework_id,
                                EpisodeKind::Main);
    require_invariants(episode, Stage::Episode);
    finish_job(job, JobStatus::AwaitingReview);
    return episode;
}

EndingResult Pipeline::generate_ending(const Episode& main_episode, const PostMealRecord& record,
                                       const RecapAndGoal& summary,
                                       const BasicConstraints& constraints, GenerationJob* job)
{
    if (record.target_food != main_episode.target_food) {
        fail(Errc::FoodMismatch, "record food '" + record.target_food + "' vs episode food '" +
                                     main_episode.target_food + "'");
    }
    check_invariants(record);
    if (const auto pre = validate_episode(main_episode, constraints); !pre.ok()) {
        fail(Errc::PreconditionFailed, "main episode does not validate:\n" + describe(pre));
    }
    const auto variant = select_ending_variant(record.self_rating);
    Json recent = Json::array();
    for (const auto& page : main_episode.pages) {
        recent.push_back(encode(page));
    }
    const Json payload{{"food_name", record.target_food},
                       {"score", record.self_rating},
                       {"content", record.self_description},
                       {"ending_variant", std::string(enum_name(variant))},
                       {"summary", encode(summary)},
                       {"recent_story", recent},
                       {"basic_constraints", encode(constraints)},
                       {"id_prefix", "end_"}};
    auto content = run_with_validation<EpisodeContent>(
        [&](const std::optional<ValidationReport>& repair) {
            return call_provider<EpisodeContent>(Stage::Ending, TypeTag::EpisodeDraft, payload,
                                                 repair);
        },
        [&](const EpisodeContent& c) {
            const auto ep = make_episode(c, record.target_food, main_episode.framework_id,
                                         EpisodeKind::EndingExtension);
            auto report = validate_episode(ep, constraints);
            report.merge(validate_extension_chain(main_episode, ep));
            report.merge(check_first_person(ep, config_.first_person_pronouns));
            report.merge(check_food_presence(ep, record.target_food, false));
            return report;
        },
        config_.max_retries, job);
    auto episode = make_episode(std::move(content), record.target_food, main_episode.framework_id,
                                EpisodeKind::EndingExtension);
    require_invariants(episode, Stage::Ending);
    finish_job(job, JobStatus::Succeeded);
    return {std::move(episode), variant};
}

FeedbackMessage Pipeline::generate_feedback(const PostMealRecord& record,
                                            const ChildAvatar& avatar,
                                            std::span<const std::string> recent_phrases,
                                            std::int64_t seed, GenerationJob* job)
{
    check_invariants(record);
    check_invariants(avatar);
    const std::string nickname = trim(avatar.nickname);
    const Json payload{{"nickname", nickname},
                       {"picky_food", record.target_food},
                       {"self_rating", record.self_rating},
                       {"self_description", record.self_description},
                       {"recent_phrases", std::vector<std::string>(recent_phrases.begin(),
                                                                   recent_phrases.end())},
                       {"seed", seed}};
    auto text = run_with_validation<FeedbackText>(
        [&](const std::optional<ValidationReport>& repair) {
            return call_provider<FeedbackText>(Stage::Feedback, TypeTag::FeedbackText, payload,
                                               repair);
        },
        [&](const FeedbackText& t) {
            return validate_feedback_text(t.text_cn, nickname, record.target_food,
                                          recent_phrases);
        },
        config_.max_retries, job);
    FeedbackMessage message{
        text.text_cn,
        classify_feedback_type(record,
                               derive_description_signal(record.self_description, config_.lexicon)),
        record.record_id};
    require_invariants(message, Stage::Feedback);
    finish_job(job, JobStatus::Succeeded);
    return message;
}

std::string Pipeline::render_page_image(const VisualCanon& canon,
                                        const PagePromptPackage& package,
                                        const ChildAvatar& avatar)
{
    return provider_.generate_image(assemble_image_prompt(canon, package),
                                    avatar.base_reference_image);
}

} // namespace storyecho
