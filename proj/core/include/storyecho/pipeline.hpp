#pragma once

#include "storyecho/errors.hpp"
#include "storyecho/prompts.hpp"
#include "storyecho/provider.hpp"
#include "storyecho/validator.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storyecho {

enum class DescriptionSignal { Progress, Avoidance, Neutral };
enum class EndingVariant { Positive, Gentle, Warm };
enum class JobStatus { Queued, Running, AwaitingReview, Succeeded, Failed };

STORYECHO_ENUM_NAMES(DescriptionSignal, {DescriptionSignal::Progress, "progress"},
                     {DescriptionSignal::Avoidance, "avoidance"},
                     {DescriptionSignal::Neutral, "neutral"});
STORYECHO_ENUM_NAMES(EndingVariant, {EndingVariant::Positive, "positive"},
                     {EndingVariant::Gentle, "gentle"}, {EndingVariant::Warm, "warm"});
STORYECHO_ENUM_NAMES(JobStatus, {JobStatus::Queued, "queued"}, {JobStatus::Running, "running"},
                     {JobStatus::AwaitingReview, "awaiting_review"},
                     {JobStatus::Succeeded, "succeeded"}, {JobStatus::Failed, "failed"});

struct GenerationJob {
    std::string job_id;
    Stage stage = Stage::Episode;
    JobStatus status = JobStatus::Queued;
    int attempts = 0;
    std::optional<ValidationReport> last_report;
    std::optional<std::string> error_code;
    std::optional<std::string> error_detail;
    // Id of what the job produced (episode, framework, ...), once known.
    std::optional<std::string> result_id;

    bool operator==(const GenerationJob&) const = default;
};

Json encode(const GenerationJob& job);

// Thrown when a stage output still fails validation after the last retry.
class GenerationFailedError : public Error {
public:
    GenerationFailedError(const std::string& detail, ValidationReport report, int attempts);

    const ValidationReport& report() const noexcept { return report_; }
    int attempts() const noexcept { return attempts_; }

private:
    ValidationReport report_;
    int attempts_;
};

inline constexpr int kDefaultMaxRetries = 2;

// Calls `attempt` until `validate` passes, at most max_retries + 1 times.
// Attempts after the first receive the previous report for repair. Errors
// thrown by `attempt` (ProviderError) propagate without retry.
template <class T>
T run_with_validation(const std::function<T(const std::optional<ValidationReport>&)>& attempt,
                      const std::function<ValidationReport(const T&)>& validate, int max_retries,
                      GenerationJob* job = nullptr)
{
    if (max_retries < 0) {
        fail(Errc::PreconditionFailed, "max_retries must be >= 0");
    }
    std::optional<ValidationReport> repair;
    for (int i = 1; i <= max_retries + 1; ++i) {
        if (job) {
            job->attempts = i;
            job->status = JobStatus::Running;
        }
        T output = attempt(repair);
        ValidationReport report = validate(output);
        if (job) {
            job->last_report = report;
        }
        if (report.ok()) {
            return output;
        }
        repair = std::move(report);
    }
    if (job) {
        job->status = JobStatus::Failed;
    }
    throw GenerationFailedError("validation still failing after " +
                                    std::to_string(max_retries + 1) + " attempts:\n" +
                                    describe(*repair),
                                *repair, max_retries + 1);
}

struct DescriptionLexicon {
    std::vector<std::string> progress;
    std::vector<std::string> avoidance;

    static DescriptionLexicon defaults();
};

// Avoidance wins when both lexicons match.
DescriptionSignal derive_description_signal(std::string_view description,
                                            const DescriptionLexicon& lexicon);

FeedbackType classify_feedback_type(const PostMealRecord& record, DescriptionSignal signal);

// Throws RangeError outside 1-10.
EndingVariant select_ending_variant(int score);

// prefix, character lock, world lock, page suffix; empty parts are skipped.
// The negative prompt is not part of it (see VisualCanon::negative_prompt_en).
std::string assemble_image_prompt(const VisualCanon& canon, const PagePromptPackage& package);

struct PipelineConfig {
    int max_retries = kDefaultMaxRetries;
    std::vector<std::string> first_person_pronouns{"我", "咱"};
    // Matched case-insensitively (ASCII) against micro_goal.
    std::vector<std::string> stage_denylist{"阶段", "准备度", "意愿等级", "干预进度", "行为阶段",
                                            "stage", "readiness", "willingness"};
    DescriptionLexicon lexicon = DescriptionLexicon::defaults();
    std::size_t summarize_window = 3;
};

struct EpisodeOverrides {
    bool food_override_must_follow = false;
    std::vector<std::string> temporary_props;
};

struct EndingResult {
    Episode episode;
    EndingVariant variant = EndingVariant::Warm;
};

class Pipeline {
public:
    Pipeline(GenerationProvider& provider, PromptLibrary prompts, PipelineConfig config = {});

    StoryFramework generate_framework(const std::string& theme, StoryMode mode,
                                      const BasicConstraints& constraints,
                                      const ChildAvatar& avatar, GenerationJob* job = nullptr);

    // Uses at most the latest summarize_window episodes (oldest first).
    RecapAndGoal summarize(std::span<const Episode> previous_episodes,
                           const std::optional<StoryFramework>& framework,
                           GenerationJob* job = nullptr);

    Episode generate_episode(const StoryFramework& framework,
                             const std::optional<RecapAndGoal>& recap,
                             const std::string& target_food, const ChildAvatar& avatar,
                             const BasicConstraints& constraints,
                             const EpisodeOverrides& overrides, GenerationJob* job = nullptr);

    EndingResult generate_ending(const Episode& main_episode, const PostMealRecord& record,
                                 const RecapAndGoal& summary, const BasicConstraints& constraints,
                                 GenerationJob* job = nullptr);

    FeedbackMessage generate_feedback(const PostMealRecord& record, const ChildAvatar& avatar,
                                      std::span<const std::string> recent_phrases,
                                      std::int64_t seed, GenerationJob* job = nullptr);

    // Renders one page illustration; returns the asset id.
    std::string render_page_image(const VisualCanon& canon, const PagePromptPackage& package,
                                  const ChildAvatar& avatar);

    const PipelineConfig& config() const { return config_; }
    GenerationProvider& provider() { return provider_; }

private:
    template <class T>
    T call_provider(Stage stage, TypeTag tag, Json payload,
                    const std::optional<ValidationReport>& repair);

    GenerationProvider& provider_;
    PromptLibrary prompts_;
    PipelineConfig config_;
};

} // namespace storyecho
