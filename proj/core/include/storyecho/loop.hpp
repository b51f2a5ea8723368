#pragma once

#include "storyecho/pipeline.hpp"
#include "storyecho/store.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace storyecho {

enum class ReviewDecision { Approve, Regenerate };

STORYECHO_ENUM_NAMES(ReviewDecision, {ReviewDecision::Approve, "approve"},
                     {ReviewDecision::Regenerate, "regenerate"});

struct LoopConfig {
    BasicConstraints constraints;
    bool render_images = true;
    // How many recent feedback texts the feedback stage must avoid echoing.
    int recent_phrase_window = 5;
    std::int64_t feedback_seed = 0;
};

// The per-child TFO cycle. Every state change is persisted together with its
// transition record; changes to one session are serialized, and generation
// runs outside the session lock with the state re-checked before commit.
class InterventionLoop {
public:
    InterventionLoop(Store& store, Pipeline& pipeline, LoopConfig config = {});

    Store& store() { return store_; }
    Pipeline& pipeline() { return pipeline_; }
    const LoopConfig& config() const { return config_; }

    std::string create_avatar(const ChildAvatar& avatar, const std::string& family_id);
    StoryFramework create_framework(const std::string& child_id, const std::string& theme,
                                    StoryMode mode, GenerationJob* job = nullptr);

    // ChildNotFound, SessionAlreadyActive, PreconditionFailed (empty food or
    // no framework for the child).
    TfoSession create_session(const std::string& child_id, const std::string& target_food,
                              const std::optional<std::string>& framework_id = std::nullopt);

    // FoodSelected -> StoryGenerating. Also accepts a session already in
    // StoryGenerating after a regeneration request, returning it unchanged.
    TfoSession start_generation(const std::string& session_id);
    // Generates, stores and illustrates a main episode; StoryGenerating ->
    // ReviewPending.
    TfoSession generate_story(const std::string& session_id, const EpisodeOverrides& overrides = {},
                              GenerationJob* job = nullptr);
    TfoSession review(const std::string& session_id, ReviewDecision decision);
    TfoSession finish_reading(const std::string& session_id);
    // StoryReady/ReadDone -> PostMealRecorded. FoodMismatch, InvariantViolation.
    TfoSession submit_post_meal(const std::string& session_id, PostMealRecord record);
    // PostMealRecorded -> FeedbackDelivered.
    TfoSession deliver_feedback(const std::string& session_id, GenerationJob* job = nullptr);
    // FeedbackDelivered -> EndingReady.
    TfoSession generate_ending(const std::string& session_id, GenerationJob* job = nullptr);
    // deliver_feedback then generate_ending.
    TfoSession complete_post_meal(const std::string& session_id);
    TfoSession revisit(const std::string& session_id);
    // Operator close for stale sessions; the session stops blocking new ones.
    TfoSession close_session(const std::string& session_id);
    TfoSession mark_task_completed(const std::string& session_id);

    // Returns the stored event id. UnknownEventKey, DuplicateChoice,
    // IllegalTransition.
    std::string record_interaction(const std::string& session_id, InteractionEvent event);
    // Branch target fixed by a choice_selected event on `page_id`, if any.
    std::optional<std::string> selected_branch(const std::string& session_id,
                                               const std::string& page_id);

    AvatarState avatar_state(const std::string& session_id);

private:
    std::mutex& session_mutex(const std::string& session_id);
    // Applies `event` under the session lock. `update` runs after the
    // transition is known to be legal and returns the artifact ref to log.
    TfoSession apply(const std::string& session_id, SessionEvent event,
                     const std::function<std::optional<std::string>(TfoSession&)>& update);
    void illustrate(const Episode& episode, const ChildAvatar& avatar);
    void require_state(const TfoSession& session, SessionEvent event) const;

    Store& store_;
    Pipeline& pipeline_;
    LoopConfig config_;
    std::mutex create_mutex_;
    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

} // namespace storyecho
