#pragma once

#include "storyecho/domain.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storyecho {

enum class SessionState {
    FoodSelected,
    StoryGenerating,
    ReviewPending,
    StoryReady,
    ReadDone,
    PostMealRecorded,
    FeedbackDelivered,
    EndingReady,
    Revisited,
};

enum class SessionEvent {
    GenerationStarted,
    EpisodeDrafted,
    Approved,
    RegenerationRequested,
    ReadingFinished,
    PostMealSubmitted,
    FeedbackShown,
    EndingGenerated,
    Revisited,
};

enum class InteractionKind { Tap, Drag, ChoiceSelected, MimicDone, VoiceRecorded };

enum class AvatarState { Happy, Neutral, SadButHopeful };

STORYECHO_ENUM_NAMES(SessionState, {SessionState::FoodSelected, "FoodSelected"},
                     {SessionState::StoryGenerating, "StoryGenerating"},
                     {SessionState::ReviewPending, "ReviewPending"},
                     {SessionState::StoryReady, "StoryReady"},
                     {SessionState::ReadDone, "ReadDone"},
                     {SessionState::PostMealRecorded, "PostMealRecorded"},
                     {SessionState::FeedbackDelivered, "FeedbackDelivered"},
                     {SessionState::EndingReady, "EndingReady"},
                     {SessionState::Revisited, "Revisited"});
STORYECHO_ENUM_NAMES(SessionEvent, {SessionEvent::GenerationStarted, "generation_started"},
                     {SessionEvent::EpisodeDrafted, "episode_drafted"},
                     {SessionEvent::Approved, "approved"},
                     {SessionEvent::RegenerationRequested, "regeneration_requested"},
                     {SessionEvent::ReadingFinished, "reading_finished"},
                     {SessionEvent::PostMealSubmitted, "post_meal_submitted"},
                     {SessionEvent::FeedbackShown, "feedback_shown"},
                     {SessionEvent::EndingGenerated, "ending_generated"},
                     {SessionEvent::Revisited, "revisited"});
STORYECHO_ENUM_NAMES(InteractionKind, {InteractionKind::Tap, "tap"},
                     {InteractionKind::Drag, "drag"},
                     {InteractionKind::ChoiceSelected, "choice_selected"},
                     {InteractionKind::MimicDone, "mimic_done"},
                     {InteractionKind::VoiceRecorded, "voice_recorded"});
STORYECHO_ENUM_NAMES(AvatarState, {AvatarState::Happy, "happy"},
                     {AvatarState::Neutral, "neutral"},
                     {AvatarState::SadButHopeful, "sad-but-hopeful"});

struct TfoSession {
    std::string session_id;
    std::string child_id;
    std::string target_food;
    SessionState state = SessionState::FoodSelected;
    std::optional<std::string> framework_id;
    std::optional<std::string> main_episode_id;
    std::optional<std::string> ending_episode_id;
    std::optional<std::string> record_id;
    int regeneration_count = 0;
    bool task_completed = false;
    // Set by the operator close command; a closed session no longer blocks
    // a new one for the same child.
    bool closed = false;
    Timestamp created_at = 0;
    Timestamp updated_at = 0;

    bool operator==(const TfoSession&) const = default;
};

struct InteractionPayload {
    InteractionKind kind = InteractionKind::Tap;
    std::optional<std::string> choice_branch;
    std::optional<std::string> audio_asset;

    bool operator==(const InteractionPayload&) const = default;
};

struct InteractionEvent {
    std::string event_id;
    std::string session_id;
    std::string page_id;
    std::string event_key;
    InteractionPayload payload;
    Timestamp timestamp = 0;

    bool operator==(const InteractionEvent&) const = default;
};

// One row of the session transition log.
struct TransitionRecord {
    std::string session_id;
    std::int64_t seq = 0;
    SessionEvent event = SessionEvent::GenerationStarted;
    SessionState from = SessionState::FoodSelected;
    SessionState to = SessionState::FoodSelected;
    // Artifact the event produced or consumed (episode, record, feedback id).
    std::optional<std::string> ref;
    Timestamp timestamp = 0;

    bool operator==(const TransitionRecord&) const = default;
};

// The transition table. nullopt for every pair outside it.
std::optional<SessionState> next_state(SessionState state, SessionEvent event);

// Applies one event; throws IllegalTransition for pairs outside the table.
// regeneration_requested bumps regeneration_count.
TfoSession transition(TfoSession session, SessionEvent event, Timestamp now);

// Folds an event sequence from FoodSelected. Throws IllegalTransition.
SessionState replay(std::span<const SessionEvent> events);

// Revisited, or closed by an operator.
bool is_terminal(const TfoSession& session);

AvatarState avatar_feedback_state(const PostMealRecord& record);

void check_invariants(const TfoSession& value);
void check_invariants(const InteractionEvent& value);
void check_invariants(const TransitionRecord& value);

} // namespace storyecho
