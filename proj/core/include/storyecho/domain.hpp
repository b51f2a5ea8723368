#pragma once

#include "storyecho/errors.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace storyecho {

// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class Gender { Girl, Boy, Unspecified };

enum class StoryMode {
    RealisticEveryday,
    LightFantasyFamiliar,
    HybridExpositoryNarrative,
    JourneyDiscoveryFramework,
};

enum class Language { ZhCN };

enum class InteractionType { None, Tap, Drag, Choice, Mimic, RecordVoice };

enum class EpisodeKind { Main, EndingExtension };

enum class FeedbackType { Praise, Encourage };

enum class SpecialCircumstance { Illness, PoorSleep, OutsideHome, Visitors, TimePressure, Other };

// Wire literals for every enum. Parsing an unknown literal fails; there is no
// fallback value.
template <class E>
struct EnumNames;

#define STORYECHO_ENUM_NAMES(E, ...)                                                     \
    template <>                                                                          \
    struct EnumNames<E> {                                                                \
        static constexpr auto entries = std::to_array<std::pair<E, std::string_view>>({ \
            __VA_ARGS__});                                                               \
    }

STORYECHO_ENUM_NAMES(Gender, {Gender::Girl, "girl"}, {Gender::Boy, "boy"},
                     {Gender::Unspecified, "unspecified"});
STORYECHO_ENUM_NAMES(StoryMode, {StoryMode::RealisticEveryday, "realistic_everyday"},
                     {StoryMode::LightFantasyFamiliar, "light_fantasy_familiar"},
                     {StoryMode::HybridExpositoryNarrative, "hybrid_expository_narrative"},
                     {StoryMode::JourneyDiscoveryFramework, "journey_discovery_framework"});
STORYECHO_ENUM_NAMES(Language, {Language::ZhCN, "zh-CN"});
STORYECHO_ENUM_NAMES(InteractionType, {InteractionType::None, "none"},
                     {InteractionType::Tap, "tap"}, {InteractionType::Drag, "drag"},
                     {InteractionType::Choice, "choice"}, {InteractionType::Mimic, "mimic"},
                     {InteractionType::RecordVoice, "record_voice"});
STORYECHO_ENUM_NAMES(EpisodeKind, {EpisodeKind::Main, "main"},
                     {EpisodeKind::EndingExtension, "ending_extension"});
STORYECHO_ENUM_NAMES(FeedbackType, {FeedbackType::Praise, "praise"},
                     {FeedbackType::Encourage, "encourage"});
STORYECHO_ENUM_NAMES(SpecialCircumstance, {SpecialCircumstance::Illness, "illness"},
                     {SpecialCircumstance::PoorSleep, "poor_sleep"},
                     {SpecialCircumstance::OutsideHome, "outside_home"},
                     {SpecialCircumstance::Visitors, "visitors"},
                     {SpecialCircumstance::TimePressure, "time_pressure"},
                     {SpecialCircumstance::Other, "other"});

template <class E>
constexpr std::string_view enum_name(E value)
{
    for (const auto& [v, name] : EnumNames<E>::entries) {
        if (v == value) {
            return name;
        }
    }
    return {};
}

template <class E>
constexpr std::optional<E> enum_from_name(std::string_view name)
{
    for (const auto& [v, n] : EnumNames<E>::entries) {
        if (n == name) {
            return v;
        }
    }
    return std::nullopt;
}

struct ChildAvatar {
    std::string avatar_id;
    std::string nickname;
    Gender gender = Gender::Unspecified;
    std::string clothing;
    std::vector<std::string> accessories;
    std::optional<std::string> base_reference_image;

    bool operator==(const ChildAvatar&) const = default;
};

struct BasicConstraints {
    int episode_page_count = 12;
    int ending_page_count = 4;
    int han_chars_per_page_min = 60;
    int han_chars_per_page_max = 80;
    // Unset totals derive from the per-page bounds times the page count.
    std::optional<int> han_chars_total_min;
    std::optional<int> han_chars_total_max;
    int micro_interactions_max_per_episode = 4;
    int record_voice_max = 1;
    int choice_max = 1;
    Language language = Language::ZhCN;

    int expected_pages(EpisodeKind kind) const;
    // Main episodes honour explicit totals; extensions always derive them.
    int total_min(EpisodeKind kind) const;
    int total_max(EpisodeKind kind) const;

    bool operator==(const BasicConstraints&) const = default;
};

struct WorldSetting {
    std::string concept_text; // wire key "concept"
    std::vector<std::string> core_locations;

    bool operator==(const WorldSetting&) const = default;
};

struct RecurringElements {
    std::string recurring_object;
    std::string recurring_phrase;
    std::string opening_ritual;
    std::string closing_hook_style;
    std::string episode_trigger_style;

    bool operator==(const RecurringElements&) const = default;
};

struct HelperRole {
    std::string name;
    std::string role;

    bool operator==(const HelperRole&) const = default;
};

struct StoryFramework {
    std::string framework_id;
    StoryMode story_mode = StoryMode::RealisticEveryday;
    WorldSetting world_setting;
    std::vector<std::string> world_rules;
    RecurringElements recurring_elements;
    std::vector<HelperRole> helper_roles;
    std::string child_role;

    bool operator==(const StoryFramework&) const = default;
};

struct ContinuityHooks {
    std::vector<std::string> carry_over_anchors;
    std::string next_episode_seed;

    bool operator==(const ContinuityHooks&) const = default;
};

struct RecapAndGoal {
    std::string recap_cn;
    std::string micro_goal;
    std::vector<std::string> key_story_elements;
    ContinuityHooks continuity_hooks;

    bool operator==(const RecapAndGoal&) const = default;
};

struct InteractionExt {
    std::string encouragement;

    bool operator==(const InteractionExt&) const = default;
};

struct Interaction {
    InteractionType type = InteractionType::None;
    std::string instruction;
    std::optional<std::string> event_key;
    InteractionExt ext;

    bool operator==(const Interaction&) const = default;
};

struct BranchChoice {
    std::string choice_id;
    std::string label_cn;
    std::string next_page_id;

    bool operator==(const BranchChoice&) const = default;
};

struct Page {
    int page_no = 1;
    std::string page_id;
    std::string page_text_cn;
    std::optional<std::string> next_page_id;
    std::optional<Interaction> interaction;
    std::vector<BranchChoice> branch_choices;

    InteractionType interaction_type() const
    {
        return interaction ? interaction->type : InteractionType::None;
    }

    bool operator==(const Page&) const = default;
};

struct VisualCanon {
    std::string global_visual_prompt_prefix_en;
    std::string character_lock_prompt_en;
    std::string world_lock_prompt_en;
    std::string negative_prompt_en;

    bool operator==(const VisualCanon&) const = default;
};

struct PagePromptPackage {
    int page_no = 1;
    std::string page_id;
    std::string image_prompt_suffix_en;

    bool operator==(const PagePromptPackage&) const = default;
};

// The three keys a generator is allowed to emit for an episode.
struct EpisodeContent {
    std::vector<Page> pages;
    VisualCanon visual_canon;
    std::vector<PagePromptPackage> page_image_prompt_packages;

    bool operator==(const EpisodeContent&) const = default;
};

struct Episode {
    std::string episode_id;
    std::vector<Page> pages;
    VisualCanon visual_canon;
    std::vector<PagePromptPackage> page_image_prompt_packages;
    std::string target_food;
    std::string framework_id;
    EpisodeKind kind = EpisodeKind::Main;

    const Page* find_page(std::string_view page_id) const;

    bool operator==(const Episode&) const = default;
};

inline constexpr int kScaleMin = 1;
inline constexpr int kScaleMax = 7;
inline constexpr int kSelfRatingMin = 1;
inline constexpr int kSelfRatingMax = 10;

struct PostMealRecord {
    std::string record_id;
    std::string target_food;
    int baseline_try = 1;
    int try_level = 1;
    int intake = 1;
    int resistance = 1;
    int emotion = 4;
    int parent_pressure = 1;
    int helpfulness = 4;
    int self_rating = 5;
    std::string self_description;
    std::vector<SpecialCircumstance> special_circumstances;
    Timestamp timestamp = 0;

    bool operator==(const PostMealRecord&) const = default;
};

struct FeedbackMessage {
    std::string text_cn;
    FeedbackType basic_type = FeedbackType::Encourage;
    std::string record_id;

    bool operator==(const FeedbackMessage&) const = default;
};

// What the feedback stage emits: the message text only.
struct FeedbackText {
    std::string text_cn;

    bool operator==(const FeedbackText&) const = default;
};

// Per-type invariant checks. Each throws Error{InvariantViolation} listing
// every broken invariant of the value.
void check_invariants(const ChildAvatar& value);
void check_invariants(const BasicConstraints& value);
void check_invariants(const StoryFramework& value);
void check_invariants(const RecapAndGoal& value);
void check_invariants(const Interaction& value);
void check_invariants(const Page& value);
void check_invariants(const EpisodeContent& value);
void check_invariants(const Episode& value);
void check_invariants(const PostMealRecord& value);
void check_invariants(const FeedbackMessage& value);
void check_invariants(const FeedbackText& value);

std::string trim(std::string_view text);

Episode make_episode(EpisodeContent content, std::string target_food, std::string framework_id,
                     EpisodeKind kind);
EpisodeContent content_of(const Episode& episode);

} // namespace storyecho
