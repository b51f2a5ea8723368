#pragma once

#include "storyecho/domain.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyecho {

enum class ViolationCode {
    PageCountMismatch,
    PageTooShort,
    PageTooLong,
    TotalLengthOutOfBand,
    MicroInteractionBudgetExceeded,
    ChoiceBudgetExceeded,
    RecordVoiceBudgetExceeded,
    DuplicateEventKey,
    MalformedEventKey,
    DanglingPageReference,
    FinalPageNotTerminal,
    UnreachablePage,
    CycleDetected,
    BranchMergeTooFar,
    BranchCountViolation,
    PromptPackageMissing,
    PromptPackageOrphan,
    LengthViolation,
    NicknameCountViolation,
    FoodMentionMissing,
    OpeningContainsIdentity,
    RecentPhrasePrefixCollision,
    ForbiddenScriptDetected,
    TooFewLocations,
    PlaceholderDetected,
    EmptyRecurringPhrase,
    // Generation-gate checks used only by the pipeline's stage validators.
    StageVocabularyDetected,
    SeedNotSingleSentence,
    EmptyContinuityAnchor,
    FirstPersonNarration,
    FoodOverrideMissing,
    ChildRoleMissingAvatar,
};

STORYECHO_ENUM_NAMES(
    ViolationCode, {ViolationCode::PageCountMismatch, "PageCountMismatch"},
    {ViolationCode::PageTooShort, "PageTooShort"}, {ViolationCode::PageTooLong, "PageTooLong"},
    {ViolationCode::TotalLengthOutOfBand, "TotalLengthOutOfBand"},
    {ViolationCode::MicroInteractionBudgetExceeded, "MicroInteractionBudgetExceeded"},
    {ViolationCode::ChoiceBudgetExceeded, "ChoiceBudgetExceeded"},
    {ViolationCode::RecordVoiceBudgetExceeded, "RecordVoiceBudgetExceeded"},
    {ViolationCode::DuplicateEventKey, "DuplicateEventKey"},
    {ViolationCode::MalformedEventKey, "MalformedEventKey"},
    {ViolationCode::DanglingPageReference, "DanglingPageReference"},
    {ViolationCode::FinalPageNotTerminal, "FinalPageNotTerminal"},
    {ViolationCode::UnreachablePage, "UnreachablePage"},
    {ViolationCode::CycleDetected, "CycleDetected"},
    {ViolationCode::BranchMergeTooFar, "BranchMergeTooFar"},
    {ViolationCode::BranchCountViolation, "BranchCountViolation"},
    {ViolationCode::PromptPackageMissing, "PromptPackageMissing"},
    {ViolationCode::PromptPackageOrphan, "PromptPackageOrphan"},
    {ViolationCode::LengthViolation, "LengthViolation"},
    {ViolationCode::NicknameCountViolation, "NicknameCountViolation"},
    {ViolationCode::FoodMentionMissing, "FoodMentionMissing"},
    {ViolationCode::OpeningContainsIdentity, "OpeningContainsIdentity"},
    {ViolationCode::RecentPhrasePrefixCollision, "RecentPhrasePrefixCollision"},
    {ViolationCode::ForbiddenScriptDetected, "ForbiddenScriptDetected"},
    {ViolationCode::TooFewLocations, "TooFewLocations"},
    {ViolationCode::PlaceholderDetected, "PlaceholderDetected"},
    {ViolationCode::EmptyRecurringPhrase, "EmptyRecurringPhrase"},
    {ViolationCode::StageVocabularyDetected, "StageVocabularyDetected"},
    {ViolationCode::SeedNotSingleSentence, "SeedNotSingleSentence"},
    {ViolationCode::EmptyContinuityAnchor, "EmptyContinuityAnchor"},
    {ViolationCode::FirstPersonNarration, "FirstPersonNarration"},
    {ViolationCode::FoodOverrideMissing, "FoodOverrideMissing"},
    {ViolationCode::ChildRoleMissingAvatar, "ChildRoleMissingAvatar"});

// The 26 content-rule codes (everything before the gate group).
inline constexpr std::size_t kCatalogCodeCount = 26;

struct Violation {
    ViolationCode code;
    std::optional<std::string> page_id;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationCode code) const;
    std::vector<ViolationCode> codes() const; // distinct, catalog order

    void add(ViolationCode code, std::optional<std::string> page_id, std::string detail);
    void merge(const ValidationReport& other);

    bool operator==(const ValidationReport&) const = default;
};

// ok is derived from violations, so a report has no other invariant.
inline void check_invariants(const ValidationReport&) {}

// One line per violation: "Code[page_id]: detail".
std::string describe(const ValidationReport& report);

bool is_snake_case_key(std::string_view key);

ValidationReport validate_page_count(const Episode& episode, const BasicConstraints& constraints);
ValidationReport validate_page_lengths(const Episode& episode, const BasicConstraints& constraints);
ValidationReport validate_interaction_budget(const Episode& episode,
                                             const BasicConstraints& constraints);
ValidationReport validate_page_graph(const Episode& episode);
ValidationReport validate_prompt_packages(const Episode& episode);
ValidationReport validate_episode(const Episode& episode, const BasicConstraints& constraints);

inline constexpr std::size_t kFeedbackMaxHan = 50;
inline constexpr std::size_t kOpeningPrefixLength = 8;

ValidationReport validate_feedback_text(std::string_view text_cn, std::string_view nickname,
                                        std::string_view food,
                                        std::span<const std::string> recent_phrases);

ValidationReport validate_framework(const StoryFramework& framework);

// Gate checks shared by the pipeline.
ValidationReport check_first_person(const Episode& episode,
                                    std::span<const std::string> pronouns);
ValidationReport check_food_presence(const Episode& episode, std::string_view food,
                                     bool require_in_prompts);
ValidationReport validate_recap(const RecapAndGoal& recap,
                                std::span<const std::string> stage_denylist);

// Ending pages appended after the main episode's terminal page; checks the
// combined page graph and cross-episode id/key collisions.
ValidationReport validate_extension_chain(const Episode& main_episode, const Episode& extension);

bool contains_placeholder(std::string_view text);

} // namespace storyecho
