#pragma once

#include "storyecho/domain.hpp"
#include "storyecho/session.hpp"
#include "storyecho/validator.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace storyecho {

// std::map-backed objects: keys come out sorted, so dump() is canonical.
using Json = nlohmann::json;

// Schemas a provider call may be asked to produce, plus the stored types.
enum class TypeTag {
    ChildAvatar,
    BasicConstraints,
    StoryFramework,
    RecapAndGoal,
    Page,
    Interaction,
    Episode,
    EpisodeDraft,
    PostMealRecord,
    FeedbackMessage,
    FeedbackText,
    ValidationReport,
    TfoSession,
    InteractionEvent,
};

STORYECHO_ENUM_NAMES(TypeTag, {TypeTag::ChildAvatar, "ChildAvatar"},
                     {TypeTag::BasicConstraints, "BasicConstraints"},
                     {TypeTag::StoryFramework, "StoryFramework"},
                     {TypeTag::RecapAndGoal, "RecapAndGoal"}, {TypeTag::Page, "Page"},
                     {TypeTag::Interaction, "Interaction"}, {TypeTag::Episode, "Episode"},
                     {TypeTag::EpisodeDraft, "EpisodeDraft"},
                     {TypeTag::PostMealRecord, "PostMealRecord"},
                     {TypeTag::FeedbackMessage, "FeedbackMessage"},
                     {TypeTag::FeedbackText, "FeedbackText"},
                     {TypeTag::ValidationReport, "ValidationReport"},
                     {TypeTag::TfoSession, "TfoSession"},
                     {TypeTag::InteractionEvent, "InteractionEvent"});

Json encode(const ChildAvatar& v);
Json encode(const BasicConstraints& v);
Json encode(const StoryFramework& v);
Json encode(const RecapAndGoal& v);
Json encode(const Interaction& v);
Json encode(const BranchChoice& v);
Json encode(const Page& v);
Json encode(const VisualCanon& v);
Json encode(const PagePromptPackage& v);
Json encode(const EpisodeContent& v);
Json encode(const Episode& v);
Json encode(const PostMealRecord& v);
Json encode(const FeedbackMessage& v);
Json encode(const FeedbackText& v);
Json encode(const Violation& v);
Json encode(const ValidationReport& v);
Json encode(const TfoSession& v);
Json encode(const InteractionEvent& v);
Json encode(const TransitionRecord& v);

// Structural decoding against the closed schemas. Throws SchemaViolation for
// unknown or missing keys, wrong JSON types and unknown enum literals. No
// invariant checks.
template <class T>
T decode(const Json& j);

template <>
ChildAvatar decode<ChildAvatar>(const Json& j);
template <>
BasicConstraints decode<BasicConstraints>(const Json& j);
template <>
StoryFramework decode<StoryFramework>(const Json& j);
template <>
RecapAndGoal decode<RecapAndGoal>(const Json& j);
template <>
Interaction decode<Interaction>(const Json& j);
template <>
BranchChoice decode<BranchChoice>(const Json& j);
template <>
Page decode<Page>(const Json& j);
template <>
VisualCanon decode<VisualCanon>(const Json& j);
template <>
PagePromptPackage decode<PagePromptPackage>(const Json& j);
template <>
EpisodeContent decode<EpisodeContent>(const Json& j);
template <>
Episode decode<Episode>(const Json& j);
template <>
PostMealRecord decode<PostMealRecord>(const Json& j);
template <>
FeedbackMessage decode<FeedbackMessage>(const Json& j);
template <>
FeedbackText decode<FeedbackText>(const Json& j);
template <>
Violation decode<Violation>(const Json& j);
template <>
ValidationReport decode<ValidationReport>(const Json& j);
template <>
TfoSession decode<TfoSession>(const Json& j);
template <>
InteractionEvent decode<InteractionEvent>(const Json& j);
template <>
TransitionRecord decode<TransitionRecord>(const Json& j);

// Compact UTF-8 text with sorted keys.
std::string dump_canonical(const Json& j);

// Throws ParseError on malformed text or invalid UTF-8.
Json parse_json(std::string_view text);

template <class T>
std::string canonical_serialize(const T& value)
{
    check_invariants(value);
    return dump_canonical(encode(value));
}

template <class T>
T canonical_parse(std::string_view bytes)
{
    T value = decode<T>(parse_json(bytes));
    check_invariants(value);
    return value;
}

// Parses and decodes for the given tag without invariant checks; used to
// hold provider output to its schema.
void check_structure(TypeTag tag, std::string_view bytes);

// Accepts a full Episode document or a bare episode draft (pages,
// visual_canon, page_image_prompt_packages). Drafts get kind=main and empty
// metadata. No invariant checks: structural mistakes such as a missing
// event_key are left for validate_episode to report by code.
Episode parse_episode_document(std::string_view bytes);

} // namespace storyecho
