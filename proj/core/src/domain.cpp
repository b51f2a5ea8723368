#include "storyecho/domain.hpp"

#include "storyecho/errors.hpp"
#include "storyecho/unicode.hpp"
#include "storyecho/validator.hpp"

#include <algorithm>
#include <set>

namespace storyecho {

namespace {

class InvariantCollector {
public:
    explicit InvariantCollector(std::string_view type) : type_(type) {}

    void require(bool condition, std::string_view message)
    {
        if (!condition) {
            problems_.emplace_back(message);
        }
    }

    void finish() const
    {
        if (problems_.empty()) {
            return;
        }
        std::string detail = type_ + ": ";
        for (std::size_t i = 0; i < problems_.size(); ++i) {
            if (i > 0) {
                detail += "; ";
            }
            detail += problems_[i];
        }
        fail(Errc::InvariantViolation, detail);
    }

private:
    std::string type_;
    std::vector<std::string> problems_;
};

bool in_scale(int value, int lo, int hi) { return value >= lo && value <= hi; }

} // namespace

std::string trim(std::string_view text)
{
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto begin = text.find_first_not_of(ws);
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = text.find_last_not_of(ws);
    std::string out(text.substr(begin, end - begin + 1));
    // Ideographic space is common in CJK input.
    constexpr std::string_view ideographic_space = "\xE3\x80\x80";
    while (out.starts_with(ideographic_space)) {
        out.erase(0, ideographic_space.size());
    }
    while (out.ends_with(ideographic_space)) {
        out.erase(out.size() - ideographic_space.size());
    }
    return out;
}

int BasicConstraints::expected_pages(EpisodeKind kind) const
{
    return kind == EpisodeKind::Main ? episode_page_count : ending_page_count;
}

int BasicConstraints::total_min(EpisodeKind kind) const
{
    if (kind == EpisodeKind::Main && han_chars_total_min) {
        return *han_chars_total_min;
    }
    return han_chars_per_page_min * expected_pages(kind);
}

int BasicConstraints::total_max(EpisodeKind kind) const
{
    if (kind == EpisodeKind::Main && han_chars_total_max) {
        return *han_chars_total_max;
    }
    return han_chars_per_page_max * expected_pages(kind);
}

const Page* Episode::find_page(std::string_view page_id) const
{
    auto it = std::find_if(pages.begin(), pages.end(),
                           [&](const Page& p) { return p.page_id == page_id; });
    return it == pages.end() ? nullptr : &*it;
}

void check_invariants(const ChildAvatar& value)
{
    InvariantCollector c("ChildAvatar");
    c.require(!trim(value.nickname).empty(), "nickname must be non-empty after trimming");
    c.finish();
}

void check_invariants(const BasicConstraints& value)
{
    InvariantCollector c("BasicConstraints");
    c.require(value.episode_page_count >= 2, "episode_page_count must be >= 2");
    c.require(value.ending_page_count >= 1, "ending_page_count must be >= 1");
    c.require(value.han_chars_per_page_min >= 0, "han_chars_per_page_min must be >= 0");
    c.require(value.han_chars_per_page_max > 0, "han_chars_per_page_max must be positive");
    c.require(value.han_chars_per_page_min <= value.han_chars_per_page_max,
              "han_chars_per_page_min must not exceed han_chars_per_page_max");
    c.require(value.micro_interactions_max_per_episode >= 0,
              "micro_interactions_max_per_episode must be >= 0");
    c.require(value.record_voice_max == 1, "record_voice_max is fixed at 1");
    c.require(value.choice_max == 1, "choice_max is fixed at 1");
    const int pages = value.episode_page_count;
    const int lo = value.total_min(EpisodeKind::Main);
    const int hi = value.total_max(EpisodeKind::Main);
    c.require(lo >= 0, "han_chars_total_min must be >= 0");
    c.require(lo <= hi, "han_chars_total_min must not exceed han_chars_total_max");
    c.require(lo <= value.han_chars_per_page_max * pages,
              "han_chars_total_min unreachable with per-page maximum");
    c.require(hi >= value.han_chars_per_page_min * pages,
              "han_chars_total_max below per-page minimum times page count");
    c.finish();
}

void check_invariants(const StoryFramework& value)
{
    const auto report = validate_framework(value);
    if (!report.ok()) {
        fail(Errc::InvariantViolation, "StoryFramework: " + describe(report));
    }
}

void check_invariants(const RecapAndGoal& value)
{
    InvariantCollector c("RecapAndGoal");
    c.require(is_single_sentence(value.continuity_hooks.next_episode_seed),
              "next_episode_seed must be exactly one sentence");
    for (const auto& anchor : value.key_story_elements) {
        c.require(!trim(anchor).empty(), "key_story_elements entries must be non-empty");
    }
    for (const auto& anchor : value.continuity_hooks.carry_over_anchors) {
        c.require(!trim(anchor).empty(), "carry_over_anchors entries must be non-empty");
    }
    c.finish();
}

void check_invariants(const Interaction& value)
{
    InvariantCollector c("Interaction");
    if (value.type == InteractionType::None) {
        c.require(!value.event_key.has_value(), "event_key must be null when type is none");
    } else {
        c.require(value.event_key.has_value() && !value.event_key->empty(),
                  "event_key is required when type is not none");
    }
    c.finish();
}

void check_invariants(const Page& value)
{
    if (value.interaction) {
        check_invariants(*value.interaction);
    }
    InvariantCollector c("Page");
    c.require(value.page_no >= 1, "page_no is 1-based");
    c.require(!value.page_id.empty(), "page_id must be non-empty");
    const bool is_choice = value.interaction_type() == InteractionType::Choice;
    if (is_choice) {
        c.require(value.branch_choices.size() == 2,
                  "a choice page must have exactly 2 branch_choices");
    } else {
        c.require(value.branch_choices.empty(), "branch_choices only allowed on choice pages");
    }
    c.finish();
}

void check_invariants(const EpisodeContent& value)
{
    std::set<std::string> ids;
    for (const auto& page : value.pages) {
        check_invariants(page);
        if (!ids.insert(page.page_id).second) {
            fail(Errc::InvariantViolation, "Episode: duplicate page_id " + page.page_id);
        }
    }
}

void check_invariants(const Episode& value)
{
    check_invariants(content_of(value));
}

void check_invariants(const PostMealRecord& value)
{
    InvariantCollector c("PostMealRecord");
    c.require(!trim(value.target_food).empty(), "target_food must be non-empty");
    c.require(in_scale(value.baseline_try, kScaleMin, kScaleMax), "baseline_try must be 1-7");
    c.require(in_scale(value.try_level, kScaleMin, kScaleMax), "try_level must be 1-7");
    c.require(in_scale(value.intake, kScaleMin, kScaleMax), "intake must be 1-7");
    c.require(in_scale(value.resistance, kScaleMin, kScaleMax), "resistance must be 1-7");
    c.require(in_scale(value.emotion, kScaleMin, kScaleMax), "emotion must be 1-7");
    c.require(in_scale(value.parent_pressure, kScaleMin, kScaleMax),
              "parent_pressure must be 1-7");
    c.require(in_scale(value.helpfulness, kScaleMin, kScaleMax), "helpfulness must be 1-7");
    c.require(in_scale(value.self_rating, kSelfRatingMin, kSelfRatingMax),
              "self_rating must be 1-10");
    c.finish();
}

void check_invariants(const FeedbackMessage& value)
{
    InvariantCollector c("FeedbackMessage");
    c.require(!trim(value.text_cn).empty(), "text_cn must be non-empty");
    c.finish();
}

void check_invariants(const FeedbackText& value)
{
    InvariantCollector c("FeedbackText");
    c.require(!trim(value.text_cn).empty(), "text_cn must be non-empty");
    c.finish();
}

Episode make_episode(EpisodeContent content, std::string target_food, std::string framework_id,
                     EpisodeKind kind)
{
    Episode ep;
    ep.pages = std::move(content.pages);
    ep.visual_canon = std::move(content.visual_canon);
    ep.page_image_prompt_packages = std::move(content.page_image_prompt_packages);
    ep.target_food = std::move(target_food);
    ep.framework_id = std::move(framework_id);
    ep.kind = kind;
    return ep;
}

EpisodeContent content_of(const Episode& episode)
{
    return {episode.pages, episode.visual_canon, episode.page_image_prompt_packages};
}

} // namespace storyecho
