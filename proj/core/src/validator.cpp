#include "storyecho/validator.hpp"

#include "storyecho/unicode.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace storyecho {

bool ValidationReport::has(ViolationCode code) const
{
    return std::any_of(violations.begin(), violations.end(),
                       [code](const Violation& v) { return v.code == code; });
}

std::vector<ViolationCode> ValidationReport::codes() const
{
    std::set<ViolationCode> distinct;
    for (const auto& v : violations) {
        distinct.insert(v.code);
    }
    return {distinct.begin(), distinct.end()};
}

void ValidationReport::add(ViolationCode code, std::optional<std::string> page_id,
                           std::string detail)
{
    violations.push_back({code, std::move(page_id), std::move(detail)});
}

void ValidationReport::merge(const ValidationReport& other)
{
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

std::string describe(const ValidationReport& report)
{
    std::string out;
    for (const auto& v : report.violations) {
        if (!out.empty()) {
            out += '\n';
        }
        out += enum_name(v.code);
        if (v.page_id) {
            out += "[" + *v.page_id + "]";
        }
        out += ": " + v.detail;
    }
    return out;
}

bool is_snake_case_key(std::string_view key)
{
    if (key.empty() || key.front() < 'a' || key.front() > 'z') {
        return false;
    }
    return std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

ValidationReport validate_page_count(const Episode& episode, const BasicConstraints& constraints)
{
    ValidationReport report;
    const int expected = constraints.expected_pages(episode.kind);
    const int actual = static_cast<int>(episode.pages.size());
    if (actual != expected) {
        report.add(ViolationCode::PageCountMismatch, std::nullopt,
                   "expected " + std::to_string(expected) + " pages, got " +
                       std::to_string(actual));
    }
    return report;
}

ValidationReport validate_page_lengths(const Episode& episode, const BasicConstraints& constraints)
{
    ValidationReport report;
    const auto lo = static_cast<std::size_t>(constraints.han_chars_per_page_min);
    const auto hi = static_cast<std::size_t>(constraints.han_chars_per_page_max);
    std::size_t total = 0;
    for (const auto& page : episode.pages) {
        const std::size_t n = count_han_chars(page.page_text_cn);
        total += n;
        if (n < lo) {
            report.add(ViolationCode::PageTooShort, page.page_id,
                       std::to_string(n) + " Han chars < " + std::to_string(lo));
        } else if (n > hi) {
            report.add(ViolationCode::PageTooLong, page.page_id,
                       std::to_string(n) + " Han chars > " + std::to_string(hi));
        }
    }
    const auto total_lo = static_cast<std::size_t>(constraints.total_min(episode.kind));
    const auto total_hi = static_cast<std::size_t>(constraints.total_max(episode.kind));
    if (total < total_lo || total > total_hi) {
        report.add(ViolationCode::TotalLengthOutOfBand, std::nullopt,
                   std::to_string(total) + " Han chars outside [" + std::to_string(total_lo) +
                       ", " + std::to_string(total_hi) + "]");
    }
    return report;
}

namespace {

struct InteractionBudget {
    int micro = 0;
    int choice = 0;
    int record_voice = 0;
};

InteractionBudget budget_for(const Episode& episode, const BasicConstraints& constraints)
{
    if (episode.kind == EpisodeKind::EndingExtension) {
        return {std::min(constraints.micro_interactions_max_per_episode, 1), 0, 0};
    }
    return {constraints.micro_interactions_max_per_episode, constraints.choice_max,
            constraints.record_voice_max};
}

} // namespace

ValidationReport validate_interaction_budget(const Episode& episode,
                                             const BasicConstraints& constraints)
{
    ValidationReport report;
    const auto budget = budget_for(episode, constraints);
    int micro = 0;
    int choice = 0;
    int voice = 0;
    std::set<std::string> keys;
    for (const auto& page : episode.pages) {
        const auto type = page.interaction_type();
        switch (type) {
        case InteractionType::Tap:
        case InteractionType::Drag:
        case InteractionType::Mimic: ++micro; break;
        case InteractionType::Choice: ++choice; break;
        case InteractionType::RecordVoice: ++voice; break;
        case InteractionType::None: break;
        }
        const auto* key = page.interaction && page.interaction->event_key
                              ? &*page.interaction->event_key
                              : nullptr;
        if (type == InteractionType::None) {
            if (key) {
                report.add(ViolationCode::MalformedEventKey, page.page_id,
                           "event_key set on a non-interactive page");
            }
            continue;
        }
        if (!key || !is_snake_case_key(*key)) {
            report.add(ViolationCode::MalformedEventKey, page.page_id,
                       key ? "event_key '" + *key + "' is not snake_case"
                           : "interactive page without event_key");
            continue;
        }
        if (!keys.insert(*key).second) {
            report.add(ViolationCode::DuplicateEventKey, page.page_id,
                       "event_key '" + *key + "' already used");
        }
    }
    if (micro > budget.micro) {
        report.add(ViolationCode::MicroInteractionBudgetExceeded, std::nullopt,
                   std::to_string(micro) + " tap/drag/mimic pages > " +
                       std::to_string(budget.micro));
    }
    if (choice > budget.choice) {
        report.add(ViolationCode::ChoiceBudgetExceeded, std::nullopt,
                   std::to_string(choice) + " choice pages > " + std::to_string(budget.choice));
    }
    if (voice > budget.record_voice) {
        report.add(ViolationCode::RecordVoiceBudgetExceeded, std::nullopt,
                   std::to_string(voice) + " record_voice pages > " +
                       std::to_string(budget.record_voice));
    }
    return report;
}

namespace {

constexpr int kMaxMergeHops = 2;

// Successor lists over page indices. Dangling references are reported and
// dropped; duplicate page ids resolve to their first occurrence.
struct PageGraph {
    std::vector<std::vector<std::size_t>> successors;
    std::vector<std::vector<std::size_t>> branch_targets;
    std::vector<bool> terminal;
};

PageGraph build_graph(const Episode& episode, ValidationReport& report)
{
    const auto& pages = episode.pages;
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (!index.emplace(pages[i].page_id, i).second) {
            report.add(ViolationCode::DanglingPageReference, pages[i].page_id,
                       "page_id is not unique; references to it are ambiguous");
        }
    }
    PageGraph graph;
    graph.successors.resize(pages.size());
    graph.branch_targets.resize(pages.size());
    graph.terminal.resize(pages.size());
    auto resolve = [&](std::size_t from, const std::string& target, std::string_view what)
        -> std::optional<std::size_t> {
        auto it = index.find(target);
        if (it == index.end()) {
            report.add(ViolationCode::DanglingPageReference, pages[from].page_id,
                       std::string(what) + " '" + target + "' does not exist");
            return std::nullopt;
        }
        return it->second;
    };
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const auto& page = pages[i];
        auto& succ = graph.successors[i];
        if (page.next_page_id) {
            if (auto j = resolve(i, *page.next_page_id, "next_page_id")) {
                succ.push_back(*j);
            }
        }
        for (const auto& branch : page.branch_choices) {
            if (auto j = resolve(i, branch.next_page_id, "branch target")) {
                graph.branch_targets[i].push_back(*j);
                if (std::find(succ.begin(), succ.end(), *j) == succ.end()) {
                    succ.push_back(*j);
                }
            }
        }
        graph.terminal[i] = !page.next_page_id && page.branch_choices.empty();
    }
    return graph;
}

std::vector<int> bfs_distances(const PageGraph& graph, std::size_t from, int max_depth)
{
    std::vector<int> dist(graph.successors.size(), -1);
    std::deque<std::size_t> queue{from};
    dist[from] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (dist[u] == max_depth) {
            continue;
        }
        for (auto v : graph.successors[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

std::optional<std::size_t> find_cycle(const PageGraph& graph)
{
    enum class Mark { White, Grey, Black };
    const auto n = graph.successors.size();
    std::vector<Mark> mark(n, Mark::White);
    for (std::size_t root = 0; root < n; ++root) {
        if (mark[root] != Mark::White) {
            continue;
        }
        // Iterative DFS: (node, next successor slot).
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        mark[root] = Mark::Grey;
        while (!stack.empty()) {
            auto& [u, slot] = stack.back();
            if (slot < graph.successors[u].size()) {
                const auto v = graph.successors[u][slot++];
                if (mark[v] == Mark::Grey) {
                    return v;
                }
                if (mark[v] == Mark::White) {
                    mark[v] = Mark::Grey;
                    stack.emplace_back(v, 0);
                }
            } else {
                mark[u] = Mark::Black;
                stack.pop_back();
            }
        }
    }
    return std::nullopt;
}

} // namespace

ValidationReport validate_page_graph(const Episode& episode)
{
    ValidationReport report;
    const auto& pages = episode.pages;
    if (pages.empty()) {
        return report;
    }
    for (const auto& page : pages) {
        const bool is_choice = page.interaction_type() == InteractionType::Choice;
        if (is_choice && page.branch_choices.size() != 2) {
            report.add(ViolationCode::BranchCountViolation, page.page_id,
                       "choice page has " + std::to_string(page.branch_choices.size()) +
                           " branch_choices, expected 2");
        } else if (!is_choice && !page.branch_choices.empty()) {
            report.add(ViolationCode::BranchCountViolation, page.page_id,
                       "branch_choices on a non-choice page");
        }
    }

    const auto graph = build_graph(episode, report);
    const std::size_t last = pages.size() - 1;

    if (!graph.terminal[last]) {
        report.add(ViolationCode::FinalPageNotTerminal, pages[last].page_id,
                   "final page must have next_page_id = null");
    }
    for (std::size_t i = 0; i < last; ++i) {
        if (graph.terminal[i]) {
            report.add(ViolationCode::FinalPageNotTerminal, pages[i].page_id,
                       "only the final page may end the story");
        }
    }

    const auto reach = bfs_distances(graph, 0, static_cast<int>(pages.size()));
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (reach[i] < 0) {
            report.add(ViolationCode::UnreachablePage, pages[i].page_id,
                       "not reachable from the first page");
        }
    }

    if (auto at = find_cycle(graph)) {
        report.add(ViolationCode::CycleDetected, pages[*at].page_id,
                   "page graph contains a cycle");
    }

    for (std::size_t i = 0; i < pages.size(); ++i) {
        const auto& targets = graph.branch_targets[i];
        if (pages[i].interaction_type() != InteractionType::Choice || targets.size() != 2 ||
            pages[i].branch_choices.size() != 2) {
            continue;
        }
        const auto from_a = bfs_distances(graph, targets[0], kMaxMergeHops);
        const auto from_b = bfs_distances(graph, targets[1], kMaxMergeHops);
        bool merged = false;
        for (std::size_t k = 0; k < pages.size() && !merged; ++k) {
            merged = from_a[k] >= 0 && from_b[k] >= 0;
        }
        if (!merged) {
            report.add(ViolationCode::BranchMergeTooFar, pages[i].page_id,
                       "branches do not reach a common page within 2 pages");
        }
    }
    return report;
}

ValidationReport validate_prompt_packages(const Episode& episode)
{
    ValidationReport report;
    std::map<std::string, int, std::less<>> page_no_by_id;
    for (const auto& page : episode.pages) {
        page_no_by_id.emplace(page.page_id, page.page_no);
    }
    std::map<std::string, int, std::less<>> seen;
    for (const auto& pkg : episode.page_image_prompt_packages) {
        auto it = page_no_by_id.find(pkg.page_id);
        if (it == page_no_by_id.end()) {
            report.add(ViolationCode::PromptPackageOrphan, pkg.page_id,
                       "prompt package for unknown page");
            continue;
        }
        if (++seen[pkg.page_id] > 1) {
            report.add(ViolationCode::PromptPackageOrphan, pkg.page_id,
                       "more than one prompt package for this page");
            continue;
        }
        if (it->second != pkg.page_no) {
            report.add(ViolationCode::PromptPackageOrphan, pkg.page_id,
                       "prompt package page_no " + std::to_string(pkg.page_no) +
                           " does not match page " + std::to_string(it->second));
        }
    }
    for (const auto& page : episode.pages) {
        if (!seen.contains(page.page_id)) {
            report.add(ViolationCode::PromptPackageMissing, page.page_id,
                       "no image prompt package for page");
        }
    }
    return report;
}

ValidationReport validate_episode(const Episode& episode, const BasicConstraints& constraints)
{
    ValidationReport report = validate_page_count(episode, constraints);
    report.merge(validate_page_lengths(episode, constraints));
    report.merge(validate_interaction_budget(episode, constraints));
    report.merge(validate_page_graph(episode));
    report.merge(validate_prompt_packages(episode));
    return report;
}

ValidationReport validate_feedback_text(std::string_view text_cn, std::string_view nickname,
                                        std::string_view food,
                                        std::span<const std::string> recent_phrases)
{
    ValidationReport report;
    const auto han = count_han_chars(text_cn);
    if (han > kFeedbackMaxHan) {
        report.add(ViolationCode::LengthViolation, std::nullopt,
                   std::to_string(han) + " Han chars > " + std::to_string(kFeedbackMaxHan));
    }
    const auto nick_count = count_occurrences(text_cn, nickname);
    if (nick_count != 1) {
        report.add(ViolationCode::NicknameCountViolation, std::nullopt,
                   "nickname appears " + std::to_string(nick_count) + " times");
    }
    if (count_occurrences(text_cn, food) < 1) {
        report.add(ViolationCode::FoodMentionMissing, std::nullopt, "food is never mentioned");
    }
    const auto opening = first_sentence(text_cn);
    if (count_occurrences(opening, nickname) > 0 || count_occurrences(opening, food) > 0) {
        report.add(ViolationCode::OpeningContainsIdentity, std::nullopt,
                   "first sentence mentions the nickname or the food");
    }
    const auto prefix = prefix_code_points(text_cn, kOpeningPrefixLength);
    for (const auto& phrase : recent_phrases) {
        if (!prefix.empty() && prefix == prefix_code_points(phrase, kOpeningPrefixLength)) {
            report.add(ViolationCode::RecentPhrasePrefixCollision, std::nullopt,
                       "opening repeats a recent phrase: " + phrase);
            break;
        }
    }
    const auto cps = decode_utf8(text_cn);
    if (std::any_of(cps.begin(), cps.end(),
                    [](char32_t cp) { return is_latin_letter(cp) || is_emoji(cp); })) {
        report.add(ViolationCode::ForbiddenScriptDetected, std::nullopt,
                   "Latin letters or emoji are not allowed");
    }
    return report;
}

bool contains_placeholder(std::string_view text)
{
    for (auto [open, close] : {std::pair{'{', '}'}, std::pair{'<', '>'}}) {
        const auto a = text.find(open);
        if (a != std::string_view::npos && text.find(close, a + 1) != std::string_view::npos) {
            return true;
        }
    }
    return false;
}

ValidationReport validate_framework(const StoryFramework& framework)
{
    ValidationReport report;
    std::set<std::string> locations;
    for (const auto& loc : framework.world_setting.core_locations) {
        if (auto t = trim(loc); !t.empty()) {
            locations.insert(std::move(t));
        }
    }
    if (locations.size() < 4) {
        report.add(ViolationCode::TooFewLocations, std::nullopt,
                   std::to_string(locations.size()) + " distinct core_locations, need 4");
    }

    std::vector<std::pair<std::string, const std::string*>> fields{
        {"world_setting.concept", &framework.world_setting.concept_text},
        {"recurring_elements.recurring_object", &framework.recurring_elements.recurring_object},
        {"recurring_elements.recurring_phrase", &framework.recurring_elements.recurring_phrase},
        {"recurring_elements.opening_ritual", &framework.recurring_elements.opening_ritual},
        {"recurring_elements.closing_hook_style",
         &framework.recurring_elements.closing_hook_style},
        {"recurring_elements.episode_trigger_style",
         &framework.recurring_elements.episode_trigger_style},
        {"child_role", &framework.child_role},
    };
    for (std::size_t i = 0; i < framework.world_setting.core_locations.size(); ++i) {
        fields.emplace_back("world_setting.core_locations[" + std::to_string(i) + "]",
                            &framework.world_setting.core_locations[i]);
    }
    for (std::size_t i = 0; i < framework.world_rules.size(); ++i) {
        fields.emplace_back("world_rules[" + std::to_string(i) + "]",
                            &framework.world_rules[i]);
    }
    for (std::size_t i = 0; i < framework.helper_roles.size(); ++i) {
        fields.emplace_back("helper_roles[" + std::to_string(i) + "].name",
                            &framework.helper_roles[i].name);
        fields.emplace_back("helper_roles[" + std::to_string(i) + "].role",
                            &framework.helper_roles[i].role);
    }
    for (const auto& [name, value] : fields) {
        if (contains_placeholder(*value)) {
            report.add(ViolationCode::PlaceholderDetected, std::nullopt,
                       name + " contains a placeholder: " + *value);
        }
    }

    if (trim(framework.recurring_elements.recurring_phrase).empty()) {
        report.add(ViolationCode::EmptyRecurringPhrase, std::nullopt,
                   "recurring_phrase is empty");
    }
    return report;
}

namespace {

// Narration only: quoted dialogue may speak in the first person.
std::string strip_quoted(std::string_view text)
{
    const auto cps = decode_utf8(text);
    std::u32string out;
    char32_t closing = 0;
    for (char32_t cp : cps) {
        if (closing) {
            if (cp == closing) {
                closing = 0;
            }
            continue;
        }
        switch (cp) {
        case U'“': closing = U'”'; break;
        case U'「': closing = U'」'; break;
        case U'『': closing = U'』'; break;
        case U'"': closing = U'"'; break;
        default: out.push_back(cp);
        }
    }
    return encode_utf8(out);
}

} // namespace

ValidationReport check_first_person(const Episode& episode,
                                    std::span<const std::string> pronouns)
{
    ValidationReport report;
    for (const auto& page : episode.pages) {
        const auto narration = strip_quoted(page.page_text_cn);
        for (const auto& pronoun : pronouns) {
            if (count_occurrences(narration, pronoun) > 0) {
                report.add(ViolationCode::FirstPersonNarration, page.page_id,
                           "narration uses first-person '" + pronoun + "'");
                break;
            }
        }
    }
    return report;
}

ValidationReport check_food_presence(const Episode& episode, std::string_view food,
                                     bool require_in_prompts)
{
    ValidationReport report;
    const bool in_text = std::any_of(episode.pages.begin(), episode.pages.end(), [&](const Page& p) {
        return count_occurrences(p.page_text_cn, food) > 0;
    });
    if (!in_text) {
        report.add(ViolationCode::FoodOverrideMissing, std::nullopt,
                   "food '" + std::string(food) + "' missing from page texts");
    }
    if (require_in_prompts) {
        const auto& pkgs = episode.page_image_prompt_packages;
        const bool in_prompt = std::any_of(pkgs.begin(), pkgs.end(), [&](const PagePromptPackage& p) {
            return count_occurrences(p.image_prompt_suffix_en, food) > 0;
        });
        if (!in_prompt) {
            report.add(ViolationCode::FoodOverrideMissing, std::nullopt,
                       "food '" + std::string(food) + "' missing from image prompt suffixes");
        }
    }
    return report;
}

ValidationReport validate_recap(const RecapAndGoal& recap,
                                std::span<const std::string> stage_denylist)
{
    ValidationReport report;
    if (trim(recap.recap_cn).empty() || trim(recap.micro_goal).empty()) {
        report.add(ViolationCode::EmptyContinuityAnchor, std::nullopt,
                   "recap_cn and micro_goal must be non-empty");
    }
    std::string goal_lower = recap.micro_goal;
    std::transform(goal_lower.begin(), goal_lower.end(), goal_lower.begin(), [](unsigned char c) {
        return static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    });
    for (const auto& term : stage_denylist) {
        if (count_occurrences(goal_lower, term) > 0) {
            report.add(ViolationCode::StageVocabularyDetected, std::nullopt,
                       "micro_goal uses stage vocabulary '" + term + "'");
            break;
        }
    }
    if (!is_single_sentence(recap.continuity_hooks.next_episode_seed)) {
        report.add(ViolationCode::SeedNotSingleSentence, std::nullopt,
                   "next_episode_seed must be one sentence");
    }
    const auto empty = [](const std::string& s) { return trim(s).empty(); };
    if (std::any_of(recap.key_story_elements.begin(), recap.key_story_elements.end(), empty) ||
        std::any_of(recap.continuity_hooks.carry_over_anchors.begin(),
                    recap.continuity_hooks.carry_over_anchors.end(), empty)) {
        report.add(ViolationCode::EmptyContinuityAnchor, std::nullopt,
                   "continuity anchors must be non-empty");
    }
    return report;
}

ValidationReport validate_extension_chain(const Episode& main_episode, const Episode& extension)
{
    ValidationReport report;
    if (main_episode.pages.empty() || extension.pages.empty()) {
        return report;
    }
    Episode combined = main_episode;
    auto& tail = combined.pages.back();
    if (!tail.next_page_id && tail.branch_choices.empty()) {
        tail.next_page_id = extension.pages.front().page_id;
    }
    combined.pages.insert(combined.pages.end(), extension.pages.begin(), extension.pages.end());
    report.merge(validate_page_graph(combined));

    std::set<std::string> main_keys;
    for (const auto& page : main_episode.pages) {
        if (page.interaction && page.interaction->event_key) {
            main_keys.insert(*page.interaction->event_key);
        }
    }
    for (const auto& page : extension.pages) {
        if (page.interaction && page.interaction->event_key &&
            main_keys.contains(*page.interaction->event_key)) {
            report.add(ViolationCode::DuplicateEventKey, page.page_id,
                       "event_key '" + *page.interaction->event_key +
                           "' already used by the main episode");
        }
    }
    return report;
}

} // namespace storyecho
