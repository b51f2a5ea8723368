#include "support.hpp"

#include "cli.hpp"

#include <storyecho/unicode.hpp>

#include <httplib.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <regex>
#include <thread>

namespace storyecho::testing {

// -- TempDir ------------------------------------------------------------------

TempDir::TempDir()
{
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("storyecho-test-" + std::to_string(::getpid()) + "-" + std::to_string(stamp) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

// -- ICU reference ---------------------------------------------------------------

bool icu_is_han(char32_t cp)
{
    UErrorCode status = U_ZERO_ERROR;
    const auto script = uscript_getScript(static_cast<UChar32>(cp), &status);
    if (U_FAILURE(status) || script != USCRIPT_HAN) {
        return false;
    }
    return (U_MASK(u_charType(static_cast<UChar32>(cp))) & U_GC_P_MASK) == 0;
}

bool icu_is_assigned(char32_t cp)
{
    return u_charType(static_cast<UChar32>(cp)) != U_UNASSIGNED;
}

std::size_t icu_count_han(const std::string& utf8)
{
    const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    std::size_t n = 0;
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        if (c >= 0 && icu_is_han(static_cast<char32_t>(c))) {
            ++n;
        }
    }
    return n;
}

std::string icu_encode(const std::u32string& cps)
{
    std::string out;
    for (char32_t cp : cps) {
        uint8_t buf[4];
        int32_t len = 0;
        U8_APPEND_UNSAFE(buf, len, static_cast<UChar32>(cp));
        out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
    }
    return out;
}

namespace {

std::u32string icu_decode(const std::string& utf8)
{
    const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    std::u32string out;
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(s, i, length, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

const std::vector<std::string>& clause_pool()
{
    static const std::vector<std::string> pool{
        "小厨房里飘来淡淡的香味",   "窗外的阳光照在餐桌上",   "大家围坐在一起轻轻说话",
        "盘子里的颜色像一道彩虹",   "老师笑着点了点头",       "小手轻轻碰了碰叶子",
        "风吹过菜园里的篱笆",       "篮子里装满了新鲜的蔬菜", "每个人都可以慢慢来",
        "小鸟在树枝上唱着歌",       "桌上的小勺子闪闪发亮",   "妈妈把碗摆得整整齐齐",
        "绿色的叶子上挂着水珠",     "大家一起数了数盘子",     "今天的午饭特别安静",
        "故事书翻到了新的一页",     "门口的小花开得正好",     "小伙伴们拍了拍手",
        "锅里冒出白白的热气",       "桌布上画着好多小圆点",
    };
    return pool;
}

} // namespace

std::string han_text(int han, std::uint64_t seed, const std::string& lead)
{
    std::mt19937_64 rng(seed);
    const auto& pool = clause_pool();
    std::u32string out = icu_decode(lead);
    int count = static_cast<int>(icu_count_han(lead));
    bool first = out.empty();
    while (count < han) {
        if (!first) {
            out += (rng() % 3 == 0) ? U"。" : U"，";
        }
        first = false;
        for (char32_t cp : icu_decode(pool[rng() % pool.size()])) {
            if (count == han) {
                break;
            }
            out.push_back(cp);
            ++count;
        }
    }
    out += U"。";
    return icu_encode(out);
}

// -- hand-built episodes ---------------------------------------------------------

namespace {

std::string two_digits(int n)
{
    return (n < 10 ? "0" : "") + std::to_string(n);
}

std::string instruction_for(InteractionType type)
{
    switch (type) {
    case InteractionType::Tap: return "轻轻点一点盘子";
    case InteractionType::Drag: return "把小篮子拖到桌上";
    case InteractionType::Choice: return "选一条小路";
    case InteractionType::Mimic: return "学一学闻味道的样子";
    case InteractionType::RecordVoice: return "说一说看到的颜色";
    case InteractionType::None: break;
    }
    return "";
}

std::vector<PageSpec> linear(int n)
{
    std::vector<PageSpec> pages(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pages[static_cast<std::size_t>(i)].next = i + 1 < n ? i + 1 : -1;
    }
    return pages;
}

void choice(std::vector<PageSpec>& pages, int at, int a, int b)
{
    auto& p = pages[static_cast<std::size_t>(at)];
    p.type = InteractionType::Choice;
    p.next = a;
    p.branches = {a, b};
}

void interact(std::vector<PageSpec>& pages, int at, InteractionType type)
{
    pages[static_cast<std::size_t>(at)].type = type;
}

std::map<std::string, std::size_t> index_of(const Episode& ep)
{
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < ep.pages.size(); ++i) {
        idx.emplace(ep.pages[i].page_id, i);
    }
    return idx;
}

} // namespace

Episode build_episode(const EpisodeSpec& spec, std::uint64_t seed)
{
    Episode ep;
    ep.target_food = spec.food;
    ep.framework_id = "fw-corpus";
    ep.kind = EpisodeKind::Main;
    ep.visual_canon = {"soft watercolor picture book, warm light",
                       "the same preschool child with short black hair and a yellow raincoat",
                       "a cozy kindergarten classroom and a family kitchen",
                       "no text, no scary faces, no extra fingers"};
    std::mt19937_64 rng(seed);
    auto id = [&](int i) { return spec.id_prefix + two_digits(i + 1); };
    for (std::size_t i = 0; i < spec.pages.size(); ++i) {
        const auto& ps = spec.pages[i];
        const int n = static_cast<int>(i);
        Page page;
        page.page_no = n + 1;
        page.page_id = id(n);
        std::string lead = spec.nickname;
        if (i % 3 == 0) {
            lead += "看见了" + spec.food;
        }
        page.page_text_cn = han_text(66 + static_cast<int>(rng() % 9), rng(), lead);
        if (ps.next >= 0) {
            page.next_page_id = id(ps.next);
        }
        if (ps.type != InteractionType::None) {
            Interaction in;
            in.type = ps.type;
            in.instruction = instruction_for(ps.type);
            in.event_key = std::string(enum_name(ps.type)) + "_" + two_digits(n + 1);
            in.ext.encouragement = "做得真好";
            page.interaction = in;
        }
        char label = 'a';
        for (int target : ps.branches) {
            page.branch_choices.push_back({std::string("choice_") + label,
                                           label == 'a' ? "走向小菜园" : "走向小厨房", id(target)});
            ++label;
        }
        ep.pages.push_back(std::move(page));
        ep.page_image_prompt_packages.push_back(
            {n + 1, id(n), "page " + std::to_string(n + 1) + ", the child looking at " + spec.food});
    }
    return ep;
}

std::vector<EpisodeSpec> corpus_specs()
{
    std::vector<EpisodeSpec> specs;
    auto add = [&](std::string name, std::string food, std::string nick,
                   std::vector<PageSpec> pages, std::string prefix = "p") {
        specs.push_back({std::move(name), std::move(food), std::move(nick), std::move(pages),
                         std::move(prefix)});
    };
    using T = InteractionType;

    add("linear_plain", "西兰花", "乐乐", linear(12));

    auto p = linear(12);
    interact(p, 2, T::Tap);
    interact(p, 5, T::Drag);
    interact(p, 8, T::Mimic);
    interact(p, 10, T::RecordVoice);
    add("linear_micro", "胡萝卜", "豆豆", p);

    p = linear(12);
    choice(p, 4, 5, 6);
    add("choice_rejoin_7", "青椒", "明明", p);

    p = linear(12);
    choice(p, 3, 4, 5);
    p[4].next = 6;
    interact(p, 1, T::Tap);
    interact(p, 9, T::RecordVoice);
    add("choice_diamond", "冬瓜", "朵朵", p);

    p = linear(12);
    choice(p, 7, 8, 9);
    p[8].next = 10;
    interact(p, 1, T::Tap);
    interact(p, 2, T::Mimic);
    interact(p, 4, T::Drag);
    interact(p, 5, T::Tap);
    interact(p, 10, T::RecordVoice);
    add("full_budget", "豆腐", "安安", p);

    p = linear(12);
    choice(p, 1, 2, 3);
    p[2].next = 4;
    interact(p, 6, T::Mimic);
    add("choice_early", "茄子", "乐乐", p);

    p = linear(12);
    choice(p, 9, 10, 11);
    interact(p, 3, T::Drag);
    add("choice_final_merge", "菠菜", "小雨", p);

    p = linear(12);
    interact(p, 0, T::Tap);
    interact(p, 1, T::Drag);
    interact(p, 2, T::Mimic);
    interact(p, 3, T::Tap);
    interact(p, 11, T::RecordVoice);
    add("front_loaded", "南瓜", "果果", p);

    p = linear(12);
    choice(p, 5, 6, 8);
    p[7].next = 9;
    add("choice_two_hop", "芹菜", "天天", p);

    p = linear(12);
    choice(p, 2, 3, 4);
    p[3].next = 5;
    interact(p, 6, T::RecordVoice);
    interact(p, 8, T::Tap);
    add("custom_ids", "蘑菇", "贝贝", p, "scene_");

    p = linear(12);
    interact(p, 5, T::RecordVoice);
    interact(p, 11, T::Tap);
    add("voice_only", "苦瓜", "多多", p);

    return specs;
}

std::vector<Episode> hand_built_corpus()
{
    std::vector<Episode> out;
    std::uint64_t seed = 1000;
    for (const auto& spec : corpus_specs()) {
        out.push_back(build_episode(spec, seed++));
    }
    return out;
}

int choice_index(const Episode& episode)
{
    for (std::size_t i = 0; i < episode.pages.size(); ++i) {
        if (episode.pages[i].interaction_type() == InteractionType::Choice) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::vector<int> plain_pages(const Episode& episode)
{
    const auto idx = index_of(episode);
    std::vector<std::vector<std::size_t>> incoming(episode.pages.size());
    for (std::size_t i = 0; i < episode.pages.size(); ++i) {
        const auto& page = episode.pages[i];
        if (page.next_page_id && idx.contains(*page.next_page_id)) {
            incoming[idx.at(*page.next_page_id)].push_back(i);
        }
        for (const auto& b : page.branch_choices) {
            if (idx.contains(b.next_page_id)) {
                incoming[idx.at(b.next_page_id)].push_back(i);
            }
        }
    }
    std::vector<int> out;
    for (std::size_t i = 1; i + 1 < episode.pages.size(); ++i) {
        const auto& page = episode.pages[i];
        if (page.interaction_type() != InteractionType::None || !page.branch_choices.empty() ||
            !page.next_page_id || incoming[i].size() != 1) {
            continue;
        }
        if (episode.pages[incoming[i][0]].interaction_type() == InteractionType::Choice) {
            continue;
        }
        out.push_back(static_cast<int>(i));
    }
    return out;
}

// -- mutations ---------------------------------------------------------------------

namespace {

Page& page_at(Episode& ep, int i)
{
    return ep.pages[static_cast<std::size_t>(i)];
}

Page* find(Episode& ep, const std::string& id)
{
    for (auto& p : ep.pages) {
        if (p.page_id == id) {
            return &p;
        }
    }
    return nullptr;
}

int position(const Episode& ep, const std::string& id)
{
    for (std::size_t i = 0; i < ep.pages.size(); ++i) {
        if (ep.pages[i].page_id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Page* predecessor(Episode& ep, const std::string& id)
{
    for (auto& p : ep.pages) {
        if (p.next_page_id == id && p.interaction_type() != InteractionType::Choice) {
            return &p;
        }
    }
    return nullptr;
}

int count_type(const Episode& ep, std::initializer_list<InteractionType> types)
{
    int n = 0;
    for (const auto& p : ep.pages) {
        if (std::find(types.begin(), types.end(), p.interaction_type()) != types.end()) {
            ++n;
        }
    }
    return n;
}

void make_interactive(Page& page, InteractionType type, const std::string& key)
{
    Interaction in;
    in.type = type;
    in.instruction = "试一试";
    in.event_key = key;
    page.interaction = in;
}

std::vector<int> none_pages(const Episode& ep)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < ep.pages.size(); ++i) {
        if (ep.pages[i].interaction_type() == InteractionType::None &&
            ep.pages[i].branch_choices.empty()) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

std::vector<int> interactive_pages(const Episode& ep)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < ep.pages.size(); ++i) {
        if (ep.pages[i].interaction_type() != InteractionType::None) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

int total_han(const Episode& ep)
{
    int n = 0;
    for (const auto& p : ep.pages) {
        n += static_cast<int>(icu_count_han(p.page_text_cn));
    }
    return n;
}

void erase_package(Episode& ep, const std::string& id)
{
    auto& pk = ep.page_image_prompt_packages;
    pk.erase(std::remove_if(pk.begin(), pk.end(),
                            [&](const PagePromptPackage& p) { return p.page_id == id; }),
             pk.end());
}

// Converts plain page `a` into a choice between `first` and `second`.
void to_choice(Page& a, const std::string& first, const std::string& second,
               const std::string& key)
{
    make_interactive(a, InteractionType::Choice, key);
    a.next_page_id = first;
    a.branch_choices = {{"choice_a", "左边", first}, {"choice_b", "右边", second}};
}

// Adds a choice on a plain run a -> b -> c, branching to b and c.
bool add_choice(Episode& ep, const std::string& key)
{
    const auto plain = plain_pages(ep);
    for (std::size_t i = 0; i < ep.pages.size(); ++i) {
        auto& a = ep.pages[i];
        if (a.interaction_type() != InteractionType::None || !a.branch_choices.empty() ||
            !a.next_page_id) {
            continue;
        }
        const int b = position(ep, *a.next_page_id);
        if (std::find(plain.begin(), plain.end(), b) == plain.end()) {
            continue;
        }
        const auto& next_b = page_at(ep, b).next_page_id;
        if (!next_b) {
            continue;
        }
        to_choice(a, page_at(ep, b).page_id, *next_b, key);
        return true;
    }
    return false;
}

using Mutants = std::vector<Mutant>;
using Corpus = std::vector<Episode>;

Mutant mutant(std::string label, Episode ep, BasicConstraints c = {})
{
    return {std::move(label), std::move(ep), c};
}

Mutants page_count(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const auto plain = plain_pages(base);
        if (!plain.empty()) {
            Episode ep = base;
            const auto victim = page_at(ep, plain.front());
            predecessor(ep, victim.page_id)->next_page_id = victim.next_page_id;
            ep.pages.erase(ep.pages.begin() + plain.front());
            erase_package(ep, victim.page_id);
            out.push_back(mutant("remove " + victim.page_id, ep));
        }
        {
            Episode ep = base;
            Page intro;
            intro.page_no = 99;
            intro.page_id = "intro";
            intro.page_text_cn = han_text(66, 7);
            intro.next_page_id = ep.pages.front().page_id;
            ep.pages.insert(ep.pages.begin(), intro);
            ep.page_image_prompt_packages.push_back({99, "intro", "cover page"});
            out.push_back(mutant("prepend intro page", ep));
        }
        BasicConstraints c;
        c.episode_page_count = 13;
        out.push_back(mutant("constraints expect 13 pages", base, c));
    }
    return out;
}

Mutants page_too_short(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        int k = 0;
        for (int han : {59, 45, 30}) {
            Episode ep = base;
            const int at = (k++ * 5 + 1) % static_cast<int>(ep.pages.size());
            page_at(ep, at).page_text_cn = han_text(han, 3);
            out.push_back(mutant(std::to_string(han) + " Han on page " + std::to_string(at), ep));
        }
    }
    return out;
}

Mutants page_too_long(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        int k = 0;
        for (int han : {81, 90, 100}) {
            Episode ep = base;
            const int at = (k++ * 4 + 2) % static_cast<int>(ep.pages.size());
            page_at(ep, at).page_text_cn = han_text(han, 4);
            out.push_back(mutant(std::to_string(han) + " Han on page " + std::to_string(at), ep));
        }
    }
    return out;
}

Mutants total_band(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const int total = total_han(base);
        BasicConstraints a;
        a.han_chars_total_min = total + 1;
        out.push_back(mutant("total_min above total", base, a));
        BasicConstraints b;
        b.han_chars_total_max = total - 1;
        out.push_back(mutant("total_max below total", base, b));
        BasicConstraints c;
        c.han_chars_total_min = total + 60;
        out.push_back(mutant("total_min far above total", base, c));
    }
    return out;
}

Mutants micro_budget(const Corpus& corpus)
{
    Mutants out;
    const BasicConstraints defaults;
    for (const auto& base : corpus) {
        for (auto type : {InteractionType::Tap, InteractionType::Drag, InteractionType::Mimic}) {
            Episode ep = base;
            auto free = none_pages(ep);
            int micro =
                count_type(ep, {InteractionType::Tap, InteractionType::Drag, InteractionType::Mimic});
            std::size_t next = 0;
            while (micro <= defaults.micro_interactions_max_per_episode && next < free.size()) {
                auto& page = page_at(ep, free[next]);
                make_interactive(page, type, "extra_" + std::to_string(next++));
                ++micro;
            }
            if (micro > defaults.micro_interactions_max_per_episode) {
                out.push_back(mutant(std::string("extra ") + std::string(enum_name(type)), ep));
            }
        }
    }
    return out;
}

Mutants choice_budget(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        Episode ep = base;
        int n = count_type(ep, {InteractionType::Choice});
        int k = 0;
        while (n < 2 && add_choice(ep, "extra_choice_" + std::to_string(k++))) {
            ++n;
        }
        if (n == 2) {
            out.push_back(mutant("two choice pages", ep));
        }
    }
    return out;
}

Mutants voice_budget(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        Episode ep = base;
        int n = count_type(ep, {InteractionType::RecordVoice});
        const auto free = none_pages(ep);
        for (std::size_t i = 0; n < 2 && i < free.size(); ++i, ++n) {
            make_interactive(page_at(ep, free[free.size() - 1 - i]), InteractionType::RecordVoice,
                             "extra_voice_" + std::to_string(i));
        }
        out.push_back(mutant("two record_voice pages", ep));
    }
    return out;
}

Mutants duplicate_key(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const auto pages = interactive_pages(base);
        for (std::size_t j = 1; j < pages.size() && j < 3; ++j) {
            Episode ep = base;
            page_at(ep, pages[j]).interaction->event_key =
                page_at(ep, pages[0]).interaction->event_key;
            out.push_back(mutant("key of " + page_at(ep, pages[j]).page_id + " repeated", ep));
        }
    }
    return out;
}

Mutants malformed_key(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const auto pages = interactive_pages(base);
        if (pages.empty()) {
            continue;
        }
        for (const char* key : {"TapHere", "9_tap", "tap-here"}) {
            Episode ep = base;
            page_at(ep, pages[0]).interaction->event_key = key;
            out.push_back(mutant(std::string("key ") + key, ep));
        }
        Episode ep = base;
        page_at(ep, pages[0]).interaction->event_key.reset();
        out.push_back(mutant("interactive page without key", ep));
    }
    return out;
}

Mutants dangling(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const int c = choice_index(base);
        if (c < 0) {
            continue;
        }
        for (const char* target : {"p99", "missing_page", ""}) {
            Episode ep = base;
            page_at(ep, c).next_page_id = target;
            out.push_back(mutant(std::string("choice next -> '") + target + "'", ep));
        }
    }
    return out;
}

Mutants final_not_terminal(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const int last = static_cast<int>(base.pages.size()) - 1;
        for (int k : {1, last / 2, last - 1}) {
            Episode ep = base;
            std::swap(ep.pages[static_cast<std::size_t>(k)], ep.pages.back());
            out.push_back(mutant("terminal page moved to position " + std::to_string(k), ep));
        }
    }
    return out;
}

Mutants unreachable(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const auto plain = plain_pages(base);
        for (std::size_t j = 0; j < plain.size() && j < 3; ++j) {
            Episode ep = base;
            const auto& skipped = page_at(ep, plain[j]);
            predecessor(ep, skipped.page_id)->next_page_id = skipped.next_page_id;
            out.push_back(mutant("skip " + skipped.page_id, ep));
        }
    }
    return out;
}

Mutants cycle(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const int c = choice_index(base);
        if (c >= 0) {
            Episode ep = base;
            auto& page = page_at(ep, c);
            page.branch_choices[0].next_page_id = predecessor(ep, page.page_id)->page_id;
            out.push_back(mutant("branch back to predecessor", ep));
            continue;
        }
        const auto plain = plain_pages(base);
        for (std::size_t j = 0; j < plain.size() && j < 3; ++j) {
            Episode ep = base;
            auto& a = page_at(ep, plain[j]);
            const auto back = predecessor(ep, a.page_id)->page_id;
            to_choice(a, *a.next_page_id, back, "loop_choice");
            out.push_back(mutant("choice loops back from " + a.page_id, ep));
        }
    }
    return out;
}

Mutants merge_too_far(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        if (choice_index(base) >= 0) {
            continue;
        }
        for (int start : {1, 4}) {
            Episode ep = base;
            // Walk a -> b -> c -> d -> e along next pointers.
            std::vector<std::string> chain{page_at(ep, start).page_id};
            while (chain.size() < 5) {
                const auto next = find(ep, chain.back())->next_page_id;
                if (!next) {
                    break;
                }
                chain.push_back(*next);
            }
            if (chain.size() < 5 || find(ep, chain[0])->interaction_type() != InteractionType::None) {
                continue;
            }
            to_choice(*find(ep, chain[0]), chain[1], chain[4], "far_choice");
            out.push_back(mutant("branches rejoin 3 pages later at " + chain[0], ep));
        }
    }
    return out;
}

Mutants branch_count(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const int c = choice_index(base);
        if (c >= 0) {
            Episode ep = base;
            auto& page = page_at(ep, c);
            page.branch_choices.push_back(
                {"choice_c", "中间", page.branch_choices[0].next_page_id});
            out.push_back(mutant("three branches", ep));
            Episode one = base;
            page_at(one, c).branch_choices.erase(page_at(one, c).branch_choices.begin());
            out.push_back(mutant("one branch", one));
        }
        const auto plain = plain_pages(base);
        if (!plain.empty()) {
            Episode ep = base;
            auto& page = page_at(ep, plain.front());
            page.branch_choices.push_back({"choice_x", "走一走", *page.next_page_id});
            out.push_back(mutant("branches on a non-choice page", ep));
        }
    }
    return out;
}

Mutants package_missing(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        const auto n = base.pages.size();
        for (std::size_t at : {std::size_t{0}, n / 2, n - 1}) {
            Episode ep = base;
            erase_package(ep, ep.pages[at].page_id);
            out.push_back(mutant("no package for " + ep.pages[at].page_id, ep));
        }
    }
    return out;
}

Mutants package_orphan(const Corpus& corpus)
{
    Mutants out;
    for (const auto& base : corpus) {
        Episode a = base;
        a.page_image_prompt_packages.push_back({13, "ghost_page", "an empty room"});
        out.push_back(mutant("package for unknown page", a));
        Episode b = base;
        b.page_image_prompt_packages.push_back(b.page_image_prompt_packages.front());
        out.push_back(mutant("duplicate package", b));
        Episode c = base;
        c.page_image_prompt_packages[3].page_no = 9;
        out.push_back(mutant("package page_no mismatch", c));
    }
    return out;
}

} // namespace

std::vector<MutationClass> episode_mutation_classes()
{
    using V = ViolationCode;
    return {
        {V::PageCountMismatch, page_count},
        {V::PageTooShort, page_too_short},
        {V::PageTooLong, page_too_long},
        {V::TotalLengthOutOfBand, total_band},
        {V::MicroInteractionBudgetExceeded, micro_budget},
        {V::ChoiceBudgetExceeded, choice_budget},
        {V::RecordVoiceBudgetExceeded, voice_budget},
        {V::DuplicateEventKey, duplicate_key},
        {V::MalformedEventKey, malformed_key},
        {V::DanglingPageReference, dangling},
        {V::FinalPageNotTerminal, final_not_terminal},
        {V::UnreachablePage, unreachable},
        {V::CycleDetected, cycle},
        {V::BranchMergeTooFar, merge_too_far},
        {V::BranchCountViolation, branch_count},
        {V::PromptPackageMissing, package_missing},
        {V::PromptPackageOrphan, package_orphan},
    };
}

// -- feedback and framework cases ------------------------------------------------

std::vector<FeedbackCase> valid_feedback_cases()
{
    return {
        {"今天的小勇气真亮眼。乐乐靠近了西兰花，还轻轻咬了一小口！", "乐乐", "西兰花",
         {"每一次靠近都算数。乐乐闻了闻西兰花。"}},
        {"慢慢来也没有关系。豆豆愿意看一看胡萝卜，已经很棒了。", "豆豆", "胡萝卜", {}},
        {"小小的一步也很珍贵。明明今天闻了闻青椒的味道。", "明明", "青椒",
         {"小小的一口真勇敢。明明尝了青椒。", "今天的餐桌很热闹。"}},
        {"这一口真勇敢！朵朵尝了尝南瓜，说有点甜。", "朵朵", "南瓜", {"这一次也很好！"}},
    };
}

std::vector<std::pair<ViolationCode, std::vector<FeedbackCase>>> feedback_mutants()
{
    using V = ViolationCode;
    const auto base = valid_feedback_cases();
    std::vector<std::pair<ViolationCode, std::vector<FeedbackCase>>> out;
    auto each = [&](V code, const std::function<void(FeedbackCase&, int)>& mutate, int variants) {
        std::vector<FeedbackCase> cases;
        for (const auto& b : base) {
            for (int v = 0; v < variants; ++v) {
                FeedbackCase m = b;
                mutate(m, v);
                cases.push_back(std::move(m));
            }
        }
        out.emplace_back(code, std::move(cases));
    };
    auto replace = [](std::string s, const std::string& from, const std::string& to) {
        const auto at = s.find(from);
        return s.replace(at, from.size(), to);
    };
    each(V::LengthViolation,
         [](FeedbackCase& c, int v) {
             const char* tails[] = {
                 "大家都为这一份认真和坚持感到开心，下一次还可以继续试一试新的颜色，慢慢发现更多好吃的味道。",
                 "餐桌旁的每个人都在微笑，窗外的小鸟也唱起了歌，连小勺子都闪闪发亮，好像在悄悄地说真棒。"};
             c.text += tails[v];
         },
         2);
    each(V::NicknameCountViolation,
         [&](FeedbackCase& c, int v) {
             if (v == 0) {
                 c.text = replace(c.text, c.nickname, "小朋友");
             } else {
                 c.text += c.nickname + "加油。";
             }
         },
         2);
    each(V::FoodMentionMissing,
         [&](FeedbackCase& c, int) { c.text = replace(c.text, c.food, "新菜"); }, 1);
    each(V::OpeningContainsIdentity,
         [&](FeedbackCase& c, int v) { c.text = (v == 0 ? c.food : "看") + c.text; }, 1);
    each(V::RecentPhrasePrefixCollision,
         [](FeedbackCase& c, int v) {
             if (v == 0) {
                 c.recent.push_back(c.text);
             } else {
                 const auto cps = prefix_code_points(c.text, kOpeningPrefixLength);
                 std::string head;
                 for (char32_t cp : cps) {
                     append_utf8(head, cp);
                 }
                 c.recent.insert(c.recent.begin(), head + "别的结尾。");
             }
         },
         2);
    each(V::ForbiddenScriptDetected,
         [](FeedbackCase& c, int v) {
             const char* extras[] = {"OK", "😊", "ａ"};
             c.text += extras[v];
         },
         3);
    return out;
}

StoryFramework valid_framework(const std::string& nickname)
{
    StoryFramework fw;
    fw.story_mode = StoryMode::RealisticEveryday;
    fw.world_setting.concept_text = "幼儿园和家里的日常小发现";
    fw.world_setting.core_locations = {"幼儿园教室", "家里的餐桌", "小区花园", "超市蔬菜区"};
    fw.world_rules = {"没有魔法", "物品不会说话"};
    fw.recurring_elements = {"小小观察本", "看一看，闻一闻", "每次开始先翻开观察本",
                             "结尾留下一个小问题", "从一次午饭开始"};
    fw.helper_roles = {{"豆豆老师", "温柔的幼儿园老师"}};
    fw.child_role = nickname + "是故事里的小主角";
    return fw;
}

std::vector<std::pair<ViolationCode, std::vector<StoryFramework>>> framework_mutants()
{
    using V = ViolationCode;
    const auto base = valid_framework();
    std::vector<std::pair<ViolationCode, std::vector<StoryFramework>>> out;

    std::vector<StoryFramework> few(3, base);
    few[0].world_setting.core_locations.pop_back();
    few[1].world_setting.core_locations[3] = few[1].world_setting.core_locations[0];
    few[2].world_setting.core_locations[2] = "   ";
    out.emplace_back(V::TooFewLocations, few);

    std::vector<StoryFramework> placeholder(3, base);
    placeholder[0].recurring_elements.recurring_object = "{xxx}";
    placeholder[1].child_role = "<name>是故事里的小主角";
    placeholder[2].world_setting.core_locations[1] = "{地点}";
    out.emplace_back(V::PlaceholderDetected, placeholder);

    std::vector<StoryFramework> empty(3, base);
    empty[0].recurring_elements.recurring_phrase = "";
    empty[1].recurring_elements.recurring_phrase = "   ";
    empty[2].recurring_elements.recurring_phrase = "\xE3\x80\x80";
    out.emplace_back(V::EmptyRecurringPhrase, empty);
    return out;
}

// -- page-graph oracle -----------------------------------------------------------------

Episode random_page_graph(std::mt19937_64& rng, int max_pages)
{
    auto roll = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    const int n = 1 + roll(max_pages);
    std::vector<PageSpec> spec;
    if (roll(2) == 0) {
        spec = linear(n);
        if (n >= 3 && roll(2) == 0) {
            const int c = roll(n - 2);
            const int d = 1 + roll(3);
            const int b = std::min(n - 1, c + 1 + d);
            choice(spec, c, c + 1, b);
        }
        for (int k = roll(3); k > 0; --k) {
            auto& p = spec[static_cast<std::size_t>(roll(n))];
            if (p.type == InteractionType::Choice) {
                p.branches[static_cast<std::size_t>(roll(2))] = roll(n);
            } else {
                p.next = roll(n + 1) == n ? -1 : roll(n);
            }
        }
    } else {
        spec.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            spec[static_cast<std::size_t>(i)].next = roll(n + 1) == n ? -1 : roll(n);
        }
        if (roll(2) == 0) {
            const int c = roll(n);
            choice(spec, c, roll(n), roll(n));
            if (roll(3) == 0) {
                spec[static_cast<std::size_t>(c)].next = -1;
            }
        }
    }
    Episode ep;
    for (int i = 0; i < n; ++i) {
        const auto& ps = spec[static_cast<std::size_t>(i)];
        Page page;
        page.page_no = i + 1;
        page.page_id = "g" + two_digits(i + 1);
        if (ps.next >= 0) {
            page.next_page_id = "g" + two_digits(ps.next + 1);
        }
        if (ps.type == InteractionType::Choice) {
            make_interactive(page, InteractionType::Choice, "pick");
            page.branch_choices = {{"choice_a", "甲", "g" + two_digits(ps.branches[0] + 1)},
                                   {"choice_b", "乙", "g" + two_digits(ps.branches[1] + 1)}};
        }
        ep.pages.push_back(std::move(page));
    }
    // Occasionally move the root elsewhere in the list.
    if (n >= 2 && roll(8) == 0) {
        std::swap(ep.pages[0], ep.pages[static_cast<std::size_t>(1 + roll(n - 1))]);
    }
    return ep;
}

std::set<ViolationCode> graph_oracle(const Episode& episode)
{
    using V = ViolationCode;
    std::set<V> codes;
    const auto n = episode.pages.size();
    if (n == 0) {
        return codes;
    }
    const auto idx = index_of(episode);
    std::vector<std::vector<std::size_t>> succ(n);
    std::vector<bool> terminal(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& page = episode.pages[i];
        std::set<std::size_t> out;
        if (page.next_page_id) {
            out.insert(idx.at(*page.next_page_id));
        }
        for (const auto& b : page.branch_choices) {
            out.insert(idx.at(b.next_page_id));
        }
        succ[i].assign(out.begin(), out.end());
        terminal[i] = out.empty();
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (terminal[i] != (i + 1 == n)) {
            codes.insert(V::FinalPageNotTerminal);
        }
    }

    // Every simple path from the root; a successor already on the path
    // closes a cycle.
    std::vector<bool> reached(n, false);
    bool cyclic = false;
    std::vector<bool> on_path(n, false);
    std::function<void(std::size_t)> walk = [&](std::size_t u) {
        reached[u] = true;
        on_path[u] = true;
        for (auto v : succ[u]) {
            if (on_path[v]) {
                cyclic = true;
            } else {
                walk(v);
            }
        }
        on_path[u] = false;
    };
    walk(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!reached[i]) {
            codes.insert(V::UnreachablePage);
        }
    }
    // Cycles anywhere, including parts the root never reaches.
    for (std::size_t root = 0; root < n && !cyclic; ++root) {
        std::fill(on_path.begin(), on_path.end(), false);
        std::vector<bool> ignored(n);
        std::swap(ignored, reached);
        walk(root);
        std::swap(ignored, reached);
    }
    if (cyclic) {
        codes.insert(V::CycleDetected);
    }

    // Endpoints of every walk of length <= 2.
    auto within_two = [&](std::size_t from) {
        std::set<std::size_t> ends{from};
        for (auto a : succ[from]) {
            ends.insert(a);
            for (auto b : succ[a]) {
                ends.insert(b);
            }
        }
        return ends;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& page = episode.pages[i];
        if (page.interaction_type() != InteractionType::Choice || page.branch_choices.size() != 2) {
            continue;
        }
        const auto a = within_two(idx.at(page.branch_choices[0].next_page_id));
        const auto b = within_two(idx.at(page.branch_choices[1].next_page_id));
        const bool meet = std::any_of(a.begin(), a.end(), [&](auto k) { return b.contains(k); });
        if (!meet) {
            codes.insert(V::BranchMergeTooFar);
        }
    }
    return codes;
}

std::set<ViolationCode> graph_codes(const ValidationReport& report)
{
    const auto c = report.codes();
    return {c.begin(), c.end()};
}

// -- providers ---------------------------------------------------------------------

std::string ScriptedProvider::complete(const std::string& system_prompt,
                                       const std::string& user_payload, TypeTag output_tag)
{
    int call = 0;
    {
        std::lock_guard lock(mutex_);
        call = calls_++;
        payloads_.push_back(user_payload);
    }
    return script_(system_prompt, user_payload, output_tag, call);
}

std::string ScriptedProvider::generate_image(const std::string& prompt,
                                             const std::optional<std::string>& reference_asset)
{
    return assets_.put_asset({"IMG:" + prompt + "|" + reference_asset.value_or(""), "image/png"});
}

std::string ScriptedProvider::synthesize_speech(const std::string& text)
{
    return assets_.put_asset({"TTS:" + text, "audio/mpeg"});
}

std::string ScriptedProvider::transcribe(const std::string& audio_asset)
{
    return "transcript of " + audio_asset;
}

int ScriptedProvider::calls() const
{
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<std::string> ScriptedProvider::payloads() const
{
    std::lock_guard lock(mutex_);
    return payloads_;
}

std::string draft_json(const Episode& episode)
{
    return dump_canonical(encode(content_of(episode)));
}

PromptLibrary prompts()
{
    return PromptLibrary::load(PromptLibrary::default_dir());
}

// -- store comparison ---------------------------------------------------------------

namespace {

void normalize(Json& j, std::map<std::string, std::map<std::string, int>>& ids)
{
    static const std::regex id_pattern("^(child|fw|ep|sess|rec|fb|evt|job)-[0-9]+$");
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end();) {
            const auto& key = it.key();
            if (key == "timestamp" || (key.size() > 3 && key.ends_with("_at"))) {
                it = j.erase(it);
            } else {
                normalize(*it, ids);
                ++it;
            }
        }
    } else if (j.is_array()) {
        for (auto& e : j) {
            normalize(e, ids);
        }
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        std::smatch m;
        if (std::regex_match(s, m, id_pattern)) {
            auto& kind = ids[m[1]];
            auto [it, fresh] = kind.emplace(s, static_cast<int>(kind.size()) + 1);
            j = m[1].str() + "#" + std::to_string(it->second);
        }
    }
}

} // namespace

Json normalized_export(const Store& store, const std::string& child_id)
{
    Json archive = store.export_child(child_id);
    std::map<std::string, std::map<std::string, int>> ids;
    normalize(archive, ids);
    return archive;
}

// -- HTTP ------------------------------------------------------------------------------

ApiClient::ApiClient(int port, std::string token) : port_(port), token_(std::move(token)) {}

namespace {

HttpReply to_reply(const httplib::Result& res)
{
    if (!res) {
        return {0, Json(), "transport error: " + httplib::to_string(res.error())};
    }
    HttpReply reply{res->status, Json(), res->body};
    if (res->get_header_value("Content-Type").starts_with("application/json")) {
        reply.body = Json::parse(res->body, nullptr, false);
    }
    return reply;
}

} // namespace

HttpReply ApiClient::get(const std::string& path) const
{
    httplib::Client client("127.0.0.1", port_);
    httplib::Headers headers;
    if (!token_.empty()) {
        headers.emplace("Authorization", "Bearer " + token_);
    }
    return to_reply(client.Get(path, headers));
}

HttpReply ApiClient::post(const std::string& path, const Json& body,
                          const std::string& idempotency_key) const
{
    httplib::Client client("127.0.0.1", port_);
    httplib::Headers headers;
    if (!token_.empty()) {
        headers.emplace("Authorization", "Bearer " + token_);
    }
    if (!idempotency_key.empty()) {
        headers.emplace("Idempotency-Key", idempotency_key);
    }
    return to_reply(client.Post(path, headers, dump_canonical(body), "application/json"));
}

HttpReply ApiClient::post_raw(const std::string& path, const std::string& body,
                              const std::string& content_type) const
{
    httplib::Client client("127.0.0.1", port_);
    httplib::Headers headers;
    if (!token_.empty()) {
        headers.emplace("Authorization", "Bearer " + token_);
    }
    return to_reply(client.Post(path, headers, body, content_type));
}

Json ApiClient::wait_job(const std::string& job_id) const
{
    for (int i = 0; i < 2000; ++i) {
        const auto reply = get("/jobs/" + job_id);
        if (reply.status != 200) {
            throw std::runtime_error("job poll failed: " + reply.raw);
        }
        const auto status = reply.body.at("status").get<std::string>();
        if (status != "queued" && status != "running") {
            return reply.body;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    throw std::runtime_error("job " + job_id + " did not finish");
}

namespace {

Json expect(const HttpReply& reply, int status, const std::string& what)
{
    if (reply.status != status) {
        throw std::runtime_error(what + ": HTTP " + std::to_string(reply.status) + " " + reply.raw);
    }
    return reply.body;
}

} // namespace

HttpDemoResult drive_demo_over_http(const ApiClient& client, const std::string& food,
                                    int self_rating, const std::string& nickname,
                                    const std::string& theme, StoryMode mode)
{
    HttpDemoResult result;
    const auto portrait =
        expect(client.post("/images", {{"prompt", cli::kDemoPortraitPrompt}}), 201, "portrait");
    const auto avatar = cli::demo_avatar(nickname, portrait.at("asset_id").get<std::string>());
    const auto created = expect(client.post("/avatars", encode(avatar)), 201, "avatar");
    result.child_id = created.at("avatar_id").get<std::string>();

    const auto fw_job = expect(client.post("/frameworks", {{"child_id", result.child_id},
                                                           {"mode", std::string(enum_name(mode))},
                                                           {"theme", theme}}),
                               202, "framework");
    const auto fw_done = client.wait_job(fw_job.at("job_id").get<std::string>());
    if (fw_done.at("status") != "succeeded") {
        throw std::runtime_error("framework job failed: " + fw_done.dump());
    }

    const auto session = expect(
        client.post("/sessions", {{"child_id", result.child_id}, {"food", food}}), 201, "session");
    result.session_id = session.at("session_id").get<std::string>();
    const auto base = "/sessions/" + result.session_id;

    const auto gen = expect(client.post(base + "/generate", Json::object()), 202, "generate");
    const auto gen_done = client.wait_job(gen.at("job_id").get<std::string>());
    if (gen_done.at("status") != "awaiting_review") {
        throw std::runtime_error("episode job: " + gen_done.dump());
    }
    const auto episode = decode<Episode>(expect(client.get(base + "/episode"), 200, "episode"));
    expect(client.post(base + "/review", {{"decision", "approve"}}), 200, "review");

    // Same reading path as the direct demo: first branch at the choice.
    std::map<std::string, const Page*> by_id;
    for (const auto& p : episode.pages) {
        by_id[p.page_id] = &p;
    }
    const Page* page = &episode.pages.front();
    while (page) {
        std::optional<std::string> next = page->next_page_id;
        if (page->interaction_type() != InteractionType::None) {
            InteractionEvent e;
            e.page_id = page->page_id;
            e.event_key = *page->interaction->event_key;
            switch (page->interaction->type) {
            case InteractionType::Tap: e.payload.kind = InteractionKind::Tap; break;
            case InteractionType::Drag: e.payload.kind = InteractionKind::Drag; break;
            case InteractionType::Mimic: e.payload.kind = InteractionKind::MimicDone; break;
            case InteractionType::Choice:
                e.payload.kind = InteractionKind::ChoiceSelected;
                e.payload.choice_branch = page->branch_choices.front().choice_id;
                next = page->branch_choices.front().next_page_id;
                break;
            case InteractionType::RecordVoice: {
                e.payload.kind = InteractionKind::VoiceRecorded;
                const auto speech = expect(
                    client.post("/speech", {{"text", cli::demo_voice_text(*page->interaction)}}),
                    201, "speech");
                e.payload.audio_asset = speech.at("asset_id").get<std::string>();
                break;
            }
            case InteractionType::None: break;
            }
            expect(client.post(base + "/events", encode(e)), 201, "event " + e.event_key);
        }
        page = next && by_id.count(*next) ? by_id[*next] : nullptr;
    }
    expect(client.post(base + "/reading-finished", Json::object()), 200, "reading");

    const auto record = cli::demo_record(food, self_rating);
    const auto post = expect(client.post(base + "/post-meal", encode(record)), 202, "post-meal");
    for (const char* key : {"feedback_job_id", "ending_job_id"}) {
        const auto done = client.wait_job(post.at(key).get<std::string>());
        if (done.at("status") != "succeeded") {
            throw std::runtime_error(std::string(key) + ": " + done.dump());
        }
    }
    result.feedback = expect(client.get(base + "/feedback"), 200, "feedback");
    result.ending = expect(client.get(base + "/ending"), 200, "ending");
    result.final_session = expect(client.get(base), 200, "session");
    return result;
}

AppConfig test_config(const TempDir& dir, const std::string& name)
{
    AppConfig config;
    config.store_path = dir / name;
    config.provider_mode = ProviderMode::Mock;
    config.seed = 42;
    config.record_calls = true;
    config.manual_clock_start = 1'700'000'000'000;
    return config;
}

} // namespace storyecho::testing
