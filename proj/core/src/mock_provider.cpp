#include "storyecho/pipeline.hpp"
#include "storyecho/provider.hpp"
#include "storyecho/unicode.hpp"

#include <algorithm>
#include <random>

namespace storyecho {

namespace {

using Rng = std::mt19937_64;

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items)
{
    return items[rng() % items.size()];
}

template <class T>
void shuffle(Rng& rng, std::vector<T>& items)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[rng() % i]);
    }
}

std::string replace_all(std::string text, std::string_view token, std::string_view value)
{
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

struct Cast {
    std::string nickname;
    std::string food;
    std::string helper;
    std::string object;

    std::string fill(std::string text) const
    {
        text = replace_all(std::move(text), "@N", nickname);
        text = replace_all(std::move(text), "@F", food);
        text = replace_all(std::move(text), "@H", helper);
        return replace_all(std::move(text), "@O", object);
    }
};

std::string han_prefix(std::string_view source, std::size_t n)
{
    std::u32string out;
    for (char32_t cp : decode_utf8(source)) {
        if (out.size() == n) {
            break;
        }
        if (is_han(cp)) {
            out.push_back(cp);
        }
    }
    return encode_utf8(out);
}

// Filler used to land a page exactly on its Han target.
constexpr std::string_view kFiller =
    "大家围在一起慢慢看慢慢想心里暖暖的又轻松又好玩还想再来一次呢风轻轻吹过窗边阳光落在桌上";

// Greedily appends sentences while they fit, then pads with filler so the
// page holds exactly `target` Han characters.
std::string compose_page(Rng& rng, std::size_t target, const std::vector<std::string>& lead,
                         const std::vector<std::string>& bank, const Cast& cast)
{
    std::string text;
    std::size_t han = 0;
    auto try_add = [&](const std::string& sentence) {
        const auto s = cast.fill(sentence);
        const auto h = count_han_chars(s);
        if (han + h <= target) {
            text += s;
            han += h;
            return true;
        }
        return false;
    };
    for (const auto& s : lead) {
        try_add(s);
    }
    for (int tries = 0; tries < 48 && han < target; ++tries) {
        try_add(pick(rng, bank));
    }
    while (han < target) {
        const auto pad = han_prefix(kFiller, target - han);
        text += pad;
        han += count_han_chars(pad);
        text += "。";
    }
    return text;
}

std::vector<std::size_t> page_targets(const BasicConstraints& c, EpisodeKind kind)
{
    const auto n = static_cast<std::size_t>(c.expected_pages(kind));
    const auto lo = static_cast<std::size_t>(c.han_chars_per_page_min);
    const auto hi = static_cast<std::size_t>(c.han_chars_per_page_max);
    const auto total_lo = static_cast<std::size_t>(c.total_min(kind));
    const auto total_hi = static_cast<std::size_t>(c.total_max(kind));
    auto total = std::clamp((total_lo + total_hi) / 2, n * lo, n * hi);
    std::vector<std::size_t> out(n, total / n);
    for (std::size_t i = 0; i < total % n; ++i) {
        ++out[i];
    }
    return out;
}

std::string page_id(std::string_view prefix, std::size_t index)
{
    std::string n = std::to_string(index + 1);
    return std::string(prefix) + "p" + (n.size() < 2 ? "0" + n : n);
}

const std::vector<std::string> kStoryBank{
    "@N蹲下来仔细看了看@F的颜色。",
    "@H在旁边笑着说可以先闻一闻。",
    "@F摸起来有一点凉凉的。",
    "@N发现@F的表面有细细的纹路。",
    "窗外的小鸟也好像在看热闹。",
    "@O被放在桌子最显眼的地方。",
    "@N把@F放在手心里轻轻掂了掂。",
    "@H讲了一个关于@F长大的小故事。",
    "大家一起数了数篮子里有几个@F。",
    "@N听见@F碰到盘子时发出轻轻的声音。",
    "厨房里飘来一阵淡淡的香味。",
    "@N歪着头想了想又笑了起来。",
    "@F在阳光下看起来亮亮的。",
    "@H说每个人都可以按自己的节奏来。",
    "@N用小手指轻轻碰了碰@F。",
    "小伙伴们围过来一起看@O。",
    "@N把今天的发现悄悄记在心里。",
    "@F原来是从泥土里慢慢长出来的。",
};

const std::vector<std::string> kPositiveBank{
    "小主角今天勇敢地靠近了@F。",
    "@F好像也在为这一次的尝试开心。",
    "大家为这份认真轻轻鼓掌。",
    "@O上又多了一个闪亮的小记号。",
    "小主角发现@F的味道比想象中更有趣。",
};
const std::vector<std::string> kGentleBank{
    "今天和@F见面有一点难也没关系。",
    "@F在盘子边上安静地等着下一次。",
    "大家说慢慢来就很好。",
    "@O里留着一个小小的空位给明天。",
    "小主角先看一看@F就已经很棒了。",
};
const std::vector<std::string> kWarmBank{
    "小主角和@F又多认识了一点点。",
    "每天见一见@F就会越来越熟悉。",
    "大家把今天的小进步记了下来。",
    "@O陪着小主角慢慢练习。",
    "@F好像变得没有那么陌生了。",
};

struct ModeProfile {
    std::string concept_text;
    std::vector<std::string> rules;
    std::vector<std::string> objects;
    std::string phrase;
    std::string opening_ritual;
    std::string closing_hook;
    std::string trigger;
    std::vector<HelperRole> helpers;
};

ModeProfile mode_profile(StoryMode mode)
{
    switch (mode) {
    case StoryMode::RealisticEveryday:
        return {"一个普通又热闹的小区和幼儿园，每天都藏着小小的发现",
                {"no magic / no talking objects", "所有发现都来自观察和动手",
                 "大人只在旁边帮忙，不替孩子做决定"},
                {"贴纸记录本", "午餐盒名牌", "小小观察卡"},
                "看一看，摸一摸，再说说",
                "每天出门前一起整理小背包",
                "把今天的发现贴进记录本",
                "生活里冒出来的一个小问题",
                {{"豆豆老师", "在旁边提问和鼓励的幼儿园老师"},
                 {"外婆", "会讲菜从哪里来的家人"}}};
    case StoryMode::LightFantasyFamiliar:
        return {"熟悉的家和街角，有些物件会轻声说话",
                {"物件可以轻声说话，但魔法不能替孩子解决问题", "每个小难题都靠孩子自己的小办法",
                 "说话的物件只会提问和陪伴"},
                {"会眨眼的小饭勺", "软软的布口袋朋友", "爱唱歌的小碗"},
                "悄悄话，亮晶晶",
                "敲三下窗台和小伙伴打招呼",
                "小伙伴留下一张神秘小纸条",
                "一位访客、一个邀请或一次小误会",
                {{"小饭勺叮当", "会轻声提问的厨房小伙伴"},
                 {"邻居奶奶", "总有好故事的邻居"}}};
    case StoryMode::HybridExpositoryNarrative:
        return {"一个边问边看的好奇世界，每个问题都能找到简单答案",
                {"观察和简单解释是故事的发动机", "先提问，再看看比比，最后说出道理",
                 "答案要用孩子听得懂的话说出来"},
                {"为什么问题卡", "小小实验角", "放大镜小本子"},
                "咦，这是为什么呢",
                "抽一张问题卡读给大家听",
                "把答案画在问题卡的背面",
                "一个让人好奇的问题",
                {{"问问博士", "喜欢和孩子一起做小实验的邻居"},
                 {"小猫咪咪", "总是第一个发现不同的小猫"}}};
    case StoryMode::JourneyDiscoveryFramework:
        return {"一条连着许多站点的小路线，每一站都有新发现",
                {"每一站只发现一件小事", "路线可以自己选择，也可以随时回到小基地",
                 "向导只指路，决定由孩子来做"},
                {"路线地图册", "集章卡", "小旗子路标"},
                "出发啦，下一站",
                "背上小书包，大声喊出发",
                "回到小基地，在地图上盖一个章",
                "地图上亮起一个新站点",
                {{"向导阿果", "熟悉每一站的小向导"}, {"信鸽咕咕", "送来站点消息的信鸽"}}};
    }
    return {};
}

std::string mock_framework(Rng& rng, const Json& in)
{
    const auto avatar = decode<ChildAvatar>(in.at("child_avatar"));
    const auto mode = enum_from_name<StoryMode>(in.at("story_mode").get<std::string>());
    if (!mode) {
        fail(Errc::ProviderError, "mock: unknown story_mode");
    }
    std::optional<ValidationReport> repair;
    if (in.contains("repair")) {
        repair = decode<ValidationReport>(in.at("repair"));
    }
    const auto profile = mode_profile(*mode);
    StoryFramework fw;
    fw.story_mode = *mode;
    fw.world_setting.concept_text = profile.concept_text;
    const auto theme = in.value("theme", std::string());
    const bool drop_theme = repair && repair->has(ViolationCode::PlaceholderDetected);
    if (!theme.empty() && !drop_theme) {
        fw.world_setting.concept_text += "，这一季的主题是" + theme;
    }
    std::vector<std::string> places{"家里的厨房", "小区花园", "菜市场", "公园草地",
                                    "社区图书室", "小农场", "超市", "外婆家的小院"};
    if (*mode == StoryMode::JourneyDiscoveryFramework) {
        places = {"果园站", "菜市场站", "小河边站", "面包房站", "农场站", "图书角站"};
    }
    shuffle(rng, places);
    fw.world_setting.core_locations = {"幼儿园教室"};
    fw.world_setting.core_locations.insert(fw.world_setting.core_locations.end(), places.begin(),
                                           places.begin() + 3 + static_cast<long>(rng() % 2));
    fw.world_rules = profile.rules;
    fw.recurring_elements = {pick(rng, profile.objects), profile.phrase, profile.opening_ritual,
                             profile.closing_hook, profile.trigger};
    fw.helper_roles = profile.helpers;
    const auto nickname = trim(avatar.nickname);
    fw.child_role = nickname + "是这个系列的小主角，每一个发现都由" + nickname + "亲手完成";
    return dump_canonical(encode(fw));
}

std::string mock_summary(Rng& rng, const Json& in)
{
    const auto& blocks = in.at("previous_blocks");
    if (!blocks.is_array() || blocks.empty()) {
        fail(Errc::ProviderError, "mock: previous_blocks must be a non-empty array");
    }
    const auto food = blocks.back().at("target_food").get<std::string>();
    std::string object = "观察卡";
    if (const auto& fw = in.at("story_framework"); fw.is_object()) {
        object = fw.at("recurring_elements").at("recurring_object").get<std::string>();
    }
    RecapAndGoal recap;
    recap.recap_cn = "上一次，小主角和" + food + "一起经历了一场小小的探险，还带上了" + object +
                     "。大家和" + food + "越来越熟悉啦。";
    if (blocks.size() > 1) {
        recap.recap_cn += "这已经是第" + std::to_string(blocks.size()) + "次一起发现新东西了。";
    }
    recap.micro_goal = pick(rng, std::vector<std::string>{
                                     "比一比" + food + "生的和熟的有什么不一样",
                                     "换一个地方，看看" + food + "还藏着什么小秘密",
                                     "让小主角来带路，找一找" + food + "的新朋友",
                                 });
    recap.key_story_elements = {food, object, "一起发现"};
    recap.continuity_hooks.carry_over_anchors = {food, object};
    recap.continuity_hooks.next_episode_seed =
        pick(rng, std::vector<std::string>{
                      "下一次，" + food + "会带来一个新的小秘密。",
                      object + "上出现了一个还没解开的小问号。",
                      "明天的路上，也许会遇见另一种样子的" + food + "。",
                  });
    return dump_canonical(encode(recap));
}

VisualCanon mock_canon(const ChildAvatar& avatar, const std::string& object)
{
    std::string lock = "the same child protagonist";
    if (!avatar.clothing.empty()) {
        lock += " wearing " + avatar.clothing;
    }
    for (const auto& a : avatar.accessories) {
        lock += ", with " + a;
    }
    return {"warm children's picture book illustration, soft watercolor, cinematic framing",
            lock,
            "consistent series world featuring the recurring object " + object,
            "no text, no watermark, no scary elements, no forced feeding"};
}

const std::vector<std::string> kScenes{
    "close-up on small hands and the food on a wooden table",
    "wide shot of the place with soft afternoon light",
    "the helper kneeling beside the child, both curious",
    "the child smiling and pointing at a small discovery",
};

std::string mock_episode(Rng& rng, const Json& in)
{
    const auto c = decode<BasicConstraints>(in.at("basic_constraints"));
    const auto& temporal = in.at("temporal_characteristics");
    const auto avatar = decode<ChildAvatar>(temporal.at("child_avatar"));
    std::string food = temporal.at("target_food").get<std::string>();
    const auto& effective = in.at("run_config").at("effective_inputs");
    if (effective.value("food_override_must_follow", false)) {
        const auto hint = effective.value("food_override_hint", std::string());
        if (!hint.empty()) {
            food = hint;
        }
    }
    const auto& arc = in.at("story_arc");
    Cast cast{trim(avatar.nickname), food, "小伙伴", "小本子"};
    if (arc.is_object()) {
        const auto& helpers = arc.at("helper_roles");
        if (helpers.is_array() && !helpers.empty()) {
            cast.helper = helpers.front().at("name").get<std::string>();
        }
        cast.object = arc.at("recurring_elements").at("recurring_object").get<std::string>();
    }

    const auto targets = page_targets(c, EpisodeKind::Main);
    const std::size_t n = targets.size();
    std::vector<Page> pages(n);
    for (std::size_t i = 0; i < n; ++i) {
        pages[i].page_no = static_cast<int>(i + 1);
        pages[i].page_id = page_id("", i);
        if (i + 1 < n) {
            pages[i].next_page_id = page_id("", i + 1);
        }
    }

    std::vector<bool> used(n, false);
    if (n > 0) {
        used[n - 1] = true;
    }
    auto set_interaction = [&](std::size_t i, InteractionType type, std::string instruction) {
        const auto no = std::to_string(i + 1);
        pages[i].interaction = Interaction{type, cast.fill(instruction),
                                           std::string(enum_name(type)) + "_" +
                                               (no.size() < 2 ? "0" + no : no),
                                           {"慢慢来，怎么做都可以"}};
        used[i] = true;
    };
    if (n >= 5 && c.choice_max >= 1) {
        const std::size_t ci = std::max<std::size_t>(1, n / 2 - 2);
        set_interaction(ci, InteractionType::Choice, "选一选，接下来先去哪里");
        pages[ci].branch_choices = {
            {"choice_a", "先去看看@F从哪里来", page_id("", ci + 1)},
            {"choice_b", "先问问@H的小办法", page_id("", ci + 2)},
        };
        for (auto& b : pages[ci].branch_choices) {
            b.label_cn = cast.fill(b.label_cn);
        }
        pages[ci + 1].next_page_id = page_id("", ci + 3);
        used[ci + 1] = used[ci + 2] = true;
    }
    if (n >= 3 && c.record_voice_max >= 1 && !used[n - 2]) {
        set_interaction(n - 2, InteractionType::RecordVoice, "说一说@F摸起来像什么");
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!used[i]) {
            free.push_back(i);
        }
    }
    shuffle(rng, free);
    const auto micro = std::min<std::size_t>(
        {3, static_cast<std::size_t>(std::max(c.micro_interactions_max_per_episode, 0)),
         free.size()});
    const std::vector<std::pair<InteractionType, std::string>> micro_kinds{
        {InteractionType::Tap, "轻轻点一点@F，听听它的声音"},
        {InteractionType::Drag, "把@F拖进小篮子里"},
        {InteractionType::Mimic, "学着@N的样子闻一闻"},
    };
    for (std::size_t k = 0; k < micro; ++k) {
        const auto& [type, instruction] = micro_kinds[k % micro_kinds.size()];
        set_interaction(free[k], type, instruction);
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> lead;
        if (i == 0) {
            lead.push_back("@N今天遇见了@F。");
        } else if (i + 1 == n) {
            lead.push_back("@N把和@F的发现装进了@O。");
        } else {
            lead.push_back("@N继续和@F待在一起。");
        }
        pages[i].page_text_cn = compose_page(rng, targets[i], lead, kStoryBank, cast);
    }

    EpisodeContent content;
    content.pages = std::move(pages);
    content.visual_canon = mock_canon(avatar, cast.object);
    for (const auto& p : content.pages) {
        content.page_image_prompt_packages.push_back(
            {p.page_no, p.page_id,
             "page " + std::to_string(p.page_no) + ", the child exploring " + food + ", " +
                 pick(rng, kScenes)});
    }
    return dump_canonical(encode(content));
}

std::string mock_ending(Rng& rng, const Json& in)
{
    const auto c = decode<BasicConstraints>(in.at("basic_constraints"));
    const auto food = in.at("food_name").get<std::string>();
    const auto prefix = in.value("id_prefix", std::string("end_"));
    const auto variant = enum_from_name<EndingVariant>(in.at("ending_variant").get<std::string>());
    if (!variant) {
        fail(Errc::ProviderError, "mock: unknown ending_variant");
    }
    std::string object = "小本子";
    if (const auto& summary = in.at("summary"); summary.is_object()) {
        const auto& anchors = summary.at("continuity_hooks").at("carry_over_anchors");
        if (anchors.is_array() && anchors.size() > 1) {
            object = anchors.at(1).get<std::string>();
        }
    }
    const Cast cast{"小主角", food, "小伙伴", object};
    const auto& bank = *variant == EndingVariant::Positive ? kPositiveBank
                       : *variant == EndingVariant::Gentle ? kGentleBank
                                                           : kWarmBank;

    const auto targets = page_targets(c, EpisodeKind::EndingExtension);
    const std::size_t n = targets.size();
    EpisodeContent content;
    for (std::size_t i = 0; i < n; ++i) {
        Page p;
        p.page_no = static_cast<int>(i + 1);
        p.page_id = page_id(prefix, i);
        if (i + 1 < n) {
            p.next_page_id = page_id(prefix, i + 1);
        }
        std::vector<std::string> lead{i == 0 ? "吃过饭以后，小主角又想起了@F。" : ""};
        p.page_text_cn = compose_page(rng, targets[i], lead, bank, cast);
        content.pages.push_back(std::move(p));
    }
    if (n >= 2 && c.micro_interactions_max_per_episode >= 1) {
        content.pages[1].interaction =
            Interaction{InteractionType::Tap, cast.fill("点一点@F，和它说声再见"),
                        prefix + "tap_02", {"想点就点，不点也可以"}};
    }
    content.visual_canon = {"warm children's picture book illustration, soft watercolor",
                            "the same child protagonist as the main episode",
                            "the same series world and recurring object " + object,
                            "no text, no watermark, no scary elements, no forced feeding"};
    for (const auto& p : content.pages) {
        content.page_image_prompt_packages.push_back(
            {p.page_no, p.page_id,
             "ending page " + std::to_string(p.page_no) + ", the child with " + food + ", " +
                 pick(rng, kScenes)});
    }
    return dump_canonical(encode(content));
}

const std::vector<std::string> kPraiseOpenings{
    "小勺子今天动起来了。",   "餐桌上有一份小小的勇气。", "这一口真有力量。",
    "伸出小手的那一下很棒。", "认真看过就是一大步。",     "今天的盘子边很热闹。",
    "敢凑近闻一闻，了不起。", "舌尖碰一碰也算数哦。",
};
const std::vector<std::string> kEncourageOpenings{
    "有点难的时候也没关系。", "心里紧张是很正常的。", "慢慢来，一点都不着急。",
    "今天先看一看就很好。",   "不想碰的时候可以等等。", "每个人都有自己的速度。",
    "难过的心情会过去的。",   "明天还有新的机会呀。",
};
const std::vector<std::string> kPraiseBodies{
    "@N愿意靠近@F，一天比一天更勇敢。",
    "@N和@F成了新朋友，在一点点长大。",
    "@F被@N认真尝过，本领又多了一样。",
};
const std::vector<std::string> kEncourageBodies{
    "@N和@F慢慢做朋友，下次再试试看。",
    "@F会等着@N，下回再靠近一点点。",
    "@N已经见过@F了，明天还能再看看。",
};

std::string mock_feedback(Rng& rng, const Json& in)
{
    const Cast cast{in.at("nickname").get<std::string>(), in.at("picky_food").get<std::string>(),
                    "", ""};
    PostMealRecord record;
    record.self_rating = in.at("self_rating").get<int>();
    const auto description = in.value("self_description", std::string());
    const auto type = classify_feedback_type(
        record, derive_description_signal(description, DescriptionLexicon::defaults()));
    const bool praise = type == FeedbackType::Praise;
    const auto& openings = praise ? kPraiseOpenings : kEncourageOpenings;
    const auto& bodies = praise ? kPraiseBodies : kEncourageBodies;

    std::vector<std::string> recent;
    for (const auto& p : in.value("recent_phrases", Json::array())) {
        recent.push_back(p.get<std::string>());
    }
    const bool repairing = in.contains("repair");

    auto opening_ok = [&](const std::string& o) {
        if (count_occurrences(o, cast.nickname) > 0 || count_occurrences(o, cast.food) > 0) {
            return false;
        }
        if (!repairing) {
            return true;
        }
        const auto prefix = prefix_code_points(o, kOpeningPrefixLength);
        return std::none_of(recent.begin(), recent.end(), [&](const std::string& r) {
            return prefix_code_points(r, kOpeningPrefixLength) == prefix;
        });
    };
    const std::size_t start = rng() % openings.size();
    std::string opening = openings[start];
    for (std::size_t k = 0; k < openings.size(); ++k) {
        const auto& candidate = openings[(start + k) % openings.size()];
        if (opening_ok(candidate)) {
            opening = candidate;
            break;
        }
    }
    std::string text = opening + cast.fill(pick(rng, bodies));
    if (repairing && count_han_chars(text) > kFeedbackMaxHan) {
        for (const auto& b : bodies) {
            const auto alt = opening + cast.fill(b);
            if (count_han_chars(alt) < count_han_chars(text)) {
                text = alt;
            }
        }
    }
    return dump_canonical(encode(FeedbackText{text}));
}

} // namespace

MockProvider::MockProvider(AssetStore& assets, std::uint64_t seed) : assets_(assets), seed_(seed)
{
}

std::string MockProvider::complete(const std::string&, const std::string& user_payload,
                                   TypeTag output_tag)
{
    Json in;
    try {
        in = parse_json(user_payload);
    } catch (const Error& e) {
        fail(Errc::ProviderError, std::string("mock: payload is not JSON: ") + e.what());
    }
    std::string stage;
    switch (output_tag) {
    case TypeTag::StoryFramework: stage = "framework"; break;
    case TypeTag::RecapAndGoal: stage = "summarize"; break;
    case TypeTag::EpisodeDraft: stage = in.contains("food_name") ? "ending" : "episode"; break;
    case TypeTag::FeedbackText: stage = "feedback"; break;
    default:
        fail(Errc::ProviderError,
             "mock: no generator for " + std::string(enum_name(output_tag)));
    }
    std::string key = stage;
    key.push_back('\0');
    key += user_payload;
    key.push_back('\0');
    key += std::to_string(seed_);
    Rng rng(fnv1a64(key));
    try {
        if (stage == "framework") return mock_framework(rng, in);
        if (stage == "summarize") return mock_summary(rng, in);
        if (stage == "episode") return mock_episode(rng, in);
        if (stage == "ending") return mock_ending(rng, in);
        return mock_feedback(rng, in);
    } catch (const Json::exception& e) {
        fail(Errc::ProviderError, "mock: unexpected payload shape: " + std::string(e.what()));
    }
}

std::string MockProvider::generate_image(const std::string& prompt,
                                         const std::optional<std::string>& reference_asset)
{
    const auto h = fnv1a64(prompt + '\0' + reference_asset.value_or("") + '\0' +
                           std::to_string(seed_));
    const auto hue = std::to_string(h % 360);
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"64\" height=\"64\">"
                      "<rect width=\"64\" height=\"64\" fill=\"hsl(" +
                      hue + ",60%,80%)\"/><!-- " + std::to_string(h) + " --></svg>";
    return assets_.put_asset({std::move(svg), "image/svg+xml"});
}

std::string MockProvider::synthesize_speech(const std::string& text)
{
    return assets_.put_asset({"MOCK-SPEECH\n" + text, "audio/x-storyecho-mock"});
}

std::string MockProvider::transcribe(const std::string& audio_asset)
{
    const auto blob = assets_.get_asset(audio_asset);
    if (!blob) {
        fail(Errc::ProviderError, "mock: unknown audio asset " + audio_asset);
    }
    return "录音已收到，共" + std::to_string(blob->bytes.size()) + "字节";
}

} // namespace storyecho
