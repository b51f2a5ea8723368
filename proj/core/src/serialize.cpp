#include "storyecho/serialize.hpp"

#include "storyecho/errors.hpp"

#include <limits>
#include <set>

namespace storyecho {

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what)
{
    fail(Errc::SchemaViolation, where + ": " + what);
}

// Tracks which keys of a closed object were consumed so leftovers can be
// rejected.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j.is_object()) {
            schema_error(where_, "expected an object");
        }
    }

    const Json& required(const std::string& key)
    {
        auto it = j_.find(key);
        if (it == j_.end()) {
            schema_error(where_, "missing key '" + key + "'");
        }
        seen_.insert(key);
        return *it;
    }

    // nullptr when absent.
    const Json* optional(const std::string& key)
    {
        auto it = j_.find(key);
        if (it == j_.end()) {
            return nullptr;
        }
        seen_.insert(key);
        return &*it;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const
    {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                schema_error(where_, "unknown key '" + item.key() + "'");
            }
        }
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::string as_string(const Json& j, const std::string& where)
{
    if (!j.is_string()) {
        schema_error(where, "expected a string");
    }
    return j.get<std::string>();
}

std::int64_t as_int64(const Json& j, const std::string& where)
{
    if (!j.is_number_integer()) {
        schema_error(where, "expected an integer");
    }
    if (j.is_number_unsigned() &&
        j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        schema_error(where, "integer out of range");
    }
    return j.get<std::int64_t>();
}

int as_int(const Json& j, const std::string& where)
{
    const auto v = as_int64(j, where);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        schema_error(where, "integer out of range");
    }
    return static_cast<int>(v);
}

bool as_bool(const Json& j, const std::string& where)
{
    if (!j.is_boolean()) {
        schema_error(where, "expected a boolean");
    }
    return j.get<bool>();
}

template <class E>
E as_enum(const Json& j, const std::string& where)
{
    const auto text = as_string(j, where);
    const auto value = enum_from_name<E>(text);
    if (!value) {
        schema_error(where, "unknown literal '" + text + "'");
    }
    return *value;
}

const Json& as_array(const Json& j, const std::string& where)
{
    if (!j.is_array()) {
        schema_error(where, "expected an array");
    }
    return j;
}

std::vector<std::string> as_string_list(const Json& j, const std::string& where)
{
    std::vector<std::string> out;
    for (const auto& item : as_array(j, where)) {
        out.push_back(as_string(item, where + "[]"));
    }
    return out;
}

std::optional<std::string> as_nullable_string(const Json* j, const std::string& where)
{
    if (!j || j->is_null()) {
        return std::nullopt;
    }
    return as_string(*j, where);
}

std::optional<int> as_nullable_int(const Json* j, const std::string& where)
{
    if (!j || j->is_null()) {
        return std::nullopt;
    }
    return as_int(*j, where);
}

template <class T>
std::vector<T> as_list(const Json& j, const std::string& where)
{
    std::vector<T> out;
    for (const auto& item : as_array(j, where)) {
        out.push_back(decode<T>(item));
    }
    return out;
}

template <class T>
Json list_json(const std::vector<T>& items)
{
    Json out = Json::array();
    for (const auto& item : items) {
        out.push_back(encode(item));
    }
    return out;
}

Json nullable(const std::optional<std::string>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json nullable(const std::optional<int>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

template <class E>
Json enum_json(E v)
{
    return std::string(enum_name(v));
}

} // namespace

Json encode(const ChildAvatar& v)
{
    return {{"avatar_id", v.avatar_id},
            {"nickname", v.nickname},
            {"gender", enum_json(v.gender)},
            {"clothing", v.clothing},
            {"accessories", v.accessories},
            {"base_reference_image", nullable(v.base_reference_image)}};
}

template <>
ChildAvatar decode<ChildAvatar>(const Json& j)
{
    ObjectReader r(j, "ChildAvatar");
    ChildAvatar v;
    if (const auto* id = r.optional("avatar_id")) {
        v.avatar_id = as_string(*id, r.path("avatar_id"));
    }
    v.nickname = as_string(r.required("nickname"), r.path("nickname"));
    v.gender = as_enum<Gender>(r.required("gender"), r.path("gender"));
    v.clothing = as_string(r.required("clothing"), r.path("clothing"));
    if (const auto* acc = r.optional("accessories")) {
        v.accessories = as_string_list(*acc, r.path("accessories"));
    }
    v.base_reference_image =
        as_nullable_string(r.optional("base_reference_image"), r.path("base_reference_image"));
    r.finish();
    return v;
}

Json encode(const BasicConstraints& v)
{
    return {{"episode_page_count", v.episode_page_count},
            {"ending_page_count", v.ending_page_count},
            {"han_chars_per_page_min", v.han_chars_per_page_min},
            {"han_chars_per_page_max", v.han_chars_per_page_max},
            {"han_chars_total_min", nullable(v.han_chars_total_min)},
            {"han_chars_total_max", nullable(v.han_chars_total_max)},
            {"micro_interactions_max_per_episode", v.micro_interactions_max_per_episode},
            {"record_voice_max", v.record_voice_max},
            {"choice_max", v.choice_max},
            {"language", enum_json(v.language)}};
}

template <>
BasicConstraints decode<BasicConstraints>(const Json& j)
{
    ObjectReader r(j, "BasicConstraints");
    BasicConstraints v;
    // Every field has a default; absent keys keep it.
    auto int_field = [&](const char* key, int& out) {
        if (const auto* f = r.optional(key)) {
            out = as_int(*f, r.path(key));
        }
    };
    int_field("episode_page_count", v.episode_page_count);
    int_field("ending_page_count", v.ending_page_count);
    int_field("han_chars_per_page_min", v.han_chars_per_page_min);
    int_field("han_chars_per_page_max", v.han_chars_per_page_max);
    int_field("micro_interactions_max_per_episode", v.micro_interactions_max_per_episode);
    int_field("record_voice_max", v.record_voice_max);
    int_field("choice_max", v.choice_max);
    v.han_chars_total_min =
        as_nullable_int(r.optional("han_chars_total_min"), r.path("han_chars_total_min"));
    v.han_chars_total_max =
        as_nullable_int(r.optional("han_chars_total_max"), r.path("han_chars_total_max"));
    if (const auto* lang = r.optional("language")) {
        v.language = as_enum<Language>(*lang, r.path("language"));
    }
    r.finish();
    return v;
}

Json encode(const StoryFramework& v)
{
    Json helpers = Json::array();
    for (const auto& h : v.helper_roles) {
        helpers.push_back({{"name", h.name}, {"role", h.role}});
    }
    return {{"framework_id", v.framework_id},
            {"story_mode", enum_json(v.story_mode)},
            {"world_setting",
             {{"concept", v.world_setting.concept_text},
              {"core_locations", v.world_setting.core_locations}}},
            {"world_rules", v.world_rules},
            {"recurring_elements",
             {{"recurring_object", v.recurring_elements.recurring_object},
              {"recurring_phrase", v.recurring_elements.recurring_phrase},
              {"opening_ritual", v.recurring_elements.opening_ritual},
              {"closing_hook_style", v.recurring_elements.closing_hook_style},
              {"episode_trigger_style", v.recurring_elements.episode_trigger_style}}},
            {"helper_roles", helpers},
            {"child_role", v.child_role}};
}

template <>
StoryFramework decode<StoryFramework>(const Json& j)
{
    ObjectReader r(j, "StoryFramework");
    StoryFramework v;
    if (const auto* id = r.optional("framework_id")) {
        v.framework_id = as_string(*id, r.path("framework_id"));
    }
    v.story_mode = as_enum<StoryMode>(r.required("story_mode"), r.path("story_mode"));

    ObjectReader ws(r.required("world_setting"), r.path("world_setting"));
    v.world_setting.concept_text = as_string(ws.required("concept"), ws.path("concept"));
    v.world_setting.core_locations =
        as_string_list(ws.required("core_locations"), ws.path("core_locations"));
    ws.finish();

    v.world_rules = as_string_list(r.required("world_rules"), r.path("world_rules"));

    ObjectReader re(r.required("recurring_elements"), r.path("recurring_elements"));
    auto& e = v.recurring_elements;
    e.recurring_object = as_string(re.required("recurring_object"), re.path("recurring_object"));
    e.recurring_phrase = as_string(re.required("recurring_phrase"), re.path("recurring_phrase"));
    e.opening_ritual = as_string(re.required("opening_ritual"), re.path("opening_ritual"));
    e.closing_hook_style =
        as_string(re.required("closing_hook_style"), re.path("closing_hook_style"));
    e.episode_trigger_style =
        as_string(re.required("episode_trigger_style"), re.path("episode_trigger_style"));
    re.finish();

    const auto where = r.path("helper_roles");
    for (const auto& item : as_array(r.required("helper_roles"), where)) {
        ObjectReader hr(item, where + "[]");
        HelperRole h;
        h.name = as_string(hr.required("name"), hr.path("name"));
        h.role = as_string(hr.required("role"), hr.path("role"));
        hr.finish();
        v.helper_roles.push_back(std::move(h));
    }
    v.child_role = as_string(r.required("child_role"), r.path("child_role"));
    r.finish();
    return v;
}

Json encode(const RecapAndGoal& v)
{
    return {{"recap_cn", v.recap_cn},
            {"micro_goal", v.micro_goal},
            {"key_story_elements", v.key_story_elements},
            {"continuity_hooks",
             {{"carry_over_anchors", v.continuity_hooks.carry_over_anchors},
              {"next_episode_seed", v.continuity_hooks.next_episode_seed}}}};
}

template <>
RecapAndGoal decode<RecapAndGoal>(const Json& j)
{
    ObjectReader r(j, "RecapAndGoal");
    RecapAndGoal v;
    v.recap_cn = as_string(r.required("recap_cn"), r.path("recap_cn"));
    v.micro_goal = as_string(r.required("micro_goal"), r.path("micro_goal"));
    v.key_story_elements =
        as_string_list(r.required("key_story_elements"), r.path("key_story_elements"));
    ObjectReader h(r.required("continuity_hooks"), r.path("continuity_hooks"));
    v.continuity_hooks.carry_over_anchors =
        as_string_list(h.required("carry_over_anchors"), h.path("carry_over_anchors"));
    v.continuity_hooks.next_episode_seed =
        as_string(h.required("next_episode_seed"), h.path("next_episode_seed"));
    h.finish();
    r.finish();
    return v;
}

Json encode(const Interaction& v)
{
    return {{"type", enum_json(v.type)},
            {"instruction", v.instruction},
            {"event_key", nullable(v.event_key)},
            {"ext", {{"encouragement", v.ext.encouragement}}}};
}

template <>
Interaction decode<Interaction>(const Json& j)
{
    ObjectReader r(j, "Interaction");
    Interaction v;
    v.type = as_enum<InteractionType>(r.required("type"), r.path("type"));
    v.instruction = as_string(r.required("instruction"), r.path("instruction"));
    v.event_key = as_nullable_string(r.optional("event_key"), r.path("event_key"));
    if (const auto* ext = r.optional("ext"); ext && !ext->is_null()) {
        ObjectReader er(*ext, r.path("ext"));
        if (const auto* enc = er.optional("encouragement")) {
            v.ext.encouragement = as_string(*enc, er.path("encouragement"));
        }
        er.finish();
    }
    r.finish();
    return v;
}

Json encode(const BranchChoice& v)
{
    return {{"choice_id", v.choice_id}, {"label_cn", v.label_cn}, {"next_page_id", v.next_page_id}};
}

template <>
BranchChoice decode<BranchChoice>(const Json& j)
{
    ObjectReader r(j, "BranchChoice");
    BranchChoice v;
    v.choice_id = as_string(r.required("choice_id"), r.path("choice_id"));
    v.label_cn = as_string(r.required("label_cn"), r.path("label_cn"));
    v.next_page_id = as_string(r.required("next_page_id"), r.path("next_page_id"));
    r.finish();
    return v;
}

Json encode(const Page& v)
{
    return {{"page_no", v.page_no},
            {"page_id", v.page_id},
            {"page_text_cn", v.page_text_cn},
            {"next_page_id", nullable(v.next_page_id)},
            {"interaction", v.interaction ? encode(*v.interaction) : Json(nullptr)},
            {"branch_choices", list_json(v.branch_choices)}};
}

template <>
Page decode<Page>(const Json& j)
{
    ObjectReader r(j, "Page");
    Page v;
    v.page_no = as_int(r.required("page_no"), r.path("page_no"));
    v.page_id = as_string(r.required("page_id"), r.path("page_id"));
    v.page_text_cn = as_string(r.required("page_text_cn"), r.path("page_text_cn"));
    v.next_page_id = as_nullable_string(&r.required("next_page_id"), r.path("next_page_id"));
    if (const auto* inter = r.optional("interaction"); inter && !inter->is_null()) {
        v.interaction = decode<Interaction>(*inter);
    }
    if (const auto* branches = r.optional("branch_choices")) {
        v.branch_choices = as_list<BranchChoice>(*branches, r.path("branch_choices"));
    }
    r.finish();
    return v;
}

Json encode(const VisualCanon& v)
{
    return {{"global_visual_prompt_prefix_en", v.global_visual_prompt_prefix_en},
            {"character_lock_prompt_en", v.character_lock_prompt_en},
            {"world_lock_prompt_en", v.world_lock_prompt_en},
            {"negative_prompt_en", v.negative_prompt_en}};
}

template <>
VisualCanon decode<VisualCanon>(const Json& j)
{
    ObjectReader r(j, "visual_canon");
    VisualCanon v;
    auto field = [&](const char* key) { return as_string(r.required(key), r.path(key)); };
    v.global_visual_prompt_prefix_en = field("global_visual_prompt_prefix_en");
    v.character_lock_prompt_en = field("character_lock_prompt_en");
    v.world_lock_prompt_en = field("world_lock_prompt_en");
    v.negative_prompt_en = field("negative_prompt_en");
    r.finish();
    return v;
}

Json encode(const PagePromptPackage& v)
{
    return {{"page_no", v.page_no},
            {"page_id", v.page_id},
            {"image_prompt_suffix_en", v.image_prompt_suffix_en}};
}

template <>
PagePromptPackage decode<PagePromptPackage>(const Json& j)
{
    ObjectReader r(j, "PagePromptPackage");
    PagePromptPackage v;
    v.page_no = as_int(r.required("page_no"), r.path("page_no"));
    v.page_id = as_string(r.required("page_id"), r.path("page_id"));
    v.image_prompt_suffix_en =
        as_string(r.required("image_prompt_suffix_en"), r.path("image_prompt_suffix_en"));
    r.finish();
    return v;
}

Json encode(const EpisodeContent& v)
{
    return {{"pages", list_json(v.pages)},
            {"visual_canon", encode(v.visual_canon)},
            {"page_image_prompt_packages", list_json(v.page_image_prompt_packages)}};
}

template <>
EpisodeContent decode<EpisodeContent>(const Json& j)
{
    ObjectReader r(j, "EpisodeDraft");
    EpisodeContent v;
    v.pages = as_list<Page>(r.required("pages"), r.path("pages"));
    v.visual_canon = decode<VisualCanon>(r.required("visual_canon"));
    v.page_image_prompt_packages = as_list<PagePromptPackage>(
        r.required("page_image_prompt_packages"), r.path("page_image_prompt_packages"));
    r.finish();
    return v;
}

Json encode(const Episode& v)
{
    Json out = encode(content_of(v));
    out["episode_id"] = v.episode_id;
    out["framework_id"] = v.framework_id;
    out["target_food"] = v.target_food;
    out["kind"] = enum_json(v.kind);
    return out;
}

template <>
Episode decode<Episode>(const Json& j)
{
    ObjectReader r(j, "Episode");
    Episode v;
    v.episode_id = as_string(r.required("episode_id"), r.path("episode_id"));
    v.framework_id = as_string(r.required("framework_id"), r.path("framework_id"));
    v.target_food = as_string(r.required("target_food"), r.path("target_food"));
    v.kind = as_enum<EpisodeKind>(r.required("kind"), r.path("kind"));
    v.pages = as_list<Page>(r.required("pages"), r.path("pages"));
    v.visual_canon = decode<VisualCanon>(r.required("visual_canon"));
    v.page_image_prompt_packages = as_list<PagePromptPackage>(
        r.required("page_image_prompt_packages"), r.path("page_image_prompt_packages"));
    r.finish();
    return v;
}

Json encode(const PostMealRecord& v)
{
    Json flags = Json::array();
    for (auto f : v.special_circumstances) {
        flags.push_back(enum_json(f));
    }
    return {{"record_id", v.record_id},
            {"target_food", v.target_food},
            {"baseline_try", v.baseline_try},
            {"try_level", v.try_level},
            {"intake", v.intake},
            {"resistance", v.resistance},
            {"emotion", v.emotion},
            {"parent_pressure", v.parent_pressure},
            {"helpfulness", v.helpfulness},
            {"self_rating", v.self_rating},
            {"self_description", v.self_description},
            {"special_circumstances", flags},
            {"timestamp", v.timestamp}};
}

template <>
PostMealRecord decode<PostMealRecord>(const Json& j)
{
    ObjectReader r(j, "PostMealRecord");
    PostMealRecord v;
    if (const auto* id = r.optional("record_id")) {
        v.record_id = as_string(*id, r.path("record_id"));
    }
    v.target_food = as_string(r.required("target_food"), r.path("target_food"));
    auto scale = [&](const char* key) { return as_int(r.required(key), r.path(key)); };
    v.baseline_try = scale("baseline_try");
    v.try_level = scale("try_level");
    v.intake = scale("intake");
    v.resistance = scale("resistance");
    v.emotion = scale("emotion");
    v.parent_pressure = scale("parent_pressure");
    v.helpfulness = scale("helpfulness");
    v.self_rating = scale("self_rating");
    v.self_description = as_string(r.required("self_description"), r.path("self_description"));
    if (const auto* flags = r.optional("special_circumstances")) {
        const auto where = r.path("special_circumstances");
        for (const auto& f : as_array(*flags, where)) {
            v.special_circumstances.push_back(as_enum<SpecialCircumstance>(f, where + "[]"));
        }
    }
    if (const auto* ts = r.optional("timestamp")) {
        v.timestamp = as_int64(*ts, r.path("timestamp"));
    }
    r.finish();
    return v;
}

Json encode(const FeedbackMessage& v)
{
    return {{"text_cn", v.text_cn}, {"basic_type", enum_json(v.basic_type)}, {"record_id", v.record_id}};
}

template <>
FeedbackMessage decode<FeedbackMessage>(const Json& j)
{
    ObjectReader r(j, "FeedbackMessage");
    FeedbackMessage v;
    v.text_cn = as_string(r.required("text_cn"), r.path("text_cn"));
    v.basic_type = as_enum<FeedbackType>(r.required("basic_type"), r.path("basic_type"));
    v.record_id = as_string(r.required("record_id"), r.path("record_id"));
    r.finish();
    return v;
}

Json encode(const FeedbackText& v)
{
    return {{"text_cn", v.text_cn}};
}

template <>
FeedbackText decode<FeedbackText>(const Json& j)
{
    ObjectReader r(j, "FeedbackText");
    FeedbackText v;
    v.text_cn = as_string(r.required("text_cn"), r.path("text_cn"));
    r.finish();
    return v;
}

Json encode(const Violation& v)
{
    return {{"code", enum_json(v.code)}, {"page_id", nullable(v.page_id)}, {"detail", v.detail}};
}

template <>
Violation decode<Violation>(const Json& j)
{
    ObjectReader r(j, "Violation");
    Violation v;
    v.code = as_enum<ViolationCode>(r.required("code"), r.path("code"));
    v.page_id = as_nullable_string(r.optional("page_id"), r.path("page_id"));
    v.detail = as_string(r.required("detail"), r.path("detail"));
    r.finish();
    return v;
}

Json encode(const ValidationReport& v)
{
    return {{"ok", v.ok()}, {"violations", list_json(v.violations)}};
}

template <>
ValidationReport decode<ValidationReport>(const Json& j)
{
    ObjectReader r(j, "ValidationReport");
    ValidationReport v;
    const bool ok = as_bool(r.required("ok"), r.path("ok"));
    v.violations = as_list<Violation>(r.required("violations"), r.path("violations"));
    r.finish();
    if (ok != v.ok()) {
        fail(Errc::InvariantViolation, "ValidationReport: ok must equal (violations is empty)");
    }
    return v;
}

Json encode(const TfoSession& v)
{
    return {{"session_id", v.session_id},
            {"child_id", v.child_id},
            {"target_food", v.target_food},
            {"state", enum_json(v.state)},
            {"framework_id", nullable(v.framework_id)},
            {"main_episode_id", nullable(v.main_episode_id)},
            {"ending_episode_id", nullable(v.ending_episode_id)},
            {"record_id", nullable(v.record_id)},
            {"regeneration_count", v.regeneration_count},
            {"task_completed", v.task_completed},
            {"closed", v.closed},
            {"created_at", v.created_at},
            {"updated_at", v.updated_at}};
}

template <>
TfoSession decode<TfoSession>(const Json& j)
{
    ObjectReader r(j, "TfoSession");
    TfoSession v;
    v.session_id = as_string(r.required("session_id"), r.path("session_id"));
    v.child_id = as_string(r.required("child_id"), r.path("child_id"));
    v.target_food = as_string(r.required("target_food"), r.path("target_food"));
    v.state = as_enum<SessionState>(r.required("state"), r.path("state"));
    v.framework_id = as_nullable_string(r.optional("framework_id"), r.path("framework_id"));
    v.main_episode_id =
        as_nullable_string(r.optional("main_episode_id"), r.path("main_episode_id"));
    v.ending_episode_id =
        as_nullable_string(r.optional("ending_episode_id"), r.path("ending_episode_id"));
    v.record_id = as_nullable_string(r.optional("record_id"), r.path("record_id"));
    v.regeneration_count = as_int(r.required("regeneration_count"), r.path("regeneration_count"));
    v.task_completed = as_bool(r.required("task_completed"), r.path("task_completed"));
    v.closed = as_bool(r.required("closed"), r.path("closed"));
    v.created_at = as_int64(r.required("created_at"), r.path("created_at"));
    v.updated_at = as_int64(r.required("updated_at"), r.path("updated_at"));
    r.finish();
    return v;
}

Json encode(const InteractionEvent& v)
{
    return {{"event_id", v.event_id},
            {"session_id", v.session_id},
            {"page_id", v.page_id},
            {"event_key", v.event_key},
            {"payload",
             {{"kind", enum_json(v.payload.kind)},
              {"choice_branch", nullable(v.payload.choice_branch)},
              {"audio_asset", nullable(v.payload.audio_asset)}}},
            {"timestamp", v.timestamp}};
}

template <>
InteractionEvent decode<InteractionEvent>(const Json& j)
{
    ObjectReader r(j, "InteractionEvent");
    InteractionEvent v;
    if (const auto* id = r.optional("event_id")) {
        v.event_id = as_string(*id, r.path("event_id"));
    }
    if (const auto* sid = r.optional("session_id")) {
        v.session_id = as_string(*sid, r.path("session_id"));
    }
    v.page_id = as_string(r.required("page_id"), r.path("page_id"));
    v.event_key = as_string(r.required("event_key"), r.path("event_key"));
    ObjectReader p(r.required("payload"), r.path("payload"));
    v.payload.kind = as_enum<InteractionKind>(p.required("kind"), p.path("kind"));
    v.payload.choice_branch =
        as_nullable_string(p.optional("choice_branch"), p.path("choice_branch"));
    v.payload.audio_asset = as_nullable_string(p.optional("audio_asset"), p.path("audio_asset"));
    p.finish();
    if (const auto* ts = r.optional("timestamp")) {
        v.timestamp = as_int64(*ts, r.path("timestamp"));
    }
    r.finish();
    return v;
}

Json encode(const TransitionRecord& v)
{
    return {{"session_id", v.session_id},
            {"seq", v.seq},
            {"event", enum_json(v.event)},
            {"from", enum_json(v.from)},
            {"to", enum_json(v.to)},
            {"ref", nullable(v.ref)},
            {"timestamp", v.timestamp}};
}

template <>
TransitionRecord decode<TransitionRecord>(const Json& j)
{
    ObjectReader r(j, "TransitionRecord");
    TransitionRecord v;
    v.session_id = as_string(r.required("session_id"), r.path("session_id"));
    v.seq = as_int64(r.required("seq"), r.path("seq"));
    v.event = as_enum<SessionEvent>(r.required("event"), r.path("event"));
    v.from = as_enum<SessionState>(r.required("from"), r.path("from"));
    v.to = as_enum<SessionState>(r.required("to"), r.path("to"));
    v.ref = as_nullable_string(r.optional("ref"), r.path("ref"));
    v.timestamp = as_int64(r.required("timestamp"), r.path("timestamp"));
    r.finish();
    return v;
}

std::string dump_canonical(const Json& j)
{
    return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json parse_json(std::string_view text)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        fail(Errc::ParseError, e.what());
    }
}

void check_structure(TypeTag tag, std::string_view bytes)
{
    const Json j = parse_json(bytes);
    switch (tag) {
    case TypeTag::ChildAvatar: decode<ChildAvatar>(j); break;
    case TypeTag::BasicConstraints: decode<BasicConstraints>(j); break;
    case TypeTag::StoryFramework: decode<StoryFramework>(j); break;
    case TypeTag::RecapAndGoal: decode<RecapAndGoal>(j); break;
    case TypeTag::Page: decode<Page>(j); break;
    case TypeTag::Interaction: decode<Interaction>(j); break;
    case TypeTag::Episode: decode<Episode>(j); break;
    case TypeTag::EpisodeDraft: decode<EpisodeContent>(j); break;
    case TypeTag::PostMealRecord: decode<PostMealRecord>(j); break;
    case TypeTag::FeedbackMessage: decode<FeedbackMessage>(j); break;
    case TypeTag::FeedbackText: decode<FeedbackText>(j); break;
    case TypeTag::ValidationReport: decode<ValidationReport>(j); break;
    case TypeTag::TfoSession: decode<TfoSession>(j); break;
    case TypeTag::InteractionEvent: decode<InteractionEvent>(j); break;
    }
}

Episode parse_episode_document(std::string_view bytes)
{
    const Json j = parse_json(bytes);
    Episode episode;
    if (j.is_object() && j.contains("episode_id")) {
        episode = decode<Episode>(j);
    } else {
        episode = make_episode(decode<EpisodeContent>(j), "", "", EpisodeKind::Main);
    }
    return episode;
}

} // namespace storyecho
