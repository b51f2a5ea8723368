#include "cli.hpp"

#include <storyecho/api.hpp>
#include <storyecho/unicode.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace storyecho::cli {

namespace {

constexpr Timestamp kDemoClockStart = 1'700'000'000'000;

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(Errc::NotFound, "cannot read " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    return text.str();
}

std::string interaction_label(const Page& page)
{
    if (!page.interaction || page.interaction->type == InteractionType::None) {
        return "";
    }
    return " [" + std::string(enum_name(page.interaction->type)) + " " +
           page.interaction->event_key.value_or("") + "]";
}

void print_episode(std::ostream& out, const Episode& episode)
{
    for (const auto& page : episode.pages) {
        out << "  " << page.page_id << interaction_label(page) << " -> "
            << page.next_page_id.value_or("end");
        for (const auto& b : page.branch_choices) {
            out << " | " << b.choice_id << ":" << b.next_page_id;
        }
        out << "\n    " << page.page_text_cn << "\n";
    }
}

std::size_t total_han(const Episode& episode)
{
    std::size_t n = 0;
    for (const auto& p : episode.pages) {
        n += count_han_chars(p.page_text_cn);
    }
    return n;
}

std::string report_line(const ValidationReport& report)
{
    return report.ok() ? "ok" : "FAILED\n" + describe(report);
}

// Walks the episode once the way a reader would and logs each interaction.
void read_through(InterventionLoop& loop, const std::string& session_id, const Episode& episode,
                  std::ostream& out)
{
    std::map<std::string, const Page*> by_id;
    for (const auto& p : episode.pages) {
        by_id[p.page_id] = &p;
    }
    const Page* page = episode.pages.empty() ? nullptr : &episode.pages.front();
    while (page) {
        std::optional<std::string> next = page->next_page_id;
        if (page->interaction && page->interaction->type != InteractionType::None) {
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
            case InteractionType::RecordVoice:
                e.payload.kind = InteractionKind::VoiceRecorded;
                e.payload.audio_asset =
                    loop.pipeline().provider().synthesize_speech(demo_voice_text(*page->interaction));
                break;
            case InteractionType::None: break;
            }
            const auto id = loop.record_interaction(session_id, e);
            out << "  " << id << " " << enum_name(e.payload.kind) << " " << e.event_key << "\n";
        }
        page = next && by_id.count(*next) ? by_id[*next] : nullptr;
    }
}

int report_error(const Error& e, std::ostream& err)
{
    err << "error: " << to_string(e.code()) << ": " << e.detail() << "\n";
    return kExitFailure;
}

} // namespace

ChildAvatar demo_avatar(const std::string& nickname,
                        const std::optional<std::string>& reference_image)
{
    ChildAvatar avatar;
    avatar.nickname = nickname;
    avatar.gender = Gender::Unspecified;
    avatar.clothing = "yellow raincoat";
    avatar.accessories = {"small backpack"};
    avatar.base_reference_image = reference_image;
    return avatar;
}

std::string demo_voice_text(const Interaction& interaction)
{
    return "（孩子的录音）" + interaction.instruction;
}

PostMealRecord demo_record(const std::string& food, int self_rating)
{
    if (self_rating < 1 || self_rating > 10) {
        fail(Errc::RangeError, "self_rating must be 1-10, got " + std::to_string(self_rating));
    }
    PostMealRecord r;
    r.target_food = food;
    r.baseline_try = 2;
    r.try_level = 1 + (self_rating - 1) * 6 / 9;
    r.intake = std::max(1, r.try_level - 1);
    r.resistance = 8 - r.try_level;
    r.emotion = 1 + (self_rating - 1) * 6 / 9;
    r.parent_pressure = 2;
    r.helpfulness = 4 + (self_rating >= 7 ? 2 : 0);
    r.self_rating = self_rating;
    if (self_rating >= 7) {
        r.self_description = "今天尝了一小口" + food;
    } else if (self_rating <= 3) {
        r.self_description = "今天不想吃，把" + food + "推开了";
    } else {
        r.self_description = "看了看" + food + "，还闻了闻";
    }
    return r;
}

DemoResult run_demo(AppConfig config, const DemoOptions& options, bool allow_real)
{
    const auto record = demo_record(options.food, options.self_rating);
    if (config.provider_mode == ProviderMode::Real && !allow_real) {
        fail(Errc::PreconditionFailed, "demo-loop runs with the mock provider; pass --allow-real "
                                       "to use the real provider");
    }
    config.record_calls = true;
    if (!config.manual_clock_start) {
        config.manual_clock_start = kDemoClockStart;
    }
    const auto network_before = network_call_count();
    Runtime rt(config);
    auto& loop = rt.loop();
    std::ostringstream out;
    DemoResult result;

    out << "storyecho demo loop (provider " << enum_name(config.provider_mode) << ", seed "
        << config.seed << ")\n";

    const auto avatar = demo_avatar(options.nickname,
                                    rt.provider().generate_image(kDemoPortraitPrompt, std::nullopt));
    result.child_id = loop.create_avatar(avatar, kDemoFamily);
    out << "avatar: " << result.child_id << " " << avatar.nickname << "\n";

    const auto framework = loop.create_framework(result.child_id, options.theme, options.mode);
    out << "framework: " << framework.framework_id << " " << enum_name(framework.story_mode)
        << " object=" << framework.recurring_elements.recurring_object
        << " phrase=" << framework.recurring_elements.recurring_phrase << "\n";

    auto session = loop.create_session(result.child_id, options.food);
    result.session_id = session.session_id;
    out << "session: " << session.session_id << " food=" << session.target_food << "\n";

    loop.start_generation(session.session_id);
    session = loop.generate_story(session.session_id);
    result.main_episode = rt.store().get_episode(*session.main_episode_id);
    result.main_report = validate_episode(result.main_episode, config.constraints);
    out << "episode: " << result.main_episode.episode_id
        << " pages=" << result.main_episode.pages.size() << " han=" << total_han(result.main_episode)
        << " images=" << rt.store().page_images(result.main_episode.episode_id).size()
        << " validation=" << report_line(result.main_report) << "\n";
    print_episode(out, result.main_episode);

    loop.review(session.session_id, ReviewDecision::Approve);
    out << "review: approved\n";
    out << "reading:\n";
    read_through(loop, session.session_id, result.main_episode, out);
    loop.finish_reading(session.session_id);

    loop.submit_post_meal(session.session_id, record);
    out << "post-meal: self_rating=" << record.self_rating << " try_level=" << record.try_level
        << " description=" << record.self_description << "\n";

    session = loop.complete_post_meal(session.session_id);
    const auto feedback = rt.store().feedback_for_session(session.session_id);
    result.avatar_state = loop.avatar_state(session.session_id);
    out << "feedback (" << enum_name(feedback->message.basic_type)
        << "): " << feedback->message.text_cn << "\n";
    out << "avatar state: " << enum_name(result.avatar_state) << "\n";

    result.ending_episode = rt.store().get_episode(*session.ending_episode_id);
    result.variant = select_ending_variant(record.self_rating);
    result.ending_report = validate_episode(result.ending_episode, config.constraints);
    out << "ending: " << result.ending_episode.episode_id << " variant="
        << enum_name(result.variant) << " pages=" << result.ending_episode.pages.size()
        << " validation=" << report_line(result.ending_report) << "\n";
    print_episode(out, result.ending_episode);

    out << "transitions:";
    for (const auto& t : rt.store().transitions(session.session_id)) {
        out << " " << enum_name(t.event);
    }
    out << "\nfinal state: " << enum_name(session.state) << "\n";

    result.final_session = session;
    result.provider_calls = rt.recorder()->call_count();
    result.network_calls = network_call_count() - network_before;
    out << "provider calls: " << result.provider_calls << " (" << rt.provider().mode()
        << "), network calls: " << result.network_calls << "\n";
    result.transcript = out.str();
    return result;
}

int cmd_validate(const std::filesystem::path& file, const BasicConstraints& constraints,
                 std::ostream& out, std::ostream& err)
{
    Episode episode;
    try {
        episode = parse_episode_document(read_file(file));
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.detail() << "\n";
        return kExitParse;
    }
    const auto report = validate_episode(episode, constraints);
    out << dump_canonical(encode(report)) << "\n";
    if (!report.ok()) {
        err << describe(report);
    }
    return report.ok() ? kExitOk : kExitFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"storyecho: child-as-actor storytelling engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string store_path;
    std::string provider;
    std::uint64_t seed = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--store", store_path, "Store file (overrides config)");
    app.add_option("--provider", provider, "Provider mode")
        ->check(CLI::IsMember({"mock", "real"}));
    auto* seed_opt = app.add_option("--seed", seed, "Mock provider seed");
    app.add_flag("--verbose,-v", verbose, "Verbose output");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host;
    int port = -1;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    auto* validate = app.add_subcommand("validate", "Validate an episode JSON file");
    std::string validate_file;
    validate->add_option("file", validate_file)->required();

    auto* demo = app.add_subcommand("demo-loop", "Run one full loop and print a transcript");
    DemoOptions demo_opts;
    bool allow_real = false;
    std::string demo_mode = "realistic_everyday";
    demo->add_option("--food", demo_opts.food);
    demo->add_option("--rating", demo_opts.self_rating);
    demo->add_option("--nickname", demo_opts.nickname);
    demo->add_option("--theme", demo_opts.theme);
    demo->add_option("--mode", demo_mode);
    demo->add_flag("--allow-real", allow_real, "Permit the real provider");

    auto* exp = app.add_subcommand("export", "Export one child's data as a JSON archive");
    std::string export_child;
    std::string export_out;
    exp->add_option("child_id", export_child)->required();
    exp->add_option("--out,-o", export_out, "Output file (stdout when omitted)");

    auto* imp = app.add_subcommand("import", "Import an archive written by export");
    std::string import_file;
    imp->add_option("file", import_file)->required();

    auto* close = app.add_subcommand("close-session", "Close a stale session");
    std::string close_id;
    close->add_option("session_id", close_id)->required();

    auto* gen_fw = app.add_subcommand("gen-framework", "Generate a story framework");
    std::string gen_nickname = "乐乐";
    std::string gen_theme;
    std::string gen_mode = "realistic_everyday";
    gen_fw->add_option("--nickname", gen_nickname);
    gen_fw->add_option("--theme", gen_theme);
    gen_fw->add_option("--mode", gen_mode);

    auto* gen_ep = app.add_subcommand("gen-episode", "Generate a main episode");
    std::string gen_food = "西兰花";
    std::string gen_framework_file;
    gen_ep->add_option("--food", gen_food);
    gen_ep->add_option("--nickname", gen_nickname);
    gen_ep->add_option("--mode", gen_mode);
    gen_ep->add_option("--framework", gen_framework_file, "Framework JSON (generated if absent)");

    auto* token = app.add_subcommand("issue-token", "Issue an API bearer token for a family");
    std::string token_family;
    token->add_option("family_id", token_family)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        AppConfig config = config_path.empty() ? AppConfig{} : load_config(config_path);
        if (!store_path.empty()) {
            config.store_path = store_path;
        }
        if (!provider.empty()) {
            config.provider_mode = *enum_from_name<ProviderMode>(provider);
        }
        if (seed_opt->count() > 0) {
            config.seed = seed;
        }
        auto parse_mode = [](const std::string& name) {
            const auto m = enum_from_name<StoryMode>(name);
            if (!m) {
                fail(Errc::SchemaViolation, "unknown story mode " + name);
            }
            return *m;
        };

        if (*validate) {
            return cmd_validate(validate_file, config.constraints, out, err);
        }
        if (*demo) {
            demo_opts.mode = parse_mode(demo_mode);
            const auto result = run_demo(config, demo_opts, allow_real);
            out << result.transcript;
            return result.final_session.state == SessionState::EndingReady ? kExitOk
                                                                           : kExitFailure;
        }
        if (*gen_fw || *gen_ep) {
            MemoryAssetStore assets;
            resolve_credentials(config);
            std::unique_ptr<GenerationProvider> p;
            if (config.provider_mode == ProviderMode::Real) {
                p = std::make_unique<HttpProvider>(assets, config.http);
            } else {
                p = std::make_unique<MockProvider>(assets, config.seed);
            }
            PipelineConfig pc;
            pc.max_retries = config.max_retries;
            Pipeline pipeline(
                *p, PromptLibrary::load(config.prompt_dir.value_or(PromptLibrary::default_dir())),
                pc);
            ChildAvatar avatar;
            avatar.nickname = gen_nickname;
            check_invariants(avatar);
            StoryFramework framework;
            if (*gen_ep && !gen_framework_file.empty()) {
                framework = canonical_parse<StoryFramework>(read_file(gen_framework_file));
            } else {
                framework = pipeline.generate_framework(gen_theme, parse_mode(gen_mode),
                                                        config.constraints, avatar);
            }
            if (*gen_fw) {
                out << dump_canonical(encode(framework)) << "\n";
                return kExitOk;
            }
            const auto episode = pipeline.generate_episode(
                framework, std::nullopt, gen_food, avatar, config.constraints, {});
            out << dump_canonical(encode(episode)) << "\n";
            return kExitOk;
        }

        resolve_credentials(config);
        if (*serve) {
            if (!host.empty()) {
                config.host = host;
            }
            if (port >= 0) {
                config.port = port;
            }
            Runtime rt(config);
            ApiService api(rt.loop(), config.job_parallelism,
                           std::string(enum_name(config.provider_mode)));
            const int bound = api.bind(config.host, config.port);
            out << "listening on " << config.host << ":" << bound << " (provider "
                << enum_name(config.provider_mode) << ")" << std::endl;
            api.listen();
            return kExitOk;
        }

        Store store(config.store_path, config.asset_dir);
        if (*exp) {
            const auto archive = dump_canonical(store.export_child(export_child));
            if (export_out.empty()) {
                out << archive << "\n";
            } else {
                std::ofstream f(export_out, std::ios::binary);
                f << archive << "\n";
                if (!f) {
                    fail(Errc::StorageError, "cannot write " + export_out);
                }
                if (verbose) {
                    err << "wrote " << export_out << "\n";
                }
            }
            return kExitOk;
        }
        if (*imp) {
            store.import_archive(parse_json(read_file(import_file)));
            out << "imported " << import_file << "\n";
            return kExitOk;
        }
        if (*close) {
            auto s = store.get_session(close_id);
            if (!s.closed) {
                s.closed = true;
                s.updated_at = store.now();
                store.update_session(s);
            }
            out << dump_canonical(encode(s)) << "\n";
            return kExitOk;
        }
        if (*token) {
            out << store.issue_token(token_family) << "\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        return report_error(e, err);
    }
    return kExitFailure;
}

} // namespace storyecho::cli
