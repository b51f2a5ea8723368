#include "storyecho/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace storyecho {

namespace {

void only_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) {
        fail(Errc::ConfigError, where + " must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            fail(Errc::ConfigError, "unknown config key " + where + "." + key);
        }
    }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception&) {
        fail(Errc::ConfigError, "bad value for " + where + "." + key);
    }
}

} // namespace

AppConfig parse_config(const Json& json)
{
    AppConfig c;
    only_keys(json, {"store", "provider", "server", "generation", "clock"}, "config");

    if (json.contains("store")) {
        const auto& s = json.at("store");
        only_keys(s, {"path", "asset_dir"}, "store");
        std::string path = c.store_path.string();
        read(s, "path", path, "store");
        c.store_path = path;
        std::string assets;
        read(s, "asset_dir", assets, "store");
        if (!assets.empty()) {
            c.asset_dir = assets;
        }
    }
    if (json.contains("provider")) {
        const auto& p = json.at("provider");
        only_keys(p, {"mode", "seed", "base_url", "api_key_env", "models", "timeout_ms"},
                  "provider");
        std::string mode = "mock";
        read(p, "mode", mode, "provider");
        const auto parsed = enum_from_name<ProviderMode>(mode);
        if (!parsed) {
            fail(Errc::ConfigError, "provider.mode must be mock or real");
        }
        c.provider_mode = *parsed;
        read(p, "seed", c.seed, "provider");
        read(p, "base_url", c.http.base_url, "provider");
        read(p, "api_key_env", c.api_key_env, "provider");
        read(p, "models", c.http.models, "provider");
        std::int64_t timeout = c.http.timeout.count();
        read(p, "timeout_ms", timeout, "provider");
        c.http.timeout = std::chrono::milliseconds(timeout);
    }
    if (json.contains("server")) {
        const auto& s = json.at("server");
        only_keys(s, {"host", "port", "job_parallelism"}, "server");
        read(s, "host", c.host, "server");
        read(s, "port", c.port, "server");
        read(s, "job_parallelism", c.job_parallelism, "server");
        if (c.port < 0 || c.port > 65535 || c.job_parallelism == 0) {
            fail(Errc::ConfigError, "server.port or server.job_parallelism out of range");
        }
    }
    if (json.contains("generation")) {
        const auto& g = json.at("generation");
        only_keys(g,
                  {"max_retries", "render_images", "recent_phrase_window", "prompt_dir",
                   "basic_constraints"},
                  "generation");
        read(g, "max_retries", c.max_retries, "generation");
        read(g, "render_images", c.render_images, "generation");
        read(g, "recent_phrase_window", c.recent_phrase_window, "generation");
        std::string dir;
        read(g, "prompt_dir", dir, "generation");
        if (!dir.empty()) {
            c.prompt_dir = dir;
        }
        if (g.contains("basic_constraints")) {
            try {
                c.constraints = decode<BasicConstraints>(g.at("basic_constraints"));
                check_invariants(c.constraints);
            } catch (const Error& e) {
                fail(Errc::ConfigError, "generation.basic_constraints: " + e.detail());
            }
        }
        if (c.max_retries < 0) {
            fail(Errc::ConfigError, "generation.max_retries must be >= 0");
        }
    }
    if (json.contains("clock")) {
        const auto& k = json.at("clock");
        only_keys(k, {"manual_start"}, "clock");
        Timestamp start = 0;
        read(k, "manual_start", start, "clock");
        if (start > 0) {
            c.manual_clock_start = start;
        }
    }
    return c;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(Errc::ConfigError, "cannot read config file " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    try {
        return parse_config(parse_json(text.str()));
    } catch (const Error& e) {
        if (e.code() == Errc::ConfigError) {
            throw;
        }
        fail(Errc::ConfigError, path.string() + ": " + e.detail());
    }
}

void resolve_credentials(AppConfig& config)
{
    if (config.provider_mode != ProviderMode::Real) {
        return;
    }
    const char* key = std::getenv(config.api_key_env.c_str());
    if (!key || !*key) {
        fail(Errc::ConfigError, "real provider mode needs the " + config.api_key_env +
                                    " environment variable");
    }
    config.http.api_key = key;
    if (config.http.base_url.empty()) {
        fail(Errc::ConfigError, "real provider mode needs provider.base_url");
    }
}

Runtime::Runtime(AppConfig config) : config_(std::move(config))
{
    resolve_credentials(config_);
    std::shared_ptr<Clock> clock;
    if (config_.manual_clock_start) {
        clock = std::make_shared<ManualClock>(*config_.manual_clock_start);
    } else {
        clock = std::make_shared<SystemClock>();
    }
    store_ = std::make_unique<Store>(config_.store_path, config_.asset_dir, clock);
    if (config_.provider_mode == ProviderMode::Real) {
        provider_ = std::make_unique<HttpProvider>(*store_, config_.http);
    } else {
        provider_ = std::make_unique<MockProvider>(*store_, config_.seed);
    }
    if (config_.record_calls) {
        recorder_ = std::make_unique<RecordingProvider>(*provider_);
    }
    PipelineConfig pc;
    pc.max_retries = config_.max_retries;
    pipeline_ = std::make_unique<Pipeline>(
        provider(),
        PromptLibrary::load(config_.prompt_dir.value_or(PromptLibrary::default_dir())), pc);
    LoopConfig lc;
    lc.constraints = config_.constraints;
    lc.render_images = config_.render_images;
    lc.recent_phrase_window = config_.recent_phrase_window;
    lc.feedback_seed = static_cast<std::int64_t>(config_.seed);
    loop_ = std::make_unique<InterventionLoop>(*store_, *pipeline_, lc);
}

} // namespace storyecho
