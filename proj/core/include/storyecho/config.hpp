#pragma once

#include "storyecho/loop.hpp"
#include "storyecho/provider.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace storyecho {

enum class ProviderMode { Mock, Real };

STORYECHO_ENUM_NAMES(ProviderMode, {ProviderMode::Mock, "mock"}, {ProviderMode::Real, "real"});

struct AppConfig {
    std::filesystem::path store_path = "storyecho.db";
    std::optional<std::filesystem::path> asset_dir;

    ProviderMode provider_mode = ProviderMode::Mock;
    std::uint64_t seed = 42;
    HttpProviderConfig http;
    // Environment variable holding the real provider's API key.
    std::string api_key_env = "STORYECHO_API_KEY";

    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t job_parallelism = 2;

    int max_retries = kDefaultMaxRetries;
    bool render_images = true;
    int recent_phrase_window = 5;
    std::optional<std::filesystem::path> prompt_dir;
    BasicConstraints constraints;

    // Wraps the provider in a RecordingProvider (tests, demo runs).
    bool record_calls = false;
    // Fixed clock start for reproducible runs; system clock when unset.
    std::optional<Timestamp> manual_clock_start;
};

// Reads a JSON config file. Unknown keys and bad values raise ConfigError.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const Json& json);

// Real mode needs the API key variable to be set; fills http.api_key.
// Throws ConfigError otherwise.
void resolve_credentials(AppConfig& config);

// Store, provider, pipeline and loop wired from one config.
class Runtime {
public:
    explicit Runtime(AppConfig config);

    const AppConfig& config() const { return config_; }
    Store& store() { return *store_; }
    GenerationProvider& provider() { return recorder_ ? *recorder_ : *provider_; }
    // Null unless config.record_calls.
    RecordingProvider* recorder() { return recorder_.get(); }
    Pipeline& pipeline() { return *pipeline_; }
    InterventionLoop& loop() { return *loop_; }

private:
    AppConfig config_;
    std::unique_ptr<Store> store_;
    std::unique_ptr<GenerationProvider> provider_;
    std::unique_ptr<RecordingProvider> recorder_;
    std::unique_ptr<Pipeline> pipeline_;
    std::unique_ptr<InterventionLoop> loop_;
};

} // namespace storyecho
