#pragma once

#include "storyecho/assets.hpp"
#include "storyecho/errors.hpp"
#include "storyecho/serialize.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace storyecho {

// Text, image and audio generation backend. complete() returns a payload
// that decodes under `tag`, or throws Error{ProviderError}. Implementations
// must be safe for concurrent calls.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;

    virtual std::string complete(const std::string& system_prompt, const std::string& user_payload,
                                 TypeTag output_tag) = 0;
    virtual std::string generate_image(const std::string& prompt,
                                       const std::optional<std::string>& reference_asset) = 0;
    virtual std::string synthesize_speech(const std::string& text) = 0;
    virtual std::string transcribe(const std::string& audio_asset) = 0;

    // "mock" or "real".
    virtual std::string_view mode() const = 0;
};

// Process-wide count of outbound network requests made by providers.
std::uint64_t network_call_count();
void note_network_call();

struct RecordedCall {
    std::string method; // complete, generate_image, synthesize_speech, transcribe
    std::optional<TypeTag> tag;
    std::string input;
};

// Forwards to an inner provider and records every call.
class RecordingProvider : public GenerationProvider {
public:
    explicit RecordingProvider(GenerationProvider& inner) : inner_(inner) {}

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         TypeTag output_tag) override;
    std::string generate_image(const std::string& prompt,
                               const std::optional<std::string>& reference_asset) override;
    std::string synthesize_speech(const std::string& text) override;
    std::string transcribe(const std::string& audio_asset) override;
    std::string_view mode() const override { return inner_.mode(); }

    std::vector<RecordedCall> calls() const;
    std::size_t call_count() const;
    std::size_t complete_count(TypeTag tag) const;

private:
    void record(RecordedCall call);

    GenerationProvider& inner_;
    mutable std::mutex mutex_;
    std::vector<RecordedCall> calls_;
};

// Deterministic offline provider. Each call seeds its generator from a hash
// of (stage, payload bytes, seed), so identical inputs give identical output.
// Output is always schema-valid; on a call carrying a repair report it
// steers away from the reported problems.
class MockProvider : public GenerationProvider {
public:
    MockProvider(AssetStore& assets, std::uint64_t seed);

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         TypeTag output_tag) override;
    std::string generate_image(const std::string& prompt,
                               const std::optional<std::string>& reference_asset) override;
    std::string synthesize_speech(const std::string& text) override;
    std::string transcribe(const std::string& audio_asset) override;
    std::string_view mode() const override { return "mock"; }

private:
    AssetStore& assets_;
    std::uint64_t seed_;
};

// 64-bit FNV-1a; the mock's seed derivation.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

struct HttpProviderConfig {
    std::string base_url;               // scheme://host[:port]
    std::string api_key;                // sent as a bearer token when non-empty
    std::map<std::string, std::string> models; // stage name -> model id
    std::chrono::milliseconds timeout{60000};
};

// OpenAI-compatible HTTP backend: chat completions in JSON mode, image
// generation/edits, speech synthesis and transcription.
class HttpProvider : public GenerationProvider {
public:
    HttpProvider(AssetStore& assets, HttpProviderConfig config);

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         TypeTag output_tag) override;
    std::string generate_image(const std::string& prompt,
                               const std::optional<std::string>& reference_asset) override;
    std::string synthesize_speech(const std::string& text) override;
    std::string transcribe(const std::string& audio_asset) override;
    std::string_view mode() const override { return "real"; }

private:
    std::string model_for(const std::string& stage) const;

    AssetStore& assets_;
    HttpProviderConfig config_;
};

} // namespace storyecho
