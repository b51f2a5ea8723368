#include "storyecho/provider.hpp"

namespace storyecho {

namespace {
std::atomic<std::uint64_t> g_network_calls{0};
} // namespace

std::uint64_t network_call_count()
{
    return g_network_calls.load();
}

void note_network_call()
{
    ++g_network_calls;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis)
{
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void RecordingProvider::record(RecordedCall call)
{
    std::lock_guard lock(mutex_);
    calls_.push_back(std::move(call));
}

std::string RecordingProvider::complete(const std::string& system_prompt,
                                        const std::string& user_payload, TypeTag output_tag)
{
    record({"complete", output_tag, user_payload});
    return inner_.complete(system_prompt, user_payload, output_tag);
}

std::string RecordingProvider::generate_image(const std::string& prompt,
                                              const std::optional<std::string>& reference_asset)
{
    record({"generate_image", std::nullopt, prompt});
    return inner_.generate_image(prompt, reference_asset);
}

std::string RecordingProvider::synthesize_speech(const std::string& text)
{
    record({"synthesize_speech", std::nullopt, text});
    return inner_.synthesize_speech(text);
}

std::string RecordingProvider::transcribe(const std::string& audio_asset)
{
    record({"transcribe", std::nullopt, audio_asset});
    return inner_.transcribe(audio_asset);
}

std::vector<RecordedCall> RecordingProvider::calls() const
{
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t RecordingProvider::call_count() const
{
    std::lock_guard lock(mutex_);
    return calls_.size();
}

std::size_t RecordingProvider::complete_count(TypeTag tag) const
{
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& c : calls_) {
        n += c.method == "complete" && c.tag == tag;
    }
    return n;
}

} // namespace storyecho
