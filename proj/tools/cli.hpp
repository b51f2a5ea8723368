#pragma once

#include <storyecho/config.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace storyecho::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParse = 2;

// Entry point used by main() and by tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// 0 ok, 1 violations, 2 unreadable or unparseable.
int cmd_validate(const std::filesystem::path& file, const BasicConstraints& constraints,
                 std::ostream& out, std::ostream& err);

struct DemoOptions {
    std::string food = "西兰花";
    int self_rating = 8;
    std::string nickname = "乐乐";
    std::string theme = "厨房里的小发现";
    StoryMode mode = StoryMode::RealisticEveryday;
};

struct DemoResult {
    std::string transcript;
    std::string child_id;
    std::string session_id;
    TfoSession final_session;
    Episode main_episode;
    Episode ending_episode;
    ValidationReport main_report;
    ValidationReport ending_report;
    EndingVariant variant = EndingVariant::Warm;
    AvatarState avatar_state = AvatarState::Neutral;
    std::size_t provider_calls = 0;
    std::uint64_t network_calls = 0;
};

// Runs the whole loop against `config` (mock unless allow_real). Throws
// RangeError for a rating outside 1-10 before anything is generated.
DemoResult run_demo(AppConfig config, const DemoOptions& options, bool allow_real = false);

// The synthetic post-meal record the demo submits for a rating.
PostMealRecord demo_record(const std::string& food, int self_rating);

// Fixed inputs of the demo scenario, shared with clients that replay it.
inline constexpr const char* kDemoFamily = "demo-family";
inline constexpr const char* kDemoPortraitPrompt =
    "portrait of a cheerful preschool child in a yellow raincoat";
ChildAvatar demo_avatar(const std::string& nickname,
                        const std::optional<std::string>& reference_image);
// Text spoken for a record_voice page.
std::string demo_voice_text(const Interaction& interaction);

} // namespace storyecho::cli
