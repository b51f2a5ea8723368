#pragma once

#include <storyecho/api.hpp>
#include <storyecho/config.hpp>
#include <storyecho/serialize.hpp>
#include <storyecho/unicode.hpp>
#include <storyecho/validator.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace storyecho::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// -- text -----------------------------------------------------------------

// Exactly `han` Han characters of plain narration drawn from a fixed clause
// pool, with CJK punctuation. `lead` is placed first and counts toward `han`.
std::string han_text(int han, std::uint64_t seed, const std::string& lead = "");

// Reference Han classification through ICU (script=Han, punctuation
// excluded). Independent of the library's range table.
bool icu_is_han(char32_t cp);
bool icu_is_assigned(char32_t cp);
std::size_t icu_count_han(const std::string& utf8);
std::string icu_encode(const std::u32string& cps);

// -- hand-built episodes ---------------------------------------------------

struct PageSpec {
    InteractionType type = InteractionType::None;
    // Page indices; -1 for null.
    int next = -1;
    std::vector<int> branches;
};

struct EpisodeSpec {
    std::string name;
    std::string food;
    std::string nickname;
    std::vector<PageSpec> pages;
    std::string id_prefix = "p";
};

// Builds a full Episode from a layout. Page texts are 66-74 Han characters.
Episode build_episode(const EpisodeSpec& spec, std::uint64_t seed);

// The eleven hand-built layouts and their episodes (all valid under default
// constraints).
std::vector<EpisodeSpec> corpus_specs();
std::vector<Episode> hand_built_corpus();

// Page index of the first choice page, or -1.
int choice_index(const Episode& episode);
// Indices i (0 < i < n-1) whose page is plain: no interaction, one incoming
// edge from a non-choice page, and a single next_page_id.
std::vector<int> plain_pages(const Episode& episode);

struct Mutant {
    std::string label;
    Episode episode;
    BasicConstraints constraints;
};

struct MutationClass {
    ViolationCode code;
    std::function<std::vector<Mutant>(const std::vector<Episode>&)> make;
};

std::vector<MutationClass> episode_mutation_classes();

struct FeedbackCase {
    std::string text;
    std::string nickname;
    std::string food;
    std::vector<std::string> recent;
};

std::vector<FeedbackCase> valid_feedback_cases();
std::vector<std::pair<ViolationCode, std::vector<FeedbackCase>>> feedback_mutants();

StoryFramework valid_framework(const std::string& nickname = "乐乐");
std::vector<std::pair<ViolationCode, std::vector<StoryFramework>>> framework_mutants();

// -- page-graph oracle -----------------------------------------------------

// Random page graph with at most `max_pages` pages and at most one choice
// page; every reference resolves and choice pages carry two branches.
Episode random_page_graph(std::mt19937_64& rng, int max_pages = 16);

// The four graph codes decided by enumerating every path explicitly.
std::set<ViolationCode> graph_oracle(const Episode& episode);
std::set<ViolationCode> graph_codes(const ValidationReport& report);

// -- providers -------------------------------------------------------------

// Provider whose complete() output is produced by a script; media calls go
// to an in-memory asset store.
class ScriptedProvider : public GenerationProvider {
public:
    using Script = std::function<std::string(const std::string& system_prompt,
                                             const std::string& payload, TypeTag tag, int call)>;

    explicit ScriptedProvider(Script script) : script_(std::move(script)) {}

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         TypeTag output_tag) override;
    std::string generate_image(const std::string& prompt,
                               const std::optional<std::string>& reference_asset) override;
    std::string synthesize_speech(const std::string& text) override;
    std::string transcribe(const std::string& audio_asset) override;
    std::string_view mode() const override { return "mock"; }

    int calls() const;
    std::vector<std::string> payloads() const;

private:
    Script script_;
    MemoryAssetStore assets_;
    mutable std::mutex mutex_;
    int calls_ = 0;
    std::vector<std::string> payloads_;
};

// Serialized episode draft (pages, visual_canon, page_image_prompt_packages).
std::string draft_json(const Episode& episode);

PromptLibrary prompts();

// -- store comparison ------------------------------------------------------

// export_child with ids renamed by first appearance per kind and every
// timestamp field removed.
Json normalized_export(const Store& store, const std::string& child_id);

// -- HTTP helpers ----------------------------------------------------------

struct HttpReply {
    int status = 0;
    Json body;
    std::string raw;
};

class ApiClient {
public:
    ApiClient(int port, std::string token);

    HttpReply get(const std::string& path) const;
    HttpReply post(const std::string& path, const Json& body,
                   const std::string& idempotency_key = "") const;
    HttpReply post_raw(const std::string& path, const std::string& body,
                       const std::string& content_type) const;
    // Polls until the job leaves queued/running.
    Json wait_job(const std::string& job_id) const;

    void set_token(std::string token) { token_ = std::move(token); }

private:
    int port_;
    std::string token_;
};

struct HttpDemoResult {
    std::string child_id;
    std::string session_id;
    Json final_session;
    Json feedback;
    Json ending;
};

// The demo-loop scenario driven entirely through HTTP endpoints.
HttpDemoResult drive_demo_over_http(const ApiClient& client, const std::string& food,
                                    int self_rating, const std::string& nickname,
                                    const std::string& theme, StoryMode mode);

// Runtime config rooted in `dir`: mock provider, manual clock, recording.
AppConfig test_config(const TempDir& dir, const std::string& name = "store.db");

} // namespace storyecho::testing
