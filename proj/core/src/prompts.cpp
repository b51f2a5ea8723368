#include "storyecho/prompts.hpp"

#include "storyecho/errors.hpp"

#include <fstream>
#include <sstream>

namespace storyecho {

namespace {

constexpr Stage kTextStages[] = {Stage::Framework, Stage::Summarize, Stage::Episode, Stage::Ending,
                                 Stage::Feedback};

PromptTemplate read_template(const std::filesystem::path& file, Stage stage)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        fail(Errc::ConfigError, "prompt template not readable: " + file.string());
    }
    std::string first;
    std::getline(in, first);
    constexpr std::string_view prefix = "version:";
    if (!first.starts_with(prefix)) {
        fail(Errc::ConfigError, "prompt template without version line: " + file.string());
    }
    PromptTemplate t;
    t.stage = stage;
    t.version = trim(std::string_view(first).substr(prefix.size()));
    std::ostringstream body;
    body << in.rdbuf();
    t.text = trim(body.str());
    if (t.version.empty() || t.text.empty()) {
        fail(Errc::ConfigError, "empty prompt template: " + file.string());
    }
    return t;
}

} // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir)
{
    PromptLibrary lib;
    for (auto stage : kTextStages) {
        const auto file = dir / (std::string(enum_name(stage)) + ".txt");
        lib.templates_.emplace(stage, read_template(file, stage));
    }
    return lib;
}

std::filesystem::path PromptLibrary::default_dir()
{
    const std::filesystem::path source = STORYECHO_DEFAULT_PROMPT_DIR;
    if (std::filesystem::exists(source / "episode.txt")) {
        return source;
    }
    return STORYECHO_INSTALLED_PROMPT_DIR;
}

const PromptTemplate& PromptLibrary::get(Stage stage) const
{
    auto it = templates_.find(stage);
    if (it == templates_.end()) {
        fail(Errc::ConfigError, "no prompt template for stage " + std::string(enum_name(stage)));
    }
    return it->second;
}

} // namespace storyecho
