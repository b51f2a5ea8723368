#pragma once

#include "storyecho/domain.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace storyecho {

enum class Stage { Framework, Summarize, Episode, Ending, Feedback, PageImage };

STORYECHO_ENUM_NAMES(Stage, {Stage::Framework, "framework"}, {Stage::Summarize, "summarize"},
                     {Stage::Episode, "episode"}, {Stage::Ending, "ending"},
                     {Stage::Feedback, "feedback"}, {Stage::PageImage, "page_image"});

struct PromptTemplate {
    Stage stage = Stage::Framework;
    std::string version;
    std::string text;
};

// One file per text stage, named <stage>.txt. The first line is
// "version: <id>", the rest is the system prompt.
class PromptLibrary {
public:
    // Throws ConfigError when a stage file is missing or has no version line.
    static PromptLibrary load(const std::filesystem::path& dir);

    // The source tree's prompts/ when present, else the installed copy.
    static std::filesystem::path default_dir();

    const PromptTemplate& get(Stage stage) const;

private:
    std::map<Stage, PromptTemplate> templates_;
};

} // namespace storyecho
