#pragma once
// Prompt templates are external text assets with named {{slot}} markers.
// Rendering must fill every slot; a leftover marker is a bug.

#include <map>
#include <string>

#include "veilqa/types.hpp"

namespace veilqa {

class PromptLibrary {
public:
    // Loads every known template from `dir`. Missing files throw ConfigError.
    static PromptLibrary load(const std::string& dir);

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& slots) const;
    const std::string& raw(const std::string& name) const;

    // Template file names, without the .txt suffix.
    static const std::vector<std::string>& template_names();

private:
    std::map<std::string, std::string> templates_;
};

// The assets directory compiled in from the source tree; config may override.
std::string default_prompts_dir();

}  // namespace veilqa
