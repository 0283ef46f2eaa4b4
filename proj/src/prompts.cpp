#include "veilqa/prompts.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace veilqa {

#ifndef VEILQA_PROMPTS_DIR
#define VEILQA_PROMPTS_DIR "assets/prompts"
#endif

std::string default_prompts_dir() { return VEILQA_PROMPTS_DIR; }

const std::vector<std::string>& PromptLibrary::template_names() {
    static const std::vector<std::string> names{
        "relation_retrieval",  "entity_abstraction", "structure_abstraction",
        "generator_sufficiency", "generator_answer",   "generator_fused",
        "cot_baseline",
    };
    return names;
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
    PromptLibrary lib;
    for (const auto& name : template_names()) {
        std::string path = dir + "/" + name + ".txt";
        std::ifstream in(path);
        if (!in) throw ConfigError("missing prompt template: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        lib.templates_[name] = buf.str();
    }
    return lib;
}

const std::string& PromptLibrary::raw(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& slots) const {
    std::string out = raw(name);
    for (const auto& [key, value] : slots) {
        const std::string marker = "{{" + key + "}}";
        for (auto pos = out.find(marker); pos != std::string::npos;
             pos = out.find(marker, pos)) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    auto leftover = out.find("{{");
    if (leftover != std::string::npos && out.find("}}", leftover) != std::string::npos) {
        throw ConfigError("unfilled slot in template '" + name +
                          "' near: " + out.substr(leftover, 40));
    }
    return out;
}

}  // namespace veilqa
