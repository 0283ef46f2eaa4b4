#include "veilqa/privacy_guard.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

namespace veilqa {

namespace {

std::string fold(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Whole-token scan: occurrences of `needle` in `hay` bounded by non-token
// characters on both sides.
std::vector<std::size_t> token_occurrences(const std::string& hay, const std::string& needle) {
    std::vector<std::size_t> offsets;
    if (needle.empty()) return offsets;
    for (auto pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + 1)) {
        bool left_ok = pos == 0 || !is_token_char(hay[pos - 1]);
        auto end = pos + needle.size();
        bool right_ok = end >= hay.size() || !is_token_char(hay[end]);
        if (left_ok && right_ok) offsets.push_back(pos);
    }
    return offsets;
}

}  // namespace

AllowList::AllowList(const std::vector<std::string>& names) {
    for (const auto& n : names) folded_.insert(fold(n));
}

bool AllowList::contains(const std::string& name) const {
    return folded_.count(fold(name)) != 0;
}

std::optional<std::string> PrivacyMap::name_of(const Mid& mid) const {
    auto it = mid_to_name_.find(mid);
    if (it == mid_to_name_.end()) return std::nullopt;
    return it->second;
}

std::vector<Mid> PrivacyMap::mids_of(const std::string& name) const {
    auto it = name_to_mid_.find(fold(name));
    if (it == name_to_mid_.end()) return {};
    return it->second;
}

void PrivacyMap::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write privacy map: " + path);
    for (const auto& [mid, name] : mid_to_name_) out << mid << '\t' << name << '\n';
}

PrivacyMap build_privacy_map(const Graph& g) {
    const auto* mem = dynamic_cast<const InMemoryGraph*>(&g);
    if (!mem) {
        throw ConfigError("privacy map for a remote graph must come from a "
                          "names sidecar file");
    }
    PrivacyMap map;
    map.mid_to_name_ = mem->names_;
    for (const auto& [mid, name] : map.mid_to_name_) {
        map.name_to_mid_[fold(name)].push_back(mid);
    }
    for (auto& [name, mids] : map.name_to_mid_) std::sort(mids.begin(), mids.end());
    return map;
}

PrivacyMap make_privacy_map_for_tests(std::map<Mid, std::string> entries) {
    PrivacyMap map;
    map.mid_to_name_ = std::move(entries);
    for (const auto& [mid, name] : map.mid_to_name_) {
        map.name_to_mid_[fold(name)].push_back(mid);
    }
    for (auto& [name, mids] : map.name_to_mid_) std::sort(mids.begin(), mids.end());
    return map;
}

LeakReport audit_payload(const std::string& payload, const PrivacyMap& map,
                         const AllowList& allow) {
    LeakReport report;
    const std::string folded_payload = fold(payload);

    // One scan per distinct exact name; duplicate names keep their first MID.
    std::map<std::string, Mid> by_name;
    for (const auto& [mid, name] : map.mid_to_name()) by_name.try_emplace(name, mid);

    for (const auto& [name, mid] : by_name) {
        if (allow.contains(name)) continue;
        std::vector<std::size_t> hits;
        if (name.size() >= 3) {
            hits = token_occurrences(folded_payload, fold(name));
        } else {
            hits = token_occurrences(payload, name);
        }
        for (auto off : hits) report.violations.push_back({off, name, mid});
    }
    std::sort(report.violations.begin(), report.violations.end(),
              [](const LeakViolation& a, const LeakViolation& b) {
                  return std::tie(a.offset, a.matched_name) <
                         std::tie(b.offset, b.matched_name);
              });
    return report;
}

std::vector<Mid> extract_mids(const std::string& text, const std::string& mid_pattern) {
    std::vector<Mid> out;
    std::regex re(mid_pattern);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
         it != std::sregex_iterator(); ++it) {
        out.push_back(it->str());
    }
    return out;
}

std::vector<std::string> deanonymize_answers(const std::vector<std::string>& answers,
                                             const PrivacyMap& map,
                                             const std::string& mid_pattern) {
    std::regex re(mid_pattern);
    std::vector<std::string> out;
    out.reserve(answers.size());
    for (const auto& answer : answers) {
        std::string result;
        auto last = answer.cbegin();
        for (auto it = std::sregex_iterator(answer.begin(), answer.end(), re);
             it != std::sregex_iterator(); ++it) {
            result.append(last, answer.cbegin() + it->position());
            auto name = map.name_of(it->str());
            result += name ? *name : it->str() + " (unnamed)";
            last = answer.cbegin() + it->position() + it->length();
        }
        result.append(last, answer.cend());
        out.push_back(std::move(result));
    }
    return out;
}

void AuditLog::record(const std::string& module, const std::string& payload,
                      const LeakReport& report) {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& v : report.violations) {
        constexpr std::size_t kWindow = 24;
        std::size_t begin = v.offset > kWindow ? v.offset - kWindow : 0;
        std::size_t end = std::min(payload.size(), v.offset + v.matched_name.size() + kWindow);
        std::string context = payload.substr(begin, v.offset - begin) + "[REDACTED]" +
                              payload.substr(v.offset + v.matched_name.size(),
                                             end - v.offset - v.matched_name.size());
        records_.push_back({next_stamp_++, module, v.offset, std::move(context)});
    }
}

std::vector<AuditLog::Record> AuditLog::records() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_;
}

std::size_t AuditLog::violation_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return records_.size();
}

void AuditLog::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write audit log: " + path);
    for (const auto& r : records()) {
        nlohmann::json j{{"timestamp", r.timestamp},
                         {"module", r.module},
                         {"offset", r.offset},
                         {"context", r.redacted_context}};
        out << j.dump() << '\n';
    }
}

}  // namespace veilqa
