#pragma once
// Privacy layer: owns the MID <-> surface-name map, anonymization and
// user-side de-anonymization, and the leak audit applied to every outbound
// model payload.
//
// Matching rule for audits: whole-token, case-insensitive for names of
// length >= 3; shorter names require an exact-case whole-token match.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "veilqa/kg_store.hpp"
#include "veilqa/types.hpp"

namespace veilqa {

struct LeakViolation {
    std::size_t offset;        // byte offset into the payload
    std::string matched_name;  // the protected surface name found
    Mid mid;                   // the entity that name belongs to
};

struct LeakReport {
    std::vector<LeakViolation> violations;
    bool clean() const { return violations.empty(); }
};

// Surface names permitted in outbound payloads for one question: exactly the
// topic-entity names.
class AllowList {
public:
    AllowList() = default;
    explicit AllowList(const std::vector<std::string>& names);
    bool contains(const std::string& name) const;
    std::size_t size() const { return folded_.size(); }

private:
    std::set<std::string> folded_;
};

class PrivacyMap {
public:
    PrivacyMap() = default;

    std::optional<std::string> name_of(const Mid& mid) const;
    // Lookup by name is case-folded; ambiguous names return all candidates.
    std::vector<Mid> mids_of(const std::string& name) const;

    const std::map<Mid, std::string>& mid_to_name() const { return mid_to_name_; }
    std::size_t size() const { return mid_to_name_.size(); }
    bool empty() const { return mid_to_name_.empty(); }

    // Persists the map as mid\tname lines.
    void save(const std::string& path) const;

private:
    std::map<Mid, std::string> mid_to_name_;
    std::map<std::string, std::vector<Mid>> name_to_mid_;  // case-folded keys

    friend PrivacyMap build_privacy_map(const Graph& g);
    friend PrivacyMap make_privacy_map_for_tests(std::map<Mid, std::string> entries);
};

// Builds the bidirectional map from the graph's name store. The only
// production call site of Graph::entity_name.
PrivacyMap build_privacy_map(const Graph& g);

PrivacyMap make_privacy_map_for_tests(std::map<Mid, std::string> entries);

// Scans a payload for protected names outside the allow list.
LeakReport audit_payload(const std::string& payload, const PrivacyMap& map,
                         const AllowList& allow);

// Replaces every mapped MID substring with its surface name; unmapped MIDs
// pass through with an "(unnamed)" annotation. `mid_pattern` is the regex
// for MID substrings.
std::vector<std::string> deanonymize_answers(const std::vector<std::string>& answers,
                                             const PrivacyMap& map,
                                             const std::string& mid_pattern);

// Extracts MID substrings from free text, in order of appearance.
std::vector<Mid> extract_mids(const std::string& text, const std::string& mid_pattern);

inline constexpr const char* kDefaultMidPattern = R"(\bm\.[0-9a-z_]+)";

// Synchronized append-only audit trail. Records are line-delimited JSON with
// a logical timestamp, the calling module, the payload offset and a redacted
// context window around the match.
class AuditLog {
public:
    struct Record {
        std::int64_t timestamp;
        std::string module;
        std::size_t offset;
        std::string redacted_context;
    };

    void record(const std::string& module, const std::string& payload,
                const LeakReport& report);
    std::vector<Record> records() const;
    std::size_t violation_count() const;
    void write(const std::string& path) const;

    // Logical clock keeps fixture runs reproducible.
    void set_clock(std::int64_t start) { next_stamp_ = start; }

private:
    mutable std::mutex mu_;
    std::vector<Record> records_;
    std::int64_t next_stamp_ = 0;
};

}  // namespace veilqa
