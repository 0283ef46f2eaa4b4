#pragma once
// Core domain vocabulary shared across the engine.
//
// Entities are opaque machine identifiers (MIDs); their surface names live
// only in the privacy layer. Relations are never anonymized. A flattened
// two-hop relation joins its hops with kFlattenSeparator.

#include <compare>
#include <stdexcept>
#include <string>

namespace veilqa {

using Mid = std::string;       // e.g. "m.02mjmr"
using Relation = std::string;  // e.g. "language.human_language.main_country"

inline constexpr char kFlattenSeparator = '|';

enum class Direction { AsSubject, AsObject };

inline const char* to_string(Direction d) {
    return d == Direction::AsSubject ? "subject" : "object";
}

struct Triplet {
    Mid head;
    Relation relation;
    Mid tail;

    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

// Error taxonomy: config problems exit 2, provider problems exit 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// True if `r` is a flattened two-hop relation (exactly one separator).
bool is_flattened(const Relation& r);

// Splits "r1|r2" into its hops. Throws GraphError unless separator count == 1.
std::pair<Relation, Relation> split_flattened(const Relation& r);

}  // namespace veilqa
