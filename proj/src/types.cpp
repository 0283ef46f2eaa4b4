#include "veilqa/types.hpp"

#include <algorithm>

namespace veilqa {

bool is_flattened(const Relation& r) {
    return r.find(kFlattenSeparator) != std::string::npos;
}

std::pair<Relation, Relation> split_flattened(const Relation& r) {
    auto n = std::count(r.begin(), r.end(), kFlattenSeparator);
    if (n != 1) {
        throw GraphError("flattened relation must contain exactly one '" +
                         std::string(1, kFlattenSeparator) + "': " + r);
    }
    auto pos = r.find(kFlattenSeparator);
    return {r.substr(0, pos), r.substr(pos + 1)};
}

}  // namespace veilqa
