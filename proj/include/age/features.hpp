#pragma once

#include <cstdint>
#include <vector>

namespace age {

/// One candidate input: multi-hot user feature indices plus the item id.
/// Indices must be strictly increasing and live in [0, feature_space).
struct SparseFeatureVector {
    std::vector<std::int32_t> active_indices;
    std::int32_t arm_id = 0;
};

inline bool strictly_increasing(const std::vector<std::int32_t>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1]) return false;
    return true;
}

}  // namespace age
