#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "age/log.hpp"

namespace age {

/// Result of converting a space-delimited Yahoo-style bandit log
/// ("ts arm click |user i i i ... |arm |arm ...") into the canonical format.
/// Arm identifiers are mapped to dense ids in first-seen order; user feature
/// vectors are reduced to a fixed field count, with per-slot sentinel
/// indices standing in when a user has too few active features.
struct ImportResult {
    std::vector<LoggedEvent> events;
    std::vector<std::string> arm_names;  // dense id -> original identifier
    std::int64_t feature_space = 0;      // includes the sentinel block
    int num_user_fields = 0;
};

ImportResult import_r6b(const std::string& path, int num_user_fields);

/// Writes result.events next to a sidecar JSON describing the dimensions
/// and the arm id mapping, so replay configs can be dimensioned from it.
void write_import(const ImportResult& result, const std::string& log_path,
                  const std::string& sidecar_path);

}  // namespace age
