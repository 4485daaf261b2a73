#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "age/features.hpp"

namespace age {

/// One logged impression from a uniform-random display policy.
struct LoggedEvent {
    std::int64_t ts = 0;
    std::int32_t shown = 0;
    int click = 0;
    std::vector<std::int32_t> user;  // active user feature indices, ascending
    std::vector<std::int32_t> pool;  // candidate arm ids
};

/// Throws std::invalid_argument naming the violated field.
void validate_event(const LoggedEvent& ev);

/// Model input for one (event user, arm) pair.
SparseFeatureVector event_features(const LoggedEvent& ev, std::int32_t arm_id);

/// JSON-lines log I/O. A path ending in ".gz" reads/writes gzip. Parse
/// errors carry the 1-based line number. Events are one object per line:
/// {"ts":..,"shown":..,"click":..,"user":[..],"pool":[..]}.
std::vector<LoggedEvent> load_log(const std::string& path);
void write_log(const std::string& path, const std::vector<LoggedEvent>& events);

std::string event_to_line(const LoggedEvent& ev);
LoggedEvent event_from_line(const std::string& line);

}  // namespace age
