#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "age/replay.hpp"
#include "age/synth.hpp"

namespace age {

/// Shortest round-trip decimal for a double ("%.17g" trimmed via re-parse).
std::string format_double(double v);

/// RFC-4180: quotes a field when it holds a comma, quote, or line break.
std::string csv_escape(const std::string& field);

std::string csv_line(std::span<const std::string> fields);

void write_text_file(const std::string& path, const std::string& content);

std::string replay_report_json(const ReplayReport& rep, const std::string& policy_name);
std::string live_report_json(const LiveReport& rep, const std::string& policy_name,
                             std::uint64_t seed);

/// Per-seed table: policy,seed,clicks,matched,ctr,pcoc. The pcoc field is
/// empty when undefined.
std::string results_csv(std::span<const ReplayReport> reports,
                        std::span<const std::string> names);

/// Per-policy aggregate: mean and sample std of cumulative clicks plus mean
/// ctr/pcoc, computed from exactly the per-seed values in the results table.
std::string summary_csv(std::span<const ReplayReport> reports,
                        std::span<const std::string> names);

std::string live_results_csv(std::span<const LiveReport> reports,
                             std::span<const std::string> names,
                             std::span<const std::uint64_t> seeds);

/// manifest.json: the resolved config, its digest, the seeds, and every
/// artifact the run wrote. No clocks, so reruns are byte-identical.
std::string manifest_json(const std::string& config_text, std::span<const std::uint64_t> seeds,
                          std::span<const std::string> outputs);

}  // namespace age
