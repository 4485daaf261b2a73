#include "age/reporting.hpp"

#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "age/config.hpp"
#include "age/metrics.hpp"

namespace age {

namespace {

using nlohmann::json;

json curves_json(std::span<const ArmCurvePoint> points) {
    json arr = json::array();
    for (const ArmCurvePoint& p : points)
        arr.push_back(json{{"arm", p.arm_id},
                           {"impressions", p.impressions},
                           {"empirical_ctr", p.empirical_ctr},
                           {"mean_pred", p.mean_pred}});
    return arr;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Prefer the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        double back = std::strtod(probe, nullptr);
        if (back == v) return probe;
    }
    return buf;
}

std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string csv_line(std::span<const std::string> fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    out += "\r\n";
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    ok = (std::fclose(f) == 0) && ok;
    if (!ok) throw std::runtime_error(path + ": write error");
}

std::string replay_report_json(const ReplayReport& rep, const std::string& policy_name) {
    json j{{"policy", policy_name},
           {"seed", rep.seed},
           {"events_seen", rep.events_seen},
           {"events_matched", rep.events_matched},
           {"cumulative_clicks", rep.cumulative_clicks},
           {"matched_ctr", rep.matched_ctr},
           {"pcoc", rep.pcoc.defined ? json(rep.pcoc.value) : json()},
           {"per_arm_curves", curves_json(rep.per_arm_curves)}};
    return j.dump(2) + "\n";
}

std::string live_report_json(const LiveReport& rep, const std::string& policy_name,
                             std::uint64_t seed) {
    json j{{"policy", policy_name},
           {"seed", seed},
           {"steps", rep.steps},
           {"clicks", rep.clicks},
           {"regret", rep.regret},
           {"pcoc", rep.pcoc.defined ? json(rep.pcoc.value) : json()},
           {"pcoc_low", rep.pcoc_low.defined ? json(rep.pcoc_low.value) : json()},
           {"per_arm_curves", curves_json(rep.curves)}};
    return j.dump(2) + "\n";
}

std::string results_csv(std::span<const ReplayReport> reports,
                        std::span<const std::string> names) {
    if (reports.size() != names.size())
        throw std::invalid_argument("results_csv: name/report mismatch");
    std::string out = csv_line(std::vector<std::string>{"policy", "seed", "clicks", "matched",
                                                        "ctr", "pcoc"});
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const ReplayReport& r = reports[i];
        out += csv_line(std::vector<std::string>{
            names[i], std::to_string(r.seed), std::to_string(r.cumulative_clicks),
            std::to_string(r.events_matched), format_double(r.matched_ctr),
            r.pcoc.defined ? format_double(r.pcoc.value) : std::string()});
    }
    return out;
}

std::string summary_csv(std::span<const ReplayReport> reports,
                        std::span<const std::string> names) {
    if (reports.size() != names.size())
        throw std::invalid_argument("summary_csv: name/report mismatch");
    // Group by name, preserving first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ReplayReport*>> by_name;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (!by_name.count(names[i])) order.push_back(names[i]);
        by_name[names[i]].push_back(&reports[i]);
    }

    std::string out = csv_line(std::vector<std::string>{
        "policy", "runs", "mean_clicks", "std_clicks", "mean_ctr", "mean_pcoc"});
    for (const std::string& name : order) {
        const auto& group = by_name[name];
        std::vector<double> clicks, ctrs, pcocs;
        for (const ReplayReport* r : group) {
            clicks.push_back(static_cast<double>(r->cumulative_clicks));
            ctrs.push_back(r->matched_ctr);
            if (r->pcoc.defined) pcocs.push_back(r->pcoc.value);
        }
        out += csv_line(std::vector<std::string>{
            name, std::to_string(group.size()), format_double(mean_of(clicks)),
            format_double(std_of(clicks)), format_double(mean_of(ctrs)),
            pcocs.empty() ? std::string() : format_double(mean_of(pcocs))});
    }
    return out;
}

std::string live_results_csv(std::span<const LiveReport> reports,
                             std::span<const std::string> names,
                             std::span<const std::uint64_t> seeds) {
    if (reports.size() != names.size() || reports.size() != seeds.size())
        throw std::invalid_argument("live_results_csv: length mismatch");
    std::string out = csv_line(std::vector<std::string>{"policy", "seed", "steps", "clicks",
                                                        "regret", "pcoc", "pcoc_low"});
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const LiveReport& r = reports[i];
        out += csv_line(std::vector<std::string>{
            names[i], std::to_string(seeds[i]), std::to_string(r.steps),
            std::to_string(r.clicks), format_double(r.regret),
            r.pcoc.defined ? format_double(r.pcoc.value) : std::string(),
            r.pcoc_low.defined ? format_double(r.pcoc_low.value) : std::string()});
    }
    return out;
}

std::string manifest_json(const std::string& config_text, std::span<const std::uint64_t> seeds,
                          std::span<const std::string> outputs) {
    char digest[19];
    std::snprintf(digest, sizeof(digest), "0x%016llx",
                  static_cast<unsigned long long>(config_digest(config_text)));
    json j{{"config", json::parse(config_text)},
           {"config_digest", digest},
           {"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())},
           {"outputs", std::vector<std::string>(outputs.begin(), outputs.end())}};
    return j.dump(2) + "\n";
}

}  // namespace age
