#include "age/r6b.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <zlib.h>

namespace age {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(const std::string& path, std::int64_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

ImportResult import_r6b(const std::string& path, int num_user_fields) {
    if (num_user_fields < 1)
        throw std::invalid_argument("import: num_user_fields must be positive");

    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error(path + ": cannot open");

    ImportResult res;
    res.num_user_fields = num_user_fields;
    std::map<std::string, std::int32_t> arm_ids;
    std::int32_t max_feature = -1;

    std::string line;
    char buf[1 << 16];
    std::int64_t line_no = 0;
    bool eof = false;
    while (!eof) {
        line.clear();
        for (;;) {
            if (gzgets(f, buf, sizeof(buf)) == nullptr) {
                eof = true;
                break;
            }
            line += buf;
            if (!line.empty() && line.back() == '\n') break;
        }
        if (line.empty()) continue;
        ++line_no;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        if (line.empty()) continue;

        // Blocks are separated by '|': header, the user block, one block per
        // candidate arm.
        std::vector<std::string> blocks;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t bar = line.find('|', pos);
            if (bar == std::string::npos) bar = line.size();
            blocks.push_back(line.substr(pos, bar - pos));
            pos = bar + 1;
        }
        if (blocks.size() < 3) {
            gzclose(f);
            fail(path, line_no, "expected header, user block, and at least one arm block");
        }

        std::vector<std::string> head = split_ws(blocks[0]);
        if (head.size() != 3) {
            gzclose(f);
            fail(path, line_no, "header must be 'timestamp arm click'");
        }

        LoggedEvent ev;
        std::string shown_name;
        try {
            ev.ts = std::stoll(head[0]);
            shown_name = head[1];
            ev.click = std::stoi(head[2]);
        } catch (const std::exception&) {
            gzclose(f);
            fail(path, line_no, "malformed header fields");
        }
        if (ev.click != 0 && ev.click != 1) {
            gzclose(f);
            fail(path, line_no, "click must be 0 or 1");
        }

        std::vector<std::string> user_toks = split_ws(blocks[1]);
        if (user_toks.empty() || user_toks[0] != "user") {
            gzclose(f);
            fail(path, line_no, "second block must start with 'user'");
        }
        std::vector<std::int32_t> raw;
        for (std::size_t i = 1; i < user_toks.size(); ++i) {
            try {
                raw.push_back(static_cast<std::int32_t>(std::stol(user_toks[i])));
            } catch (const std::exception&) {
                gzclose(f);
                fail(path, line_no, "user features must be integers");
            }
        }
        std::sort(raw.begin(), raw.end());
        raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
        for (std::int32_t v : raw)
            if (v < 0) {
                gzclose(f);
                fail(path, line_no, "user feature indices must be non-negative");
            }
        if (!raw.empty()) max_feature = std::max(max_feature, raw.back());
        // Keep the lowest indices; sentinel slots (resolved after the scan)
        // fill in when a user has fewer actives than fields.
        if (static_cast<int>(raw.size()) > num_user_fields)
            raw.resize(static_cast<std::size_t>(num_user_fields));
        ev.user = std::move(raw);

        auto arm_of = [&](const std::string& name) {
            auto [it, fresh] =
                arm_ids.try_emplace(name, static_cast<std::int32_t>(arm_ids.size()));
            if (fresh) res.arm_names.push_back(name);
            return it->second;
        };

        bool shown_in_pool = false;
        for (std::size_t b = 2; b < blocks.size(); ++b) {
            std::vector<std::string> toks = split_ws(blocks[b]);
            if (toks.empty()) continue;
            std::int32_t arm = arm_of(toks[0]);
            ev.pool.push_back(arm);
            if (toks[0] == shown_name) shown_in_pool = true;
        }
        if (ev.pool.empty()) {
            gzclose(f);
            fail(path, line_no, "no candidate arms");
        }
        if (!shown_in_pool) {
            gzclose(f);
            fail(path, line_no, "displayed arm missing from the candidate set");
        }
        ev.shown = arm_of(shown_name);
        res.events.push_back(std::move(ev));
    }
    gzclose(f);

    // Sentinel indices live above every real feature; slot k gets its own
    // index so padded vectors stay strictly increasing.
    std::int64_t sentinel_base = static_cast<std::int64_t>(max_feature) + 1;
    res.feature_space = sentinel_base + num_user_fields;
    for (LoggedEvent& ev : res.events) {
        int missing = num_user_fields - static_cast<int>(ev.user.size());
        for (int k = 0; k < missing; ++k)
            ev.user.push_back(static_cast<std::int32_t>(sentinel_base + k));
        validate_event(ev);
    }
    return res;
}

void write_import(const ImportResult& result, const std::string& log_path,
                  const std::string& sidecar_path) {
    write_log(log_path, result.events);
    nlohmann::json j{{"feature_space", result.feature_space},
                     {"num_user_fields", result.num_user_fields},
                     {"arm_space", result.arm_names.size()},
                     {"arm_names", result.arm_names}};
    FILE* f = std::fopen(sidecar_path.c_str(), "wb");
    if (!f) throw std::runtime_error(sidecar_path + ": cannot open for writing");
    std::string text = j.dump(2);
    text += '\n';
    bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    ok = (std::fclose(f) == 0) && ok;
    if (!ok) throw std::runtime_error(sidecar_path + ": write error");
}

}  // namespace age
