#include "age/log.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>
#include <zlib.h>

namespace age {

namespace {

using nlohmann::json;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

[[noreturn]] void line_error(const std::string& path, std::int64_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

void validate_event(const LoggedEvent& ev) {
    if (ev.click != 0 && ev.click != 1)
        throw std::invalid_argument("event: click must be 0 or 1");
    if (ev.pool.empty()) throw std::invalid_argument("event: empty pool");
    if (std::find(ev.pool.begin(), ev.pool.end(), ev.shown) == ev.pool.end())
        throw std::invalid_argument("event: shown arm not in pool");
    if (!strictly_increasing(ev.user))
        throw std::invalid_argument("event: user indices must be strictly increasing");
}

SparseFeatureVector event_features(const LoggedEvent& ev, std::int32_t arm_id) {
    return {ev.user, arm_id};
}

std::string event_to_line(const LoggedEvent& ev) {
    json j{{"ts", ev.ts}, {"shown", ev.shown}, {"click", ev.click},
           {"user", ev.user}, {"pool", ev.pool}};
    return j.dump();
}

LoggedEvent event_from_line(const std::string& line) {
    json j = json::parse(line);
    if (!j.is_object()) throw std::invalid_argument("event is not a JSON object");
    for (const char* key : {"ts", "shown", "click", "user", "pool"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    LoggedEvent ev;
    ev.ts = j.at("ts").get<std::int64_t>();
    ev.shown = j.at("shown").get<std::int32_t>();
    ev.click = j.at("click").get<int>();
    ev.user = j.at("user").get<std::vector<std::int32_t>>();
    ev.pool = j.at("pool").get<std::vector<std::int32_t>>();
    validate_event(ev);
    return ev;
}

std::vector<LoggedEvent> load_log(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");  // reads both plain and gzip streams
    if (!f) throw std::runtime_error(path + ": cannot open");

    std::vector<LoggedEvent> events;
    std::string line;
    std::int64_t line_no = 0;
    char buf[1 << 16];
    bool eof = false;
    while (!eof) {
        line.clear();
        // A line may span several gzgets calls.
        for (;;) {
            if (gzgets(f, buf, sizeof(buf)) == nullptr) {
                eof = true;
                break;
            }
            line += buf;
            if (!line.empty() && line.back() == '\n') break;
        }
        if (line.empty()) continue;  // end of stream with nothing pending
        ++line_no;
        if (line.back() == '\n') line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;  // blank line
        try {
            events.push_back(event_from_line(line));
        } catch (const std::exception& e) {
            gzclose(f);
            line_error(path, line_no, e.what());
        }
    }
    int err = 0;
    gzerror(f, &err);
    gzclose(f);
    if (err != Z_OK && err != Z_STREAM_END)
        throw std::runtime_error(path + ": read error");
    return events;
}

void write_log(const std::string& path, const std::vector<LoggedEvent>& events) {
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error(path + ": cannot open for writing");
        for (const LoggedEvent& ev : events) {
            std::string line = event_to_line(ev);
            line += '\n';
            if (gzwrite(f, line.data(), static_cast<unsigned>(line.size())) == 0) {
                gzclose(f);
                throw std::runtime_error(path + ": write error");
            }
        }
        if (gzclose(f) != Z_OK) throw std::runtime_error(path + ": close error");
        return;
    }
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    for (const LoggedEvent& ev : events) {
        std::string line = event_to_line(ev);
        line += '\n';
        if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
            std::fclose(f);
            throw std::runtime_error(path + ": write error");
        }
    }
    if (std::fclose(f) != 0) throw std::runtime_error(path + ": close error");
}

}  // namespace age
