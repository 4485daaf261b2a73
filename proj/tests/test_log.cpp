#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "age/log.hpp"

using namespace age;
namespace fs = std::filesystem;

namespace {

std::vector<LoggedEvent> sample_events() {
    return {
        {0, 3, 0, {1, 9}, {3, 5, 7}},
        {1, 5, 1, {2, 8}, {5, 3}},
        {2, 7, 0, {0, 4}, {7}},
    };
}

fs::path scratch(const std::string& name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("events round-trip through their line format") {
    for (const LoggedEvent& ev : sample_events()) {
        LoggedEvent back = event_from_line(event_to_line(ev));
        CHECK(back.ts == ev.ts);
        CHECK(back.shown == ev.shown);
        CHECK(back.click == ev.click);
        CHECK(back.user == ev.user);
        CHECK(back.pool == ev.pool);
    }
}

TEST_CASE("log files round-trip plain and gzipped") {
    std::vector<LoggedEvent> events = sample_events();

    for (const char* name : {"age_log_test.jsonl", "age_log_test.jsonl.gz"}) {
        fs::path path = scratch(name);
        write_log(path.string(), events);
        std::vector<LoggedEvent> back = load_log(path.string());
        REQUIRE(back.size() == events.size());
        for (std::size_t i = 0; i < events.size(); ++i) {
            CHECK(back[i].ts == events[i].ts);
            CHECK(back[i].shown == events[i].shown);
            CHECK(back[i].click == events[i].click);
            CHECK(back[i].user == events[i].user);
            CHECK(back[i].pool == events[i].pool);
        }
        fs::remove(path);
    }
}

TEST_CASE("gzip writing actually compresses") {
    std::vector<LoggedEvent> events;
    for (std::int64_t i = 0; i < 2000; ++i)
        events.push_back({i, 1, 0, {1, 9}, {1, 2, 3, 4, 5}});
    fs::path plain = scratch("age_log_size.jsonl");
    fs::path gz = scratch("age_log_size.jsonl.gz");
    write_log(plain.string(), events);
    write_log(gz.string(), events);
    CHECK(fs::file_size(gz) < fs::file_size(plain) / 4);
    fs::remove(plain);
    fs::remove(gz);
}

TEST_CASE("malformed lines are reported with their location") {
    fs::path path = scratch("age_log_bad.jsonl");
    {
        std::ofstream out(path);
        out << event_to_line({0, 3, 0, {1, 9}, {3, 5}}) << "\n";
        out << "{\"ts\": 1, \"shown\": 5}\n";
    }
    try {
        load_log(path.string());
        FAIL("expected a parse failure");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find(":2:") != std::string::npos);
    }
    fs::remove(path);

    SUBCASE("a missing file is an error, not an empty log") {
        CHECK_THROWS(load_log(scratch("age_log_never_written.jsonl").string()));
    }
}

TEST_CASE("event validation guards the invariants") {
    LoggedEvent ok{0, 3, 0, {1, 9}, {3, 5}};
    CHECK_NOTHROW(validate_event(ok));

    LoggedEvent bad_click = ok;
    bad_click.click = 2;
    CHECK_THROWS_AS(validate_event(bad_click), std::invalid_argument);

    LoggedEvent empty_pool = ok;
    empty_pool.pool.clear();
    CHECK_THROWS_AS(validate_event(empty_pool), std::invalid_argument);

    LoggedEvent not_shown = ok;
    not_shown.shown = 4;
    CHECK_THROWS_AS(validate_event(not_shown), std::invalid_argument);

    LoggedEvent unsorted = ok;
    unsorted.user = {9, 1};
    CHECK_THROWS_AS(validate_event(unsorted), std::invalid_argument);

    LoggedEvent duplicated = ok;
    duplicated.user = {1, 1};
    CHECK_THROWS_AS(validate_event(duplicated), std::invalid_argument);
}

TEST_CASE("event_features swaps in the candidate arm") {
    LoggedEvent ev{0, 3, 0, {1, 9}, {3, 5}};
    SparseFeatureVector shown = event_features(ev, ev.shown);
    CHECK(shown.active_indices == ev.user);
    CHECK(shown.arm_id == 3);
    SparseFeatureVector other = event_features(ev, 5);
    CHECK(other.active_indices == ev.user);
    CHECK(other.arm_id == 5);
}
