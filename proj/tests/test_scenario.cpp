#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "quiks/errors.hpp"
#include "quiks/scenario.hpp"

using namespace quiks;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
        "name": "t",
        "apps": [{"source": 0, "destination": 1, "rate_rps": 50, "demand_blocks": 100}],
        "scheme": {"type": "quiks"}
    })");
}

std::string error_field(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST_CASE("defaults fill in a minimal scenario") {
    const auto c = parse_config(minimal());
    CHECK(c.name == "t");
    CHECK(c.slot_seconds == doctest::Approx(0.05));
    CHECK(c.block_bits == 256);
    CHECK(std::holds_alternative<QuiksScheme>(c.scheme));
    CHECK(std::get<QuiksScheme>(c.scheme).params == QuiksParams{});
    CHECK(c.key_budget.mode == KeyBudgetMode::Abundant);
}

TEST_CASE("to_json round-trips every scheme and option") {
    auto doc = minimal();
    doc["apps"].push_back(json::parse(
        R"({"source": 3, "destination": 7, "start_s": 2.5, "rate_rps": 20, "demand_blocks": 9,
            "process": {"type": "ppbp", "event_rate": 2.0, "shape": 1.5}})"));
    doc["random_apps"] = json::parse(R"({"count": 4, "start_max_s": 10, "rate_rps": 5,
                                          "demand_blocks": 30, "process": "ppbp"})");
    doc["pair_schemes"] = json::parse(R"([
        {"source": 3, "destination": 7, "scheme": {"type": "kaas", "rate_rps": 40}},
        {"source": 1, "destination": 2, "scheme": {"type": "dt_vqkp", "factor": 50}},
        {"source": 1, "destination": 3, "scheme": {"type": "st_vqkp"}},
        {"source": 1, "destination": 4, "scheme": {"type": "no_buffer"}}])");
    doc["key_budget"] = json::parse(R"({"mode": "limited", "headroom": 1.3,
                                         "initial_fraction": 0.5, "accrual_s": 60})");
    doc["acceptance"] = json::parse(R"({"min_instant_ratio": 0.9, "max_mean_buffer_bytes": 1e4})");
    doc["topology"] = json::parse(R"({"builtin": "nsfnet", "link_delay_s": 0.3})");
    doc["seed"] = 99;
    const auto c = parse_config(doc);
    const auto again = parse_config(to_json(c));
    CHECK(again == c);
    CHECK(to_json(again) == to_json(c));
}

TEST_CASE("explicit links round-trip") {
    auto doc = minimal();
    doc["topology"] = json::parse(R"({"links": [
        {"a": 0, "b": 1, "metric": 2, "delay_s": 0.1, "key_rate_bps": 1000},
        {"a": 1, "b": 2, "metric": 1, "delay_s": 0.2, "key_rate_bps": 1000}]})");
    const auto c = parse_config(doc);
    CHECK(parse_config(to_json(c)) == c);
    CHECK(build_topology(c.topology).links().size() == 2);
}

TEST_CASE("invalid fields are named") {
    auto d = minimal();
    d["horizon_slots"] = 0;
    CHECK(error_field(d) == "horizon_slots");

    d = minimal();
    d["slot_seconds"] = -1;
    CHECK(error_field(d) == "slot_seconds");

    d = minimal();
    d["apps"][0]["destination"] = 0;
    CHECK(error_field(d).starts_with("apps[0]"));

    d = minimal();
    d["scheme"]["type"] = "magic";
    CHECK(error_field(d).starts_with("scheme"));

    d = minimal();
    d["bogus"] = 1;
    CHECK(error_field(d) == "bogus");

    d = minimal();
    d["apps"][0]["rate_rps"] = "fast";
    CHECK(error_field(d) == "apps[0].rate_rps");


    d = minimal();
    d["key_budget"] = json::parse(R"({"mode": "limited", "headroom": 0})");
    CHECK(error_field(d).starts_with("key_budget"));

    d = minimal();
    d.erase("apps");
    CHECK(error_field(d) == "apps");
}

TEST_CASE("endpoints outside the topology are rejected when apps are expanded") {
    auto d = minimal();
    d["apps"][0]["destination"] = 42;
    const auto c = parse_config(d);
    try {
        (void)expand_apps(c, build_topology(c.topology));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "apps[0].destination");
    }
}

TEST_CASE("random apps are seeded and have distinct endpoints") {
    auto doc = minimal();
    doc.erase("apps");
    doc["random_apps"] = json::parse(R"({"count": 50})");
    const auto c = parse_config(doc);
    const auto t = build_topology(c.topology);
    const auto a = expand_apps(c, t);
    CHECK(a == expand_apps(c, t));
    REQUIRE(a.size() == 50);
    for (const auto& app : a) {
        CHECK(app.source != app.destination);
        CHECK(app.start_time >= 0.0);
        CHECK(app.start_time <= 150.0);
    }
    auto other = c;
    other.seed = 2;
    CHECK(expand_apps(other, t) != a);
}

TEST_CASE("scheme labels and controllers") {
    CHECK(scheme_label(QuiksScheme{}) == "quiks");
    CHECK(scheme_label(KaasScheme{120}) == "kaas-120");
    CHECK(scheme_label(DtVqkpScheme{}) == "dt_vqkp");
    CHECK(make_controller(StVqkpScheme{}, 0.05, {})->name() == "st_vqkp");
    CHECK(make_controller(NoBufferScheme{}, 0.05, {})->name() == "no_buffer");
}

TEST_CASE("a relative topology file resolves against the config") {
    const auto dir = std::filesystem::temp_directory_path() / "quiks_scenario_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "line.txt") << "0 1 1 100 1000\n1 2 1 100 1000\n";
    auto doc = minimal();
    doc["topology"] = json::parse(R"({"file": "line.txt"})");
    std::ofstream(dir / "s.json") << doc.dump();
    const auto c = load_config(dir / "s.json");
    CHECK(build_topology(c.topology).nodes().size() == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed json is a config error") {
    const auto dir = std::filesystem::temp_directory_path() / "quiks_scenario_bad";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS((void)load_config(dir / "bad.json"), ConfigError);
    std::filesystem::remove_all(dir);
}
