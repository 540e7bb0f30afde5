#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wsched/scenario.hpp"

using namespace wsched;
using nlohmann::json;

namespace {

std::string error_of(const json& j, const ConfigOverrides& ov = {}) {
    try {
        parse_config_json(j, ov);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
    const auto s = parse_config_json(json::parse(R"({"policies":["stationary_type1"]})"));
    REQUIRE(s.size() == 1);
    CHECK(s[0].num_users == 20);
    CHECK(s[0].threshold_d == 0.6);
    CHECK(s[0].buffer_cap == 100);
    CHECK(s[0].holding_coeff == 1.0);
    CHECK(s[0].energy.kind == EnergyFunction::Kind::linear);
    CHECK(s[0].gamma == 0.05);
    CHECK(s[0].n_iter == 200);
    CHECK(s[0].n_slots == 10000);
    CHECK(s[0].policy.theta == 200.0);
    CHECK_FALSE(s[0].policy.aloha_p.has_value());
    CHECK(s[0].regime.name() == "default_restricted");
    CHECK(s[0].id() == "default_restricted");
}

TEST_CASE("validation errors name the field") {
    CHECK(error_of(json::parse(R"({"policies":["mws"],"d":0})")).rfind("config.d", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"d":-1})")).rfind("config.d", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"bogus":1})")).find("bogus") != std::string::npos);
    CHECK(error_of(json::parse(R"({"policies":["nope"]})")).rfind("config.policies[0]", 0) == 0);
    CHECK(error_of(json::parse(R"({})")).rfind("config.policies", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"seed":1,"seeds":[2]})")) != "");
    CHECK(error_of(json::parse(R"({"policies":["mws"],"regime":"huge_restricted"})")).rfind("config.regime", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"users":3,"user_overrides":[{"user":5}]})"))
              .rfind("config.user_overrides[0].user", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"exact_cap":65})")).rfind("config.exact_cap", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"aloha_p":1.5})")).rfind("config.aloha_p", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"energy":{"kind":"cubic"}})")).rfind("config.energy.kind", 0) == 0);
    CHECK(error_of(json::parse(R"({"policies":["mws"],"initial_queue":101})")) != "");
}

TEST_CASE("regimes times policies") {
    const auto j = json::parse(R"({
        "regimes": ["default_restricted", "default_unrestricted", "large_restricted", "large_unrestricted"],
        "policies": ["ns_type1", "ns_type2", "stationary_type1", "stationary_type2", "aloha", "mws", "lyapunov"]
    })");
    const auto s = parse_config_json(j);
    CHECK(s.size() == 28);
    CHECK(s[0].regime.name() == "default_restricted");
    CHECK(s[0].policy.name() == "ns_type1");
    CHECK(s[7].regime.name() == "default_unrestricted");
    CHECK(s[27].policy.name() == "lyapunov");
    CHECK(s[0].family_hash() == s[6].family_hash());
    CHECK(s[0].family_hash() != s[7].family_hash());
}

TEST_CASE("emitted config parses back to the same scenario") {
    const auto j = json::parse(R"({
        "name": "demo", "users": 5, "d": 0.3, "buffer_cap": 40, "holding_coeff": 2.0,
        "energy": {"kind": "quadratic", "coeff": 0.5},
        "user_overrides": [{"user": 1, "arrival_mean": 3.0, "tx_cap": "unbounded"},
                           {"user": 2, "arrival_pmf": [0.5, 0.5], "buffer_cap": 10, "initial_queue": 4}],
        "regime": "small_unrestricted", "policies": ["aloha", "mws", "all_passive"],
        "seeds": [3, 4], "slots": 777, "burn_in": 10, "gamma": 0.1, "n_iter": 30, "theta": 5,
        "aloha_p": 0.25, "mws_mode": "exact", "mws_weight": "queue_times_service", "exact_cap": 30
    })");
    for (const auto& s : parse_config_json(j)) {
        const auto back = parse_config_json(s.to_json());
        REQUIRE(back.size() == 1);
        CHECK(back[0] == s);
        CHECK(back[0].config_hash() == s.config_hash());
    }
}

TEST_CASE("config hash ignores seeds") {
    auto a = parse_config_json(json::parse(R"({"policies":["mws"],"seeds":[1,2,3]})"))[0];
    auto b = parse_config_json(json::parse(R"({"policies":["mws"],"seed":9})"))[0];
    CHECK(a.config_hash() == b.config_hash());
    b.n_slots = 10;
    CHECK(a.config_hash() != b.config_hash());
    auto c = parse_config_json(json::parse(R"({"policies":["aloha"]})"))[0];
    CHECK(a.family_hash() == c.family_hash());
    CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("command-line overrides") {
    ConfigOverrides ov;
    ov.seeds = {7, 8};
    ov.slots = 50;
    ov.policies = {"lyapunov"};
    ov.d = 0.25;
    ov.theta = 3.0;
    const auto s = parse_config_json(json::parse(R"({"policies":["mws"],"seed":1})"), ov);
    REQUIRE(s.size() == 1);
    CHECK(s[0].seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(s[0].n_slots == 50);
    CHECK(s[0].policy.name() == "lyapunov");
    CHECK(s[0].threshold_d == 0.25);
    CHECK(s[0].policy.theta == 3.0);
}

TEST_CASE("graph file resolves relative to the config") {
    const auto dir = std::filesystem::temp_directory_path() / "wsched_scenario_test";
    std::filesystem::create_directories(dir);
    ConflictGraph::generate_geometric(4, 0.5, 1).save(dir / "g.json");
    {
        std::ofstream cfg(dir / "c.json");
        cfg << R"({"graph_file":"g.json","users":4,"policies":["mws"]})";
    }
    const auto s = parse_config(dir / "c.json");
    REQUIRE(s[0].graph_file.has_value());
    CHECK(std::filesystem::path(*s[0].graph_file).is_absolute());
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"graph_file":"g.json","users":5,"policies":["mws"]})";
    }
    CHECK_THROWS_AS(parse_config(dir / "bad.json"), ConfigError);
    CHECK_THROWS_AS(parse_config(dir / "missing.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("regime names") {
    for (const char* n : {"default_restricted", "large_unrestricted", "small_restricted"})
        CHECK(Regime::parse(n).name() == n);
    CHECK(Regime::parse("large_restricted").arrival_upper_bound(100) == doctest::Approx(12.5));
    CHECK(Regime::parse("small_restricted").arrival_upper_bound(100) == doctest::Approx(100.0 / 15.0));
    CHECK_THROWS(Regime::parse("large"));
}
