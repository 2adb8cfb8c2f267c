#include "oracles.hpp"

#include "sepm/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace sepm;
using namespace sepm::scenario;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("sepm_test_scenario_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

const CheckResult& find_check(const RunResult& r, const std::string& name) {
    for (const auto& c : r.checks) {
        if (c.name == name) return c;
    }
    FAIL("missing check " << name);
    throw;
}

}  // namespace

TEST_CASE("bundled scenarios load and serialize to a fixed point") {
    const auto names = bundled_scenarios();
    CHECK(names.size() == 6);
    for (const auto& name : names) {
        INFO(name);
        const auto s = load_scenario(resolve_scenario(name));
        CHECK(s.name == name);
        const auto text = serialize_scenario(s);
        const auto back = parse_scenario(text);
        CHECK(back == s);
        CHECK(serialize_scenario(back) == text);
    }
}

TEST_CASE("malformed scenarios are parse errors") {
    CHECK_THROWS_AS(parse_scenario("name: x\nprogram:\n  steps: 3\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("name: x\nwhatever: 1\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("name: x\nprogram:\n  steps:\n    - {time: soon, state: \"+\"}\n"), ParseError);
}

TEST_CASE("unknown scenario names are io errors") {
    try {
        (void)resolve_scenario("no_such_scenario");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
}

TEST_CASE("single-valve closure check agrees with a direct scan of the trace") {
    const auto s = load_scenario(resolve_scenario("fig3_single_valve"));
    const auto r = run_scenario(s, oracle::default_profile());
    REQUIRE(r.report);
    CHECK(r.checks_passed());

    const double t0 = r.schedule.step_times.at(0);
    const double band = 0.05 * r.profile.rig.supply_pressure;
    const auto& y0 = r.trace.pressure_of("Y0");
    std::size_t last_out = 0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        if (r.trace.time[i] >= t0 && std::abs(y0[i]) > band) last_out = i;
    }
    REQUIRE(last_out + 1 < y0.size());
    const double scanned = r.trace.time[last_out + 1] - t0;
    CHECK(std::abs(find_check(r, "closure").value - scanned) <= r.trace.sample_interval + 1e-12);
}

TEST_CASE("decoder scenario routes every address") {
    const auto s = load_scenario(resolve_scenario("fig4_decoder_k3"));
    const auto r = run_scenario(s, oracle::default_profile());
    REQUIRE(r.report);
    REQUIRE(r.report->step_patterns.size() == 8);
    for (std::size_t a = 0; a < 8; ++a) {
        CHECK(r.report->step_patterns[a].pairs_string() == "I0->Y" + std::to_string(a));
    }
    CHECK(r.checks_passed());
}

TEST_CASE("a failing check is reported, not thrown") {
    auto s = load_scenario(resolve_scenario("fig3_single_valve"));
    s.checks.at(0).max = 0.01;
    const auto r = run_scenario(s, oracle::default_profile());
    CHECK_FALSE(r.checks_passed());
    CHECK_FALSE(find_check(r, "closure").passed);
}

TEST_CASE("dry run compiles without executing") {
    const auto s = load_scenario(resolve_scenario("fig4_decoder_k3"));
    RunOptions o;
    o.dry_run = true;
    const auto r = run_scenario(s, oracle::default_profile(), o);
    CHECK_FALSE(r.report);
    CHECK(r.schedule.commands.size() > 0);
    CHECK(r.trace.time.empty());
}

TEST_CASE("outputs are written to the requested directory") {
    const auto s = load_scenario(resolve_scenario("fig3_single_valve"));
    const auto r = run_scenario(s, oracle::default_profile());
    const auto dir = scratch("outputs");
    const auto files = write_outputs(s, r, dir);
    CHECK(files.size() == 3);
    for (const auto& f : files) CHECK(std::filesystem::file_size(f) > 0);
    std::ifstream trace(dir / "trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header.rfind("time_s,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("runs are reproducible") {
    const auto s = load_scenario(resolve_scenario("fig3_dual_outlet"));
    const auto a = run_scenario(s, oracle::default_profile());
    const auto b = run_scenario(s, oracle::default_profile());
    CHECK(a.trace == b.trace);
    CHECK(a.report->ledger.total_energy() == b.report->ledger.total_energy());
}
