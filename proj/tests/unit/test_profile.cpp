#include "oracles.hpp"

#include "sepm/profile.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace sepm;
using namespace sepm::profile;

TEST_CASE("bundled default profile loads and validates") {
    const auto p = oracle::default_profile();
    CHECK(p.name == "calibrated-default");
    CHECK_NOTHROW(p.validate());
    CHECK(p.actuator.geometry.leakage_permeance ==
          Catch::Approx(0.1 * p.actuator.geometry.gap_permeance()).epsilon(1e-12));
}

TEST_CASE("profile serialization is a fixed point") {
    const auto p = oracle::default_profile();
    const auto text = serialize_profile(p);
    const auto back = parse_profile(text);
    CHECK(back == p);
    CHECK(serialize_profile(back) == text);
    CHECK(back.actuator.magnet.coil_inductance == p.actuator.magnet.coil_inductance);
    CHECK(back.rig.vent_conductance == p.rig.vent_conductance);
}

TEST_CASE("default-constructed profile round trips") {
    const Profile p;
    CHECK(parse_profile(serialize_profile(p)) == p);
}

TEST_CASE("unknown keys are reported with their line") {
    auto text = serialize_profile(Profile{});
    text.insert(text.find("magnetics:"), "bogus: 1\n");
    try {
        (void)parse_profile(text, "bad.yaml");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).rfind("bad.yaml:2:", 0) == 0);
    }
}

TEST_CASE("malformed values are parse errors") {
    auto text = serialize_profile(Profile{});
    const auto pos = text.find("coil_turns: ");
    text.replace(pos, text.find('\n', pos) - pos, "coil_turns: many");
    CHECK_THROWS_AS(parse_profile(text), ParseError);
    CHECK_THROWS_AS(parse_profile("name: [unclosed"), ParseError);
}

TEST_CASE("invalid physical values are rejected") {
    Profile p;
    p.tube.inner_diameter = 3e-3;
    CHECK_THROWS_AS(p.validate(), Error);
    Profile q;
    q.rig.vent_conductance = -1.0;
    CHECK_THROWS_AS(q.validate(), Error);
}

TEST_CASE("missing profile file is an io error") {
    try {
        (void)load_profile("/nonexistent/profile.yaml");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
}

TEST_CASE("profile references resolve by name or path") {
    CHECK(resolve_profile("calibrated_default", "/tmp") == data_dir() / "profiles" / "calibrated_default.yaml");
    CHECK(resolve_profile("local.yaml", "/tmp/x") == std::filesystem::path("/tmp/x/local.yaml"));
}

TEST_CASE("numbers print in shortest round-trip form") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(3.0) == "3.0");
    for (const double v : {1.0 / 3.0, 6.634615043985666e-4, 1e-300, 123456789.125}) {
        CHECK(std::stod(format_number(v)) == v);
    }
}
