#include "oracles.hpp"

#include "sepm/rig.hpp"
#include "sepm/sequencer.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace sepm;
using namespace sepm::sequencer;
using routing::StateVector;
using Catch::Approx;

namespace {

/// Rewrites every valve on every step, with don't-cares resolved by holding.
struct NaiveResult {
    long pulses = 0;
    StateVector final_state;
};

NaiveResult naive_compile(const Program& program, const routing::Topology& t, const Registry& registry) {
    NaiveResult out;
    StateVector held = registry.state_vector(t);
    for (const auto& step : program.steps) {
        const auto target = resolve_intent(step.intent, t, held);
        for (std::size_t v = 0; v < t.valve_count(); ++v) {
            if (target.entries[v]) held.entries[v] = target.entries[v];
        }
        out.pulses += static_cast<long>(t.valve_count());
    }
    out.final_state = held;
    return out;
}

Program address_program(const std::vector<long>& addresses, double spacing = 0.5) {
    Program p;
    for (std::size_t i = 0; i < addresses.size(); ++i) {
        p.steps.push_back(Step{0.1 + spacing * static_cast<double>(i), AddressIntent{addresses[i]}, spacing});
    }
    return p;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("sepm_test_" + name);
}

RunReport simulate(const PulseSchedule& s, const routing::Topology& t, const Registry& r,
                   pneumatics::Trace* trace = nullptr) {
    const auto profile = oracle::default_profile();
    rig::RigOptions options;
    for (const auto& [id, e] : r.valves) options.initial_states[id] = e.state;
    auto net = rig::build_network(t, profile, options);
    restore_network(net, r);
    auto integration = profile.integration;
    integration.sample_interval = 0.01;
    SimulatedDriver driver(net, integration);
    auto report = execute(s, driver, t, r);
    if (trace != nullptr) *trace = std::move(driver).take_trace();
    return report;
}

}  // namespace

TEST_CASE("repeating an address emits no second set of pulses") {
    const auto t = routing::build_tree_decoder(3);
    const auto s = compile(address_program({5, 5}), t, Registry::fresh(t));
    for (const auto& c : s.commands) CHECK(c.step == 0);
    CHECK_FALSE(s.commands.empty());
}

TEST_CASE("sequential addresses beat the naive compiler") {
    const auto t = routing::build_tree_decoder(3);
    const auto program = address_program({0, 1, 2, 3, 4, 5, 6, 7});
    const auto fresh = Registry::fresh(t);
    const auto s = compile(program, t, fresh);
    const auto naive = naive_compile(program, t, fresh);
    CHECK(static_cast<long>(s.commands.size()) <= 7 * 7);
    CHECK(static_cast<long>(s.commands.size()) < naive.pulses);
    CHECK(s.step_targets.back() == naive.final_state);
}

TEST_CASE("compiled pulses never exceed the naive oracle on random programs") {
    std::mt19937_64 rng(99);
    for (const auto* spec : {"tree:2", "tree:3", "six-port", "dual-tree"}) {
        const auto t = routing::build_topology(spec);
        for (int trial = 0; trial < 50; ++trial) {
            Program p;
            for (int i = 0; i < 6; ++i) {
                Intent intent;
                if (t.kind == routing::TopologyKind::tree_decoder) {
                    intent = AddressIntent{static_cast<long>(rng() % t.outputs().size())};
                } else {
                    StateVector v(t.valve_count());
                    for (auto& e : v.entries) {
                        const auto r = rng() % 3;
                        if (r < 2) e = r == 0 ? Polarity::positive : Polarity::negative;
                    }
                    intent = v;
                }
                p.steps.push_back(Step{0.2 * i, intent, 0.2});
            }
            Registry start = Registry::fresh(t);
            for (auto& [id, e] : start.valves) e.state = (rng() & 1U) ? Polarity::positive : Polarity::negative;
            const auto s = compile(p, t, start);
            const auto naive = naive_compile(p, t, start);
            CHECK(static_cast<long>(s.commands.size()) <= naive.pulses);

            MockDriver mock(0.6);
            const auto report = execute(s, mock, t, start);
            CHECK(report.final_state(t) == naive.final_state);
        }
    }
}

TEST_CASE("commands within a step are staggered by one pulse width") {
    const auto t = routing::build_tree_decoder(3);
    Registry r = Registry::fresh(t);
    const auto s = compile(address_program({7}), t, r);
    REQUIRE(s.commands.size() == 3);
    CHECK(s.commands[1].time - s.commands[0].time == Approx(1e-3));
    CHECK(s.commands[2].time - s.commands[1].time == Approx(1e-3));
    std::set<std::pair<double, std::string>> seen;
    for (const auto& c : s.commands) CHECK(seen.emplace(c.time, c.valve_id).second);
}

TEST_CASE("invalid programs are rejected with the step index") {
    const auto t = routing::build_tree_decoder(2);
    const auto fresh = Registry::fresh(t);
    SECTION("non-increasing times") {
        Program p{{Step{1.0, AddressIntent{0}, 0.5}, Step{1.0, AddressIntent{1}, 0.5}}};
        CHECK_THROWS_AS(compile(p, t, fresh), IntentInvalid);
    }
    SECTION("zero dwell") {
        Program p{{Step{1.0, AddressIntent{0}, 0.0}}};
        CHECK_THROWS_AS(compile(p, t, fresh), IntentInvalid);
    }
    SECTION("address out of range") {
        Program p{{Step{0.0, AddressIntent{0}, 0.5}, Step{1.0, AddressIntent{9}, 0.5}}};
        try {
            (void)compile(p, t, fresh);
            FAIL("expected IntentInvalid");
        } catch (const IntentInvalid& e) {
            CHECK(e.step() == 1);
        }
    }
    SECTION("six-port mode on a tree") {
        Program p{{Step{0.0, routing::SixPortMode::parallel(), 0.5}}};
        CHECK_THROWS_AS(compile(p, t, fresh), IntentInvalid);
    }
    SECTION("stagger longer than the dwell") {
        Program p{{Step{0.0, AddressIntent{3}, 1e-3}}};
        CHECK_THROWS_AS(compile(p, t, fresh), IntentInvalid);
    }
}

TEST_CASE("mix-decoder cycle spans 9.5 s with 1.5 s media toggles") {
    const auto t = routing::build_mix_decoder(3);
    const auto program = mix_decoder_program(t);
    const auto s = compile(program, t, Registry::fresh(t));
    CHECK(s.end_time == Approx(76.0).epsilon(1e-12));

    for (int w = 0; w < 8; ++w) {
        std::vector<double> media_times;
        std::vector<double> decoder_times;
        for (const auto& c : s.commands) {
            const double local = c.time - 9.5 * w;
            if (local < -1e-9 || local >= 9.5 - 1e-9) continue;
            if (c.valve_id == "V1" && local > 0.01) {
                media_times.push_back(local);
            } else {
                decoder_times.push_back(local);
            }
        }
        REQUIRE(media_times.size() == 5);
        for (int k = 0; k < 5; ++k) CHECK(media_times[static_cast<std::size_t>(k)] == Approx(1.5 * (k + 1)));
        for (const double d : decoder_times) CHECK(d < 0.01);
    }
    std::vector<double> starts;
    for (std::size_t i = 0; i < program.steps.size(); i += 6) starts.push_back(program.steps[i].time);
    for (std::size_t w = 0; w < starts.size(); ++w) CHECK(starts[w] == Approx(9.5 * static_cast<double>(w)));
}

TEST_CASE("full mix-decoder run delivers both media to every well") {
    const auto t = routing::build_mix_decoder(3);
    const auto s = compile(mix_decoder_program(t), t, Registry::fresh(t));
    MockDriver mock(0.6);
    const auto report = execute(s, mock, t, Registry::fresh(t));
    CHECK(mock.time() == Approx(76.0));
    std::map<std::string, std::set<std::string>> delivered;
    for (const auto& pattern : report.step_patterns) {
        for (const auto& [node, media] : pattern.media) delivered[node].insert(media.begin(), media.end());
    }
    for (int w = 0; w < 8; ++w) {
        CHECK(delivered["Y" + std::to_string(w)] == std::set<std::string>{"gas", "liquid"});
    }
}

TEST_CASE("phase offset shifts the media toggles") {
    const auto t = routing::build_mix_decoder(3);
    MixCycle cycle;
    cycle.phase_offset = 0.25;
    const auto s = compile(mix_decoder_program(t, cycle), t, Registry::fresh(t));
    for (const auto& c : s.commands) {
        if (c.valve_id == "V1" && c.time < 9.5) {
            const double within = std::fmod(c.time, 1.5);
            CHECK(within == Approx(0.25));
        }
    }
}

TEST_CASE("empty schedule spends nothing and keeps the registry") {
    const auto t = routing::build_tree_decoder(2);
    const auto fresh = Registry::fresh(t);
    MockDriver mock(0.6);
    const auto report = execute(compile(Program{}, t, fresh), mock, t, fresh);
    CHECK(report.ledger.total_energy() == 0.0);
    CHECK(report.registry == fresh);
}

TEST_CASE("ledger total is pulse energy times pulses and holding is zero") {
    const auto t = routing::build_tree_decoder(3);
    const auto fresh = Registry::fresh(t);
    const auto s = compile(address_program({3, 6, 1, 7, 0}), t, fresh);
    const auto report = simulate(s, t, fresh);
    const double e = report.ledger.pulse_energy;
    CHECK(report.ledger.total_pulses() == static_cast<long>(s.commands.size()));
    CHECK(report.ledger.total_energy() == e * static_cast<double>(s.commands.size()));
    CHECK(EnergyLedger::holding_energy() == 0.0);
    CHECK(e == Approx(0.6).epsilon(1e-6));
}

TEST_CASE("mock failure is recorded and halts or continues") {
    const auto t = routing::build_tree_decoder(2);
    const auto fresh = Registry::fresh(t);
    const auto s = compile(address_program({3, 0, 2}), t, fresh);
    SECTION("halt") {
        MockDriver mock(0.6);
        mock.fail_valve("V3");
        const auto report = execute(s, mock, t, fresh);
        REQUIRE(report.failures.size() == 1);
        CHECK(report.halted);
        CHECK(report.failures[0].valve_id == "V3");
        CHECK(report.registry.valves.at("V3").state == Polarity::negative);
    }
    SECTION("continue") {
        MockDriver mock(0.6);
        mock.fail_valve("V3");
        ExecuteOptions options;
        options.halt_on_failure = false;
        const auto report = execute(s, mock, t, fresh, options);
        CHECK_FALSE(report.halted);
        CHECK(report.step_patterns.size() == 3);
        CHECK(report.commands_sent == s.commands.size());
    }
}

TEST_CASE("simulated occlusion failure surfaces as a step failure") {
    const auto t = routing::build_binary_unit();
    const auto fresh = Registry::fresh(t);
    auto profile = oracle::default_profile();
    profile.rig.supply_pressure = 600e3;
    auto net = rig::build_network(t, profile);
    SimulatedDriver driver(net, profile.integration);
    Program p{{Step{0.5, StateVector::parse("+"), 0.5}}};
    const auto report = execute(compile(p, t, fresh), driver, t, fresh);
    REQUIRE(report.failures.size() == 1);
    CHECK(report.failures[0].step == 0);
    CHECK(report.registry.valves.at("V1").state == Polarity::negative);
    CHECK(report.ledger.total_pulses() == 1 + profile.valve.max_retry);
}

TEST_CASE("registry round trip is byte identical") {
    const auto t = routing::build_tree_decoder(3);
    Registry r = Registry::fresh(t);
    r.valves["V3"] = {Polarity::positive, 17};
    const auto path = temp_path("registry.txt");
    persist_registry(r, path);
    const auto loaded = load_registry(path, &t);
    CHECK(loaded == r);
    CHECK(serialize_registry(loaded) == serialize_registry(r));
}

TEST_CASE("loaded registry reproduces routes without pulses") {
    const auto t = routing::build_tree_decoder(3);
    const auto fresh = Registry::fresh(t);
    const auto program = address_program({6});
    MockDriver mock(0.6);
    const auto first = execute(compile(program, t, fresh), mock, t, fresh);
    const auto path = temp_path("reload.txt");
    persist_registry(first.registry, path);
    const auto reloaded = load_registry(path, &t);
    const auto again = compile(program, t, reloaded);
    CHECK(again.commands.empty());
    CHECK(routing::active_paths(t, reloaded.state_vector(t)) == first.step_patterns.back());
}

TEST_CASE("corrupt registries report the offending line") {
    const auto t = routing::build_tree_decoder(2);
    auto write = [](const std::string& name, const std::string& text) {
        const auto p = temp_path(name);
        std::ofstream(p) << text;
        return p;
    };
    SECTION("missing valve") {
        const auto p = write("missing.txt", "valve V1 -1 0\nvalve V2 +1 3\n");
        try {
            (void)load_registry(p, &t);
            FAIL("expected CorruptRegistry");
        } catch (const CorruptRegistry& e) {
            CHECK(std::string(e.what()).find("V3") != std::string::npos);
        }
    }
    SECTION("bad state") {
        const auto p = write("bad.txt", "valve V1 -1 0\nvalve V2 sideways 3\nvalve V3 -1 0\n");
        try {
            (void)load_registry(p, &t);
            FAIL("expected CorruptRegistry");
        } catch (const CorruptRegistry& e) {
            CHECK(e.line() == 2);
        }
    }
    SECTION("unknown valve") {
        const auto p = write("unknown.txt", "valve V1 -1 0\nvalve V2 -1 0\nvalve V3 -1 0\nvalve V9 -1 0\n");
        CHECK_THROWS_AS(load_registry(p, &t), CorruptRegistry);
    }
    SECTION("duplicate valve") {
        const auto p = write("dup.txt", "valve V1 -1 0\nvalve V1 -1 0\n");
        CHECK_THROWS_AS(load_registry(p), CorruptRegistry);
    }
}

TEST_CASE("power-cycle equivalence against the simulator") {
    const auto t = routing::build_tree_decoder(3);
    const auto fresh = Registry::fresh(t);
    const auto whole = address_program({2, 5, 7, 0, 4, 4, 1, 6});
    const auto s_whole = compile(whole, t, fresh);
    const auto r_whole = simulate(s_whole, t, fresh);

    Program first{std::vector<Step>(whole.steps.begin(), whole.steps.begin() + 4)};
    Program second{std::vector<Step>(whole.steps.begin() + 4, whole.steps.end())};
    const auto r_first = simulate(compile(first, t, fresh), t, fresh);
    const auto path = temp_path("power_cycle.txt");
    persist_registry(r_first.registry, path);
    const auto restored = load_registry(path, &t);
    const auto r_second = simulate(compile(second, t, restored), t, restored);

    CHECK(r_second.registry == r_whole.registry);
    std::vector<routing::RoutePattern> joined = r_first.step_patterns;
    joined.insert(joined.end(), r_second.step_patterns.begin(), r_second.step_patterns.end());
    CHECK(joined == r_whole.step_patterns);
    auto ledger = r_first.ledger;
    ledger.merge(r_second.ledger);
    CHECK(ledger == r_whole.ledger);
    CHECK(ledger.total_energy() == r_whole.ledger.total_energy());
}

TEST_CASE("replay gives identical traces and ledgers") {
    const auto t = routing::build_tree_decoder(2);
    const auto fresh = Registry::fresh(t);
    const auto s = compile(address_program({1, 2, 3}), t, fresh);
    pneumatics::Trace a;
    pneumatics::Trace b;
    const auto ra = simulate(s, t, fresh, &a);
    const auto rb = simulate(s, t, fresh, &b);
    CHECK(a == b);
    CHECK(ra.ledger == rb.ledger);
}

TEST_CASE("media intents only touch the media valve") {
    const auto t = routing::build_mix_decoder(2);
    StateVector held = StateVector::parse("-+-+");
    const auto gas = resolve_intent(MediaIntent{Media::gas}, t, held);
    CHECK(gas.to_string() == "+xxx");
    const auto toggled = resolve_intent(MediaIntent{Media::toggle}, t, held);
    CHECK(toggled.to_string() == "+xxx");
    CHECK_THROWS_AS(resolve_intent(MediaIntent{Media::gas}, routing::build_tree_decoder(2), StateVector::parse("---")),
                    Error);
}
