#include "sepm/scenario.hpp"

#include "sepm/rig.hpp"
#include "yaml_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sepm::scenario {

using detail::Reader;
using detail::Writer;
using detail::format_number;

std::string_view to_string(CheckKind kind) noexcept {
    switch (kind) {
        case CheckKind::settle: return "settle";
        case CheckKind::crossover: return "crossover";
        case CheckKind::hold: return "hold";
        case CheckKind::peak: return "peak";
        case CheckKind::routes: return "routes";
    }
    return "settle";
}

namespace {

const char* const kBundled[] = {"fig3_single_valve", "fig3_dual_outlet", "fig4_decoder_k3",
                                "fig5_dual_tree",    "fig6_six_port",    "fig6_mix_decoder"};

CheckKind parse_check_kind(const Reader& r) {
    const auto text = r.get_string("kind");
    for (const auto kind : {CheckKind::settle, CheckKind::crossover, CheckKind::hold, CheckKind::peak,
                            CheckKind::routes}) {
        if (text == to_string(kind)) return kind;
    }
    r.fail("kind", "unknown check kind '" + text + "'");
}

sequencer::Step parse_step(const Reader& r) {
    r.allow_keys({"time", "dwell", "state", "address", "mode", "media"});
    sequencer::Step step;
    step.time = r.get_number("time");
    step.dwell = r.get_number("dwell");
    int given = 0;
    for (const char* key : {"state", "address", "mode", "media"}) given += r.has(key) ? 1 : 0;
    if (given != 1) r.fail("step needs exactly one of state, address, mode, media");
    try {
        if (r.has("state")) {
            step.intent = routing::StateVector::parse(r.get_string("state"));
        } else if (r.has("address")) {
            step.intent = sequencer::AddressIntent{r.get_long("address")};
        } else if (r.has("mode")) {
            step.intent = routing::SixPortMode::parse(r.get_string("mode"));
        } else {
            const auto media = sequencer::parse_media(r.get_string("media"));
            if (!media) r.fail("media", "expected liquid, gas or toggle");
            step.intent = sequencer::MediaIntent{*media};
        }
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return step;
}

Writer::Fields step_fields(const sequencer::Step& step) {
    Writer::Fields f{{"time", format_number(step.time)}, {"dwell", format_number(step.dwell)}};
    if (const auto* a = std::get_if<sequencer::AddressIntent>(&step.intent)) {
        f.emplace_back("address", std::to_string(a->address));
    } else if (const auto* m = std::get_if<routing::SixPortMode>(&step.intent)) {
        f.emplace_back("mode", Writer::quote(m->name()));
    } else if (const auto* v = std::get_if<routing::StateVector>(&step.intent)) {
        f.emplace_back("state", Writer::quote(v->to_string()));
    } else {
        f.emplace_back("media", std::string(sequencer::to_string(std::get<sequencer::MediaIntent>(step.intent).media)));
    }
    return f;
}

std::optional<double> optional_number(const Reader& r, const std::string& key) {
    if (!r.has(key)) return std::nullopt;
    return r.get_number(key);
}

}  // namespace

sequencer::Program Scenario::program(const routing::Topology& topology) const {
    if (mix_cycle) {
        return sequencer::mix_decoder_program(topology, *mix_cycle);
    }
    return sequencer::Program{steps};
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    const Reader root = Reader::parse(text, source);
    root.allow_keys({"name", "profile", "topology", "network", "program", "events", "output", "checks"});
    Scenario s;
    s.name = root.get_string("name");
    s.profile = root.get_string("profile", "");
    s.topology = root.get_string("topology");
    try {
        (void)routing::build_topology(s.topology);
    } catch (const Error& e) {
        root.fail("topology", e.what());
    }

    if (root.has("network")) {
        const auto n = root.child("network");
        n.allow_keys({"capped_outputs", "initial_state", "supply_pressure"});
        if (n.has("capped_outputs")) {
            const auto list = n.sequence("capped_outputs");
            for (std::size_t i = 0; i < list.size(); ++i) s.capped_outputs.push_back(list.at(i).as_string());
        }
        if (n.has("initial_state")) {
            s.initial_state = n.get_string("initial_state");
            try {
                const auto v = routing::StateVector::parse(*s.initial_state);
                if (!v.concrete()) n.fail("initial_state", "initial state must not contain don't-cares");
            } catch (const ParseError&) {
                throw;
            } catch (const Error& e) {
                n.fail("initial_state", e.what());
            }
        }
        s.supply_pressure = optional_number(n, "supply_pressure");
    }

    if (root.has("program")) {
        const auto p = root.child("program");
        p.allow_keys({"stagger", "halt_on_failure", "steps", "mix_cycle"});
        s.stagger = p.get_number("stagger", s.stagger);
        s.halt_on_failure = p.get_bool("halt_on_failure", s.halt_on_failure);
        if (p.has("steps")) {
            const auto list = p.sequence("steps");
            for (std::size_t i = 0; i < list.size(); ++i) s.steps.push_back(parse_step(list.at(i)));
        }
        if (p.has("mix_cycle")) {
            if (p.has("steps")) p.fail("mix_cycle", "mix_cycle and steps are mutually exclusive");
            const auto c = p.child("mix_cycle");
            c.allow_keys({"wells", "interval", "alternations", "final_phase", "phase_offset"});
            sequencer::MixCycle cycle;
            cycle.wells = c.get_int("wells", cycle.wells);
            cycle.interval = c.get_number("interval", cycle.interval);
            cycle.alternations = c.get_int("alternations", cycle.alternations);
            cycle.final_phase = c.get_number("final_phase", cycle.final_phase);
            cycle.phase_offset = c.get_number("phase_offset", cycle.phase_offset);
            s.mix_cycle = cycle;
        }
    }

    if (root.has("events")) {
        const auto list = root.sequence("events");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto e = list.at(i);
            e.allow_keys({"time", "input", "pressure"});
            s.events.push_back(SupplyEvent{e.get_number("time"), e.get_string("input"), e.get_number("pressure")});
        }
    }

    if (root.has("output")) {
        const auto o = root.child("output");
        o.allow_keys({"duration", "sample_interval", "dt", "trace"});
        s.duration = optional_number(o, "duration");
        s.sample_interval = optional_number(o, "sample_interval");
        s.dt = optional_number(o, "dt");
        s.write_trace = o.get_bool("trace", s.write_trace);
    }

    if (root.has("checks")) {
        const auto list = root.sequence("checks");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto c = list.at(i);
            c.allow_keys({"name", "kind", "nodes", "step", "fraction", "target", "band", "min", "max", "expect"});
            CheckSpec check;
            check.name = c.get_string("name");
            check.kind = parse_check_kind(c);
            if (c.has("nodes")) {
                const auto nodes = c.sequence("nodes");
                for (std::size_t k = 0; k < nodes.size(); ++k) check.nodes.push_back(nodes.at(k).as_string());
            }
            check.step = static_cast<std::size_t>(c.get_int("step", 0));
            check.fraction = c.get_number("fraction", check.fraction);
            check.target = c.get_number("target", check.target);
            check.band = c.get_number("band", check.band);
            check.min = optional_number(c, "min");
            check.max = optional_number(c, "max");
            check.expect = c.get_string("expect", "");
            const std::size_t needed = check.kind == CheckKind::crossover ? 2
                                       : check.kind == CheckKind::routes  ? 0
                                                                          : 1;
            if (check.nodes.size() != needed) {
                c.fail("nodes", std::string(to_string(check.kind)) + " check needs " + std::to_string(needed) +
                                    " node(s)");
            }
            s.checks.push_back(std::move(check));
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(detail::read_file(path), path.string());
}

std::string serialize_scenario(const Scenario& s) {
    Writer w;
    w.scalar("name", s.name);
    if (!s.profile.empty()) w.scalar("profile", s.profile);
    w.scalar("topology", s.topology);
    w.open("network");
    w.list("capped_outputs", s.capped_outputs);
    if (s.initial_state) w.scalar("initial_state", *s.initial_state);
    if (s.supply_pressure) w.number("supply_pressure", *s.supply_pressure);
    w.close();
    w.open("program");
    w.number("stagger", s.stagger);
    w.boolean("halt_on_failure", s.halt_on_failure);
    if (s.mix_cycle) {
        w.open("mix_cycle");
        w.integer("wells", s.mix_cycle->wells);
        w.number("interval", s.mix_cycle->interval);
        w.integer("alternations", s.mix_cycle->alternations);
        w.number("final_phase", s.mix_cycle->final_phase);
        w.number("phase_offset", s.mix_cycle->phase_offset);
        w.close();
    } else {
        std::vector<Writer::Fields> rows;
        for (const auto& step : s.steps) rows.push_back(step_fields(step));
        w.rows("steps", rows);
    }
    w.close();
    std::vector<Writer::Fields> events;
    for (const auto& e : s.events) {
        events.push_back({{"time", format_number(e.time)},
                          {"input", Writer::quote(e.input)},
                          {"pressure", format_number(e.pressure)}});
    }
    w.rows("events", events);
    w.open("output");
    if (s.duration) w.number("duration", *s.duration);
    if (s.sample_interval) w.number("sample_interval", *s.sample_interval);
    if (s.dt) w.number("dt", *s.dt);
    w.boolean("trace", s.write_trace);
    w.close();
    std::vector<Writer::Fields> checks;
    for (const auto& c : s.checks) {
        std::string nodes = "[";
        for (std::size_t i = 0; i < c.nodes.size(); ++i) {
            if (i > 0) nodes += ", ";
            nodes += Writer::quote(c.nodes[i]);
        }
        nodes += "]";
        Writer::Fields f{{"name", Writer::quote(c.name)},
                         {"kind", std::string(to_string(c.kind))},
                         {"nodes", nodes},
                         {"step", std::to_string(c.step)},
                         {"fraction", format_number(c.fraction)},
                         {"target", format_number(c.target)},
                         {"band", format_number(c.band)}};
        if (c.min) f.emplace_back("min", format_number(*c.min));
        if (c.max) f.emplace_back("max", format_number(*c.max));
        f.emplace_back("expect", Writer::quote(c.expect));
        checks.push_back(std::move(f));
    }
    w.rows("checks", checks);
    return w.str();
}

std::filesystem::path resolve_scenario(const std::string& reference) {
    const std::filesystem::path direct(reference);
    if (std::filesystem::exists(direct) && !std::filesystem::is_directory(direct)) return direct;
    const auto bundled = profile::data_dir() / "scenarios" / (reference + ".yaml");
    if (std::filesystem::exists(bundled)) return bundled;
    throw Error(ErrorCode::io, "no scenario file or bundled scenario named '" + reference + "'");
}

std::vector<std::string> bundled_scenarios() { return {std::begin(kBundled), std::end(kBundled)}; }

// -----------------------------------------------------------------------------
// Running
// -----------------------------------------------------------------------------

bool RunResult::checks_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& base, const RunOptions& options) {
    const auto path = scenario.profile.empty() ? profile::default_profile_path()
                                               : profile::resolve_profile(scenario.profile, base);
    return run_scenario(scenario, profile::load_profile(path), options);
}

RunResult run_scenario(const Scenario& scenario, const profile::Profile& loaded, const RunOptions& options) {
    RunResult result;
    result.topology = routing::build_topology(scenario.topology);
    result.profile = loaded;
    if (scenario.supply_pressure) result.profile.rig.supply_pressure = *scenario.supply_pressure;
    result.profile.validate();
    const auto& topology = result.topology;

    if (options.registry) {
        result.initial_registry = *options.registry;
        result.initial_registry.check_covers(topology, "<registry>");
    } else {
        result.initial_registry = sequencer::Registry::fresh(topology);
        if (scenario.initial_state) {
            const auto v = routing::StateVector::parse(*scenario.initial_state);
            if (v.size() != topology.valve_count() || !v.concrete()) {
                throw Error(ErrorCode::invalid_argument, "initial_state must give +/- for each of the " +
                                                             std::to_string(topology.valve_count()) + " valves");
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                result.initial_registry.valves[topology.valves[i]].state = *v.entries[i];
            }
        }
    }

    result.schedule = sequencer::compile(scenario.program(topology), topology, result.initial_registry,
                                         sequencer::CompileOptions{scenario.stagger});
    if (options.dry_run) {
        return result;
    }

    rig::RigOptions rig_options;
    rig_options.capped_outputs = {scenario.capped_outputs.begin(), scenario.capped_outputs.end()};
    for (const auto& [id, entry] : result.initial_registry.valves) rig_options.initial_states[id] = entry.state;
    auto network = rig::build_network(topology, result.profile, rig_options);
    sequencer::restore_network(network, result.initial_registry);

    auto integration = result.profile.integration;
    if (scenario.dt) integration.dt = *scenario.dt;
    if (scenario.sample_interval) integration.sample_interval = *scenario.sample_interval;

    std::optional<std::mt19937_64> rng;
    if (result.profile.valve.mode == valve::OcclusionMode::stochastic) {
        rng.emplace(options.seed.value_or(0));
    }
    sequencer::SimulatedDriver driver(network, integration, rng ? &*rng : nullptr);
    for (const auto& e : scenario.events) {
        (void)topology.node(e.input);
        driver.schedule_supply(e.time, rig::supply_node(e.input), e.pressure);
    }
    sequencer::ExecuteOptions exec;
    exec.halt_on_failure = scenario.halt_on_failure;
    exec.run_to_end = false;
    result.report = sequencer::execute(result.schedule, driver, topology, result.initial_registry, exec);
    driver.advance_to(scenario.duration.value_or(result.schedule.end_time));
    result.trace = std::move(driver).take_trace();
    result.checks = evaluate_checks(scenario, result);
    return result;
}

std::vector<CheckResult> evaluate_checks(const Scenario& scenario, const RunResult& result) {
    std::vector<CheckResult> out;
    const auto& trace = result.trace;
    const double supply = result.profile.rig.supply_pressure;
    for (const auto& check : scenario.checks) {
        CheckResult r;
        r.name = check.name;
        try {
            if (check.step >= result.schedule.step_times.size()) {
                throw Error(ErrorCode::invalid_argument, "check refers to missing step " + std::to_string(check.step));
            }
            const double t0 = result.schedule.step_times[check.step];
            const double t1 = check.step + 1 < result.schedule.step_times.size()
                                  ? result.schedule.step_times[check.step + 1]
                                  : (trace.time.empty() ? t0 : trace.time.back());
            bool in_range = true;
            switch (check.kind) {
                case CheckKind::settle: {
                    const auto window = pneumatics::slice(trace, t0, t1);
                    r.value = pneumatics::measure_settle(
                        window, check.nodes[0], pneumatics::SettleBand{check.target, check.fraction * supply}, t0);
                    r.detail = "s to within " + format_number(check.fraction * supply) + " Pa of " +
                               format_number(check.target) + " Pa";
                    break;
                }
                case CheckKind::crossover: {
                    const auto window = pneumatics::slice(trace, t0, t1);
                    r.value = 0.0;
                    for (const auto& node : check.nodes) {
                        const auto& series = window.pressure_of(node);
                        if (series.empty()) throw pneumatics::NeverSettles("empty window");
                        const double final_value = series.back();
                        const double swing = std::abs(final_value - series.front());
                        r.value = std::max(r.value,
                                           pneumatics::measure_settle(
                                               window, node, pneumatics::SettleBand{final_value, check.fraction * swing},
                                               t0));
                    }
                    r.detail = "s until both outlets settle within " + format_number(100.0 * check.fraction) +
                               " % of their swing";
                    break;
                }
                case CheckKind::hold: {
                    const auto window = pneumatics::slice(trace, t0, t1);
                    const auto& series = window.pressure_of(check.nodes[0]);
                    r.value = 0.0;
                    for (const double p : series) r.value = std::max(r.value, std::abs(p - check.target));
                    in_range = r.value <= check.band;
                    r.detail = "Pa max deviation from " + format_number(check.target) + " Pa";
                    break;
                }
                case CheckKind::peak: {
                    const auto window = pneumatics::slice(trace, t0, t1);
                    const auto& series = window.pressure_of(check.nodes[0]);
                    r.value = series.empty() ? 0.0 : *std::max_element(series.begin(), series.end()) - check.target;
                    r.detail = "Pa peak above " + format_number(check.target) + " Pa";
                    break;
                }
                case CheckKind::routes: {
                    if (!result.report || check.step >= result.report->step_patterns.size()) {
                        throw Error(ErrorCode::invalid_argument, "step was not executed");
                    }
                    const auto got = result.report->step_patterns[check.step].pairs_string();
                    in_range = got == check.expect;
                    r.detail = "routes " + got + (in_range ? "" : ", expected " + check.expect);
                    break;
                }
            }
            r.passed = in_range && (!check.min || r.value >= *check.min) && (!check.max || r.value <= *check.max);
        } catch (const Error& e) {
            r.passed = false;
            r.detail = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_run_report(const Scenario& scenario, const RunResult& result) {
    Writer w;
    w.scalar("scenario", scenario.name);
    w.scalar("profile", result.profile.name);
    w.scalar("topology", routing::topology_spec(result.topology));
    w.number("duration_s", result.trace.time.empty() ? 0.0 : result.trace.time.back());
    std::string text = w.str();
    if (result.report) text += sequencer::format_report(*result.report, result.schedule);
    Writer c;
    std::vector<Writer::Fields> rows;
    for (const auto& check : result.checks) {
        rows.push_back({{"name", Writer::quote(check.name)},
                        {"value", format_number(check.value)},
                        {"passed", check.passed ? "true" : "false"},
                        {"detail", Writer::quote(check.detail)}});
    }
    c.rows("checks", rows);
    return text + c.str();
}

std::vector<std::filesystem::path> write_outputs(const Scenario& scenario, const RunResult& result,
                                                 const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    if (scenario.write_trace) {
        const auto path = dir / "trace.csv";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
        pneumatics::write_csv(result.trace, out);
        written.push_back(path);
    }
    detail::write_file(dir / "report.yaml", format_run_report(scenario, result));
    written.push_back(dir / "report.yaml");
    if (result.report) {
        sequencer::persist_registry(result.report->registry, dir / "registry.txt");
        written.push_back(dir / "registry.txt");
    }
    return written;
}

}  // namespace sepm::scenario
