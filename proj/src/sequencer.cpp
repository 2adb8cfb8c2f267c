#include "sepm/sequencer.hpp"

#include "yaml_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace sepm::sequencer {

using routing::StateVector;
using routing::Topology;
using routing::TopologyKind;

std::string_view to_string(Media m) noexcept {
    switch (m) {
        case Media::liquid: return "liquid";
        case Media::gas: return "gas";
        case Media::toggle: return "toggle";
    }
    return "toggle";
}

std::optional<Media> parse_media(std::string_view text) noexcept {
    if (text == "liquid") return Media::liquid;
    if (text == "gas") return Media::gas;
    if (text == "toggle") return Media::toggle;
    return std::nullopt;
}

// -----------------------------------------------------------------------------
// Programs
// -----------------------------------------------------------------------------

void Program::validate() const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (!(s.time >= 0.0) || !std::isfinite(s.time)) throw IntentInvalid(i, "time must be finite and >= 0");
        if (!(s.dwell > 0.0) || !std::isfinite(s.dwell)) throw IntentInvalid(i, "dwell must be > 0");
        if (i > 0) {
            const auto& prev = steps[i - 1];
            if (!(s.time > prev.time)) throw IntentInvalid(i, "step times must be strictly increasing");
            if (prev.time + prev.dwell > s.time) {
                throw IntentInvalid(i - 1, "dwell overlaps the next step");
            }
        }
    }
}

double Program::end_time() const noexcept {
    return steps.empty() ? 0.0 : steps.back().time + steps.back().dwell;
}

Program mix_decoder_program(const Topology& topology, const MixCycle& cycle) {
    if (topology.kind != TopologyKind::mix_decoder) {
        throw Error(ErrorCode::invalid_argument, "mix cycle needs a mix-decoder topology");
    }
    const long outputs = 1L << topology.depth;
    if (cycle.wells < 1 || cycle.wells > outputs) {
        throw Error(ErrorCode::invalid_argument, "mix cycle wells must be in [1, " + std::to_string(outputs) + "]");
    }
    if (!(cycle.interval > 0.0 && cycle.final_phase > 0.0) || cycle.alternations < 1) {
        throw Error(ErrorCode::invalid_argument, "mix cycle needs interval, final_phase > 0 and alternations >= 1");
    }
    if (!(cycle.phase_offset >= 0.0 && cycle.phase_offset < cycle.interval)) {
        throw Error(ErrorCode::invalid_argument, "mix cycle phase_offset must be in [0, interval)");
    }

    Program program;
    const double length = cycle.cycle_length();
    for (int w = 0; w < cycle.wells; ++w) {
        const double start = static_cast<double>(w) * length;
        auto select = routing::decode_address(topology, w);
        select.entries[0] = media_polarity(Media::liquid);

        // Phase k (0-based) starts at start + k * interval; phases alternate
        // liquid, gas, ... and the phase after the last alternation is gas.
        std::vector<std::pair<double, Intent>> marks;
        marks.emplace_back(start, select);
        for (int k = 1; k <= cycle.alternations; ++k) {
            const double t = start + static_cast<double>(k) * cycle.interval + cycle.phase_offset;
            const Media m = k % 2 == 1 ? Media::gas : Media::liquid;
            marks.emplace_back(t, MediaIntent{m});
        }
        if (cycle.alternations % 2 == 0) {
            // the last alternation left liquid selected; the final phase is gas
            marks.back().second = MediaIntent{Media::gas};
        }
        for (std::size_t k = 0; k < marks.size(); ++k) {
            const double next = k + 1 < marks.size() ? marks[k + 1].first : start + length;
            program.steps.push_back(Step{marks[k].first, marks[k].second, next - marks[k].first});
        }
    }
    return program;
}

// -----------------------------------------------------------------------------
// Registry
// -----------------------------------------------------------------------------

Registry Registry::fresh(const Topology& topology) {
    Registry r;
    for (const auto& id : topology.valves) r.valves.emplace(id, RegistryEntry{});
    return r;
}

StateVector Registry::state_vector(const Topology& topology) const {
    StateVector v(topology.valve_count());
    for (std::size_t i = 0; i < topology.valve_count(); ++i) {
        const auto it = valves.find(topology.valves[i]);
        if (it == valves.end()) {
            throw Error(ErrorCode::corrupt_registry, "registry has no entry for " + topology.valves[i]);
        }
        v.entries[i] = it->second.state;
    }
    return v;
}

void Registry::check_covers(const Topology& topology, const std::string& source, int end_line) const {
    for (const auto& id : topology.valves) {
        if (!valves.contains(id)) {
            throw CorruptRegistry(source, end_line, "missing valve " + id);
        }
    }
}

std::string serialize_registry(const Registry& registry) {
    std::string out = "# valve registry: id, logical state, pulse count\n";
    for (const auto& [id, entry] : registry.valves) {
        out += "valve " + id + " " + std::string(to_string(entry.state)) + " " + std::to_string(entry.pulse_count) +
               "\n";
    }
    return out;
}

namespace {

struct ParsedRegistry {
    Registry registry;
    std::map<std::string, int> lines;
    int line_count = 0;
};

ParsedRegistry parse_with_lines(const std::string& text, const std::string& source) {
    ParsedRegistry parsed;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string tag;
        std::string id;
        std::string state;
        std::string count;
        std::string extra;
        fields >> tag >> id >> state >> count;
        if (tag != "valve" || count.empty() || (fields >> extra)) {
            throw CorruptRegistry(source, line_no, "expected 'valve <id> <+1|-1> <pulse_count>'");
        }
        const auto polarity = parse_polarity(state);
        if (!polarity || (state != "+1" && state != "-1")) {
            throw CorruptRegistry(source, line_no, "state must be +1 or -1, got '" + state + "'");
        }
        long pulses = 0;
        const auto r = std::from_chars(count.data(), count.data() + count.size(), pulses);
        if (r.ec != std::errc{} || r.ptr != count.data() + count.size() || pulses < 0) {
            throw CorruptRegistry(source, line_no, "pulse count must be a non-negative integer");
        }
        if (!parsed.registry.valves.emplace(id, RegistryEntry{*polarity, pulses}).second) {
            throw CorruptRegistry(source, line_no, "duplicate valve " + id);
        }
        parsed.lines.emplace(id, line_no);
    }
    parsed.line_count = line_no;
    return parsed;
}

}  // namespace

Registry parse_registry(const std::string& text, const std::string& source) {
    return parse_with_lines(text, source).registry;
}

void persist_registry(const Registry& registry, const std::filesystem::path& path) {
    detail::write_file(path, serialize_registry(registry));
}

Registry load_registry(const std::filesystem::path& path, const Topology* topology) {
    const auto source = path.string();
    auto parsed = parse_with_lines(detail::read_file(path), source);
    if (topology != nullptr) {
        for (const auto& [id, line] : parsed.lines) {
            if (std::find(topology->valves.begin(), topology->valves.end(), id) == topology->valves.end()) {
                throw CorruptRegistry(source, line, "unknown valve " + id);
            }
        }
        parsed.registry.check_covers(*topology, source, parsed.line_count + 1);
    }
    return std::move(parsed.registry);
}

void restore_network(pneumatics::Network& network, const Registry& registry) {
    for (const auto& v : network.valves()) {
        const auto it = registry.valves.find(v.id());
        if (it == registry.valves.end()) {
            throw Error(ErrorCode::corrupt_registry, "registry has no entry for " + v.id());
        }
    }
    for (const auto& [id, entry] : registry.valves) {
        network.restore_valve(id, entry.state, entry.pulse_count);
    }
}

// -----------------------------------------------------------------------------
// Compilation
// -----------------------------------------------------------------------------

StateVector resolve_intent(const Intent& intent, const Topology& topology, const StateVector& held) {
    if (const auto* a = std::get_if<AddressIntent>(&intent)) {
        return routing::decode_address(topology, a->address);
    }
    if (const auto* mode = std::get_if<routing::SixPortMode>(&intent)) {
        if (topology.kind != TopologyKind::six_port_ring) {
            throw Error(ErrorCode::invalid_argument, "port modes need the six-port ring");
        }
        return routing::six_port_mode(*mode);
    }
    if (const auto* v = std::get_if<StateVector>(&intent)) {
        if (v->size() != topology.valve_count()) {
            throw Error(ErrorCode::invalid_argument, "state vector has " + std::to_string(v->size()) +
                                                         " entries for " + std::to_string(topology.valve_count()) +
                                                         " valves");
        }
        return *v;
    }
    const auto& media = std::get<MediaIntent>(intent);
    if (topology.kind != TopologyKind::mix_decoder) {
        throw Error(ErrorCode::invalid_argument, "media select needs the mix-decoder");
    }
    StateVector out(topology.valve_count());
    if (media.media == Media::toggle) {
        if (!held.entries[0]) throw Error(ErrorCode::invalid_argument, "media state unknown, cannot toggle");
        out.entries[0] = flip(*held.entries[0]);
    } else {
        out.entries[0] = media_polarity(media.media);
    }
    return out;
}

PulseSchedule compile(const Program& program, const Topology& topology, const Registry& registry,
                      const CompileOptions& options) {
    if (!(options.stagger >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "stagger must be >= 0");
    }
    program.validate();
    StateVector held = registry.state_vector(topology);

    PulseSchedule schedule;
    schedule.end_time = program.end_time();
    for (std::size_t i = 0; i < program.steps.size(); ++i) {
        const auto& step = program.steps[i];
        StateVector target;
        try {
            target = resolve_intent(step.intent, topology, held);
        } catch (const IntentInvalid&) {
            throw;
        } catch (const Error& e) {
            throw IntentInvalid(i, e.what());
        }

        std::size_t issued = 0;
        for (std::size_t v = 0; v < target.size(); ++v) {
            if (!target.entries[v]) continue;  // hold
            if (*target.entries[v] != *held.entries[v]) {
                schedule.commands.push_back(Command{step.time + static_cast<double>(issued) * options.stagger,
                                                    topology.valves[v], *target.entries[v], i});
                ++issued;
            }
            held.entries[v] = target.entries[v];
        }
        if (issued > 0 && static_cast<double>(issued - 1) * options.stagger >= step.dwell) {
            throw IntentInvalid(i, std::to_string(issued) + " staggered pulses do not fit the dwell");
        }
        schedule.step_times.push_back(step.time);
        schedule.step_targets.push_back(held);
    }
    return schedule;
}

std::string format_schedule(const PulseSchedule& schedule) {
    std::ostringstream out;
    out << "# time_s step valve polarity\n";
    for (const auto& c : schedule.commands) {
        out << detail::format_number(c.time) << ' ' << c.step << ' ' << c.valve_id << ' ' << to_string(c.polarity)
            << '\n';
    }
    out << "# " << schedule.commands.size() << " pulses over " << schedule.step_times.size() << " steps, end "
        << detail::format_number(schedule.end_time) << " s\n";
    return out.str();
}

// -----------------------------------------------------------------------------
// Drivers
// -----------------------------------------------------------------------------

Acknowledgment MockDriver::send_pulse(double time, const std::string& valve_id, Polarity polarity) {
    time_ = std::max(time_, time);
    log_.push_back(Command{time, valve_id, polarity, 0});
    Acknowledgment ack;
    ack.result.pulses_used = 1;
    ack.result.energy = pulse_energy_;
    if (failing_ == valve_id) {
        ack.error = "valve " + valve_id + ": mock occlusion failure";
        return ack;
    }
    ack.accepted = true;
    ack.result.switched = true;
    ack.result.occlusion_achieved = true;
    return ack;
}

void MockDriver::advance_to(double time) { time_ = std::max(time_, time); }

SimulatedDriver::SimulatedDriver(pneumatics::Network& network, pneumatics::IntegrationOptions options,
                                 std::mt19937_64* rng)
    : network_(&network),
      options_(options),
      rng_(rng),
      recorder_(network, options.sample_interval),
      origin_(network.time()) {}

void SimulatedDriver::schedule_supply(double time, std::string node_id, double pressure) {
    if (network_->node(node_id).kind != pneumatics::NodeKind::supply) {
        throw Error(ErrorCode::invalid_argument, "node '" + node_id + "' is not a supply");
    }
    SupplyStep s{origin_ + time, std::move(node_id), pressure};
    const auto pos = std::upper_bound(supply_steps_.begin(), supply_steps_.end(), s.time,
                                      [](double t, const SupplyStep& q) { return t < q.time; });
    supply_steps_.insert(pos, std::move(s));
}

void SimulatedDriver::run_until(double t) {
    while (!supply_steps_.empty() && supply_steps_.front().time <= t) {
        const auto s = supply_steps_.front();
        supply_steps_.erase(supply_steps_.begin());
        network_->advance_to(std::max(s.time, network_->time()), options_, &recorder_);
        recorder_.mark(network_->time(), "supply " + s.node_id + " " + detail::format_number(s.pressure));
        network_->set_pressure(s.node_id, s.pressure);
    }
    network_->advance_to(std::max(t, network_->time()), options_, &recorder_);
}

Acknowledgment SimulatedDriver::send_pulse(double time, const std::string& valve_id, Polarity polarity) {
    const double t = origin_ + time;
    run_until(t);
    recorder_.mark(network_->time(), "pulse " + valve_id + " " + std::string(sepm::to_string(polarity)));
    Acknowledgment ack;
    try {
        ack.result = network_->command_pulse(valve_id, polarity, rng_);
        ack.accepted = true;
    } catch (const valve::OcclusionFailed& failure) {
        ack.result = failure.result();
        ack.error = "t = " + detail::format_number(t) + " s: " + failure.what();
    }
    return ack;
}

void SimulatedDriver::advance_to(double time) { run_until(origin_ + time); }

double SimulatedDriver::pulse_energy() const {
    return network_->valves().empty() ? 0.0 : network_->valves().front().pulse_energy();
}

pneumatics::Trace SimulatedDriver::take_trace() && { return std::move(recorder_).finish(); }

// -----------------------------------------------------------------------------
// Execution
// -----------------------------------------------------------------------------

long EnergyLedger::total_pulses() const noexcept {
    long total = 0;
    for (const auto& [id, n] : pulses) total += n;
    return total;
}

double EnergyLedger::total_energy() const noexcept {
    return pulse_energy * static_cast<double>(total_pulses());
}

void EnergyLedger::merge(const EnergyLedger& other) {
    if (pulse_energy == 0.0) pulse_energy = other.pulse_energy;
    for (const auto& [id, n] : other.pulses) pulses[id] += n;
}

RunReport execute(const PulseSchedule& schedule, DriverPort& driver, const Topology& topology,
                  const Registry& initial, const ExecuteOptions& options) {
    initial.check_covers(topology, "<registry>");
    RunReport report;
    report.registry = initial;
    report.ledger.pulse_energy = driver.pulse_energy();

    std::size_t next = 0;
    for (std::size_t step = 0; step < schedule.step_times.size() && !report.halted; ++step) {
        for (; next < schedule.commands.size() && schedule.commands[next].step == step; ++next) {
            const auto& cmd = schedule.commands[next];
            const auto ack = driver.send_pulse(cmd.time, cmd.valve_id, cmd.polarity);
            ++report.commands_sent;
            report.ledger.add(cmd.valve_id, ack.result.pulses_used);
            auto& entry = report.registry.valves.at(cmd.valve_id);
            entry.pulse_count += ack.result.pulses_used;
            if (ack.accepted) {
                entry.state = cmd.polarity;
                continue;
            }
            report.failures.push_back(StepFailure{step, cmd.time, cmd.valve_id, ack.error});
            if (options.halt_on_failure) {
                report.halted = true;
                break;
            }
        }
        auto state = report.registry.state_vector(topology);
        report.step_patterns.push_back(routing::active_paths(topology, state));
        report.step_states.push_back(std::move(state));
    }
    if (!report.halted && options.run_to_end) {
        driver.advance_to(schedule.end_time);
    }
    return report;
}

std::string format_report(const RunReport& report, const PulseSchedule& schedule) {
    detail::Writer w;
    w.open("energy");
    w.number("pulse_energy_J", report.ledger.pulse_energy);
    w.integer("total_pulses", report.ledger.total_pulses());
    w.number("total_energy_J", report.ledger.total_energy());
    w.number("holding_energy_J", EnergyLedger::holding_energy());
    w.open("pulses_per_valve");
    for (const auto& [id, n] : report.ledger.pulses) w.integer(id, n);
    w.close();
    w.close();
    w.boolean("halted", report.halted);
    w.integer("commands_sent", static_cast<long>(report.commands_sent));
    std::vector<detail::Writer::Fields> failures;
    for (const auto& f : report.failures) {
        failures.push_back({{"step", std::to_string(f.step)},
                            {"time", detail::format_number(f.time)},
                            {"valve", f.valve_id},
                            {"message", detail::Writer::quote(f.message)}});
    }
    w.rows("failures", failures);
    std::vector<detail::Writer::Fields> steps;
    for (std::size_t i = 0; i < report.step_patterns.size(); ++i) {
        const auto& pattern = report.step_patterns[i];
        std::string media;
        for (const auto& [node, labels] : pattern.media) {
            if (!media.empty()) media += ' ';
            media += node + "=";
            bool first = true;
            for (const auto& m : labels) {
                if (!first) media += '+';
                media += m;
                first = false;
            }
        }
        steps.push_back({{"index", std::to_string(i)},
                         {"time", detail::format_number(schedule.step_times[i])},
                         {"state", detail::Writer::quote(report.step_states[i].to_string())},
                         {"routes", detail::Writer::quote(pattern.pairs_string())},
                         {"media", detail::Writer::quote(media)}});
    }
    w.rows("steps", steps);
    return w.str();
}

}  // namespace sepm::sequencer
