#pragma once

// Routing intents, pulse-schedule compilation, execution through a driver,
// the nonvolatile valve registry and the energy ledger.

#include "sepm/errors.hpp"
#include "sepm/pneumatics.hpp"
#include "sepm/routing.hpp"
#include "sepm/types.hpp"
#include "sepm/valve.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sepm::sequencer {

// -----------------------------------------------------------------------------
// Intents and programs
// -----------------------------------------------------------------------------

/// Media valve states of the mix-decoder: -1 passes liquid, +1 passes gas.
enum class Media { liquid, gas, toggle };

[[nodiscard]] std::string_view to_string(Media m) noexcept;
[[nodiscard]] std::optional<Media> parse_media(std::string_view text) noexcept;
[[nodiscard]] constexpr Polarity media_polarity(Media m) noexcept {
    return m == Media::gas ? Polarity::positive : Polarity::negative;
}

struct AddressIntent {
    long address = 0;
    friend bool operator==(const AddressIntent&, const AddressIntent&) = default;
};

struct MediaIntent {
    Media media = Media::toggle;
    friend bool operator==(const MediaIntent&, const MediaIntent&) = default;
};

using Intent = std::variant<AddressIntent, routing::SixPortMode, routing::StateVector, MediaIntent>;

struct Step {
    double time = 0.0;   // s from program start
    Intent intent;
    double dwell = 0.0;  // s

    friend bool operator==(const Step&, const Step&) = default;
};

struct Program {
    std::vector<Step> steps;

    /// Throws IntentInvalid for non-increasing times or non-positive dwell.
    void validate() const;
    /// End of the last dwell.
    [[nodiscard]] double end_time() const noexcept;

    friend bool operator==(const Program&, const Program&) = default;
};

class IntentInvalid : public Error {
public:
    IntentInvalid(std::size_t step, const std::string& message)
        : Error(ErrorCode::intent_invalid, "step " + std::to_string(step) + ": " + message), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

struct MixCycle {
    int wells = 8;
    double interval = 1.5;      // s per alternating media phase
    int alternations = 5;       // liquid/gas phases before the final one
    double final_phase = 2.0;   // s, closing gas phase
    double phase_offset = 0.0;  // s, shift of media toggles within each interval

    [[nodiscard]] double cycle_length() const noexcept {
        return static_cast<double>(alternations) * interval + final_phase;
    }
    friend bool operator==(const MixCycle&, const MixCycle&) = default;
};

/// One cycle per well: select the well and liquid, then alternate media every
/// `interval`, finishing with a gas phase of `final_phase`.
[[nodiscard]] Program mix_decoder_program(const routing::Topology& topology, const MixCycle& cycle = {});

// -----------------------------------------------------------------------------
// Registry
// -----------------------------------------------------------------------------

struct RegistryEntry {
    Polarity state = Polarity::negative;
    long pulse_count = 0;
    friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

/// Remanent state of every valve, keyed by valve id.
struct Registry {
    std::map<std::string, RegistryEntry> valves;

    /// Every valve of the topology at -1 with no pulses.
    [[nodiscard]] static Registry fresh(const routing::Topology& topology);
    [[nodiscard]] routing::StateVector state_vector(const routing::Topology& topology) const;
    /// Throws CorruptRegistry naming the first valve of `topology` that is absent.
    void check_covers(const routing::Topology& topology, const std::string& source, int end_line = 0) const;

    friend bool operator==(const Registry&, const Registry&) = default;
};

[[nodiscard]] std::string serialize_registry(const Registry& registry);
[[nodiscard]] Registry parse_registry(const std::string& text, const std::string& source = "<registry>");
void persist_registry(const Registry& registry, const std::filesystem::path& path);
/// With a topology, every valve must be present and no unknown ids appear.
[[nodiscard]] Registry load_registry(const std::filesystem::path& path,
                                     const routing::Topology* topology = nullptr);

/// Load the registry states into a network without issuing pulses.
void restore_network(pneumatics::Network& network, const Registry& registry);

// -----------------------------------------------------------------------------
// Schedules
// -----------------------------------------------------------------------------

struct Command {
    double time = 0.0;
    std::string valve_id;
    Polarity polarity = Polarity::positive;
    std::size_t step = 0;

    friend bool operator==(const Command&, const Command&) = default;
};

struct PulseSchedule {
    std::vector<Command> commands;
    std::vector<double> step_times;
    /// Resolved target of each step, with holds filled in.
    std::vector<routing::StateVector> step_targets;
    double end_time = 0.0;

    friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;
};

struct CompileOptions {
    double stagger = 1.0e-3;  // s between pulses within one step
};

/// Resolve one intent against the states currently held.
[[nodiscard]] routing::StateVector resolve_intent(const Intent& intent, const routing::Topology& topology,
                                                  const routing::StateVector& held);

/// Minimal schedule: a pulse only where the required state differs from the
/// held state; don't-cares hold.
[[nodiscard]] PulseSchedule compile(const Program& program, const routing::Topology& topology,
                                    const Registry& registry, const CompileOptions& options = {});

/// Printable "t valve polarity" listing.
[[nodiscard]] std::string format_schedule(const PulseSchedule& schedule);

// -----------------------------------------------------------------------------
// Drivers and execution
// -----------------------------------------------------------------------------

struct Acknowledgment {
    bool accepted = false;
    valve::SwitchResult result;
    std::string error;
};

class DriverPort {
public:
    virtual ~DriverPort() = default;
    /// Deliver one pulse command at simulated `time`.
    virtual Acknowledgment send_pulse(double time, const std::string& valve_id, Polarity polarity) = 0;
    /// Let simulated time pass without commands.
    virtual void advance_to(double time) = 0;
    /// Energy of one drive pulse.
    [[nodiscard]] virtual double pulse_energy() const = 0;
};

/// Records commands and acknowledges every one with a single pulse.
class MockDriver final : public DriverPort {
public:
    explicit MockDriver(double pulse_energy) : pulse_energy_(pulse_energy) {}

    Acknowledgment send_pulse(double time, const std::string& valve_id, Polarity polarity) override;
    void advance_to(double time) override;
    [[nodiscard]] double pulse_energy() const override { return pulse_energy_; }

    /// Commands for this valve are refused with an occlusion failure.
    void fail_valve(std::string valve_id) { failing_ = std::move(valve_id); }
    [[nodiscard]] const std::vector<Command>& log() const noexcept { return log_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double pulse_energy_;
    std::optional<std::string> failing_;
    std::vector<Command> log_;
    double time_ = 0.0;
};

/// Drives the valves of a pneumatic network and records its trace.
class SimulatedDriver final : public DriverPort {
public:
    SimulatedDriver(pneumatics::Network& network, pneumatics::IntegrationOptions options,
                    std::mt19937_64* rng = nullptr);

    Acknowledgment send_pulse(double time, const std::string& valve_id, Polarity polarity) override;
    void advance_to(double time) override;
    [[nodiscard]] double pulse_energy() const override;

    /// Change a supply pressure when the clock reaches `time`.
    void schedule_supply(double time, std::string node_id, double pressure);

    [[nodiscard]] pneumatics::Trace take_trace() &&;

private:
    struct SupplyStep {
        double time;
        std::string node_id;
        double pressure;
    };
    void run_until(double time);

    pneumatics::Network* network_;
    std::vector<SupplyStep> supply_steps_;
    pneumatics::IntegrationOptions options_;
    std::mt19937_64* rng_;
    pneumatics::TraceRecorder recorder_;
    double origin_;
};

struct EnergyLedger {
    double pulse_energy = 0.0;  // J per pulse
    std::map<std::string, long> pulses;

    [[nodiscard]] long total_pulses() const noexcept;
    [[nodiscard]] double total_energy() const noexcept;
    [[nodiscard]] static constexpr double holding_energy() noexcept { return 0.0; }
    void add(const std::string& valve_id, long count) { pulses[valve_id] += count; }
    void merge(const EnergyLedger& other);

    friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

struct StepFailure {
    std::size_t step = 0;
    double time = 0.0;
    std::string valve_id;
    std::string message;

    friend bool operator==(const StepFailure&, const StepFailure&) = default;
};

struct ExecuteOptions {
    bool halt_on_failure = true;
    /// Run the clock to the schedule end after the last command.
    bool run_to_end = true;
};

struct RunReport {
    Registry registry;
    EnergyLedger ledger;
    std::vector<routing::RoutePattern> step_patterns;
    std::vector<routing::StateVector> step_states;
    std::vector<StepFailure> failures;
    bool halted = false;
    std::size_t commands_sent = 0;

    [[nodiscard]] routing::StateVector final_state(const routing::Topology& topology) const {
        return registry.state_vector(topology);
    }
};

/// Dispatch the schedule in time order. Failed commands leave the logical
/// state unchanged, are recorded against their step, and halt the run when
/// `halt_on_failure`.
[[nodiscard]] RunReport execute(const PulseSchedule& schedule, DriverPort& driver,
                                const routing::Topology& topology, const Registry& initial,
                                const ExecuteOptions& options = {});

/// Structured text summary: energy, pulses, failures and per-step routes.
[[nodiscard]] std::string format_report(const RunReport& report, const PulseSchedule& schedule);

}  // namespace sepm::sequencer
