#pragma once

// Scenario files: one YAML document naming a profile, a topology, the rig
// options, a program, supply events, output options and self-checks.
// The schema is documented in README.md.

#include "sepm/pneumatics.hpp"
#include "sepm/profile.hpp"
#include "sepm/routing.hpp"
#include "sepm/sequencer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sepm::scenario {

struct SupplyEvent {
    double time = 0.0;
    std::string input;  // input port; its supply node is changed
    double pressure = 0.0;

    friend bool operator==(const SupplyEvent&, const SupplyEvent&) = default;
};

enum class CheckKind { settle, crossover, hold, peak, routes };

[[nodiscard]] std::string_view to_string(CheckKind kind) noexcept;

/// A measurement over the window of one program step, from the step time to
/// the next step (or the end of the run).
struct CheckSpec {
    std::string name;
    CheckKind kind = CheckKind::settle;
    std::vector<std::string> nodes;
    std::size_t step = 0;
    double fraction = 0.05;  // settle: band as a fraction of supply; crossover: of each node's swing
    double target = 0.0;     // Pa, settle and hold
    double band = 1.0e3;     // Pa, hold half-width
    std::optional<double> min;
    std::optional<double> max;
    std::string expect;      // routes: pairs_string of the step

    friend bool operator==(const CheckSpec&, const CheckSpec&) = default;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
};

struct Scenario {
    std::string name;
    std::string profile;  // empty: the default profile
    std::string topology = "binary";
    std::vector<std::string> capped_outputs;
    std::optional<std::string> initial_state;  // concrete vector, '+'/'-' per valve
    std::optional<double> supply_pressure;
    std::vector<sequencer::Step> steps;
    std::optional<sequencer::MixCycle> mix_cycle;
    double stagger = 1.0e-3;
    bool halt_on_failure = true;
    std::vector<SupplyEvent> events;
    std::optional<double> duration;         // default: program end
    std::optional<double> sample_interval;  // default: profile
    std::optional<double> dt;               // default: profile
    bool write_trace = true;
    std::vector<CheckSpec> checks;

    [[nodiscard]] sequencer::Program program(const routing::Topology& topology) const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] std::string serialize_scenario(const Scenario& scenario);

/// Path of a bundled scenario, or `reference` itself when it names a file.
[[nodiscard]] std::filesystem::path resolve_scenario(const std::string& reference);

[[nodiscard]] std::vector<std::string> bundled_scenarios();

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<sequencer::Registry> registry;  // overrides initial_state
    bool dry_run = false;
};

struct RunResult {
    routing::Topology topology;
    profile::Profile profile;
    sequencer::Registry initial_registry;
    sequencer::PulseSchedule schedule;
    std::optional<sequencer::RunReport> report;  // absent on a dry run
    pneumatics::Trace trace;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool checks_passed() const;
};

/// Compile and, unless dry-running, execute against the simulated rig.
/// `base` resolves relative profile references.
[[nodiscard]] RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& base,
                                     const RunOptions& options = {});

/// Same with an already loaded profile.
[[nodiscard]] RunResult run_scenario(const Scenario& scenario, const profile::Profile& profile,
                                     const RunOptions& options = {});

[[nodiscard]] std::vector<CheckResult> evaluate_checks(const Scenario& scenario, const RunResult& result);

/// Summary document: scenario, energy ledger, per-step routes and checks.
[[nodiscard]] std::string format_run_report(const Scenario& scenario, const RunResult& result);

/// Write trace.csv (when enabled), report.yaml and registry.txt into `dir`.
/// Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const Scenario& scenario, const RunResult& result,
                                                 const std::filesystem::path& dir);

}  // namespace sepm::scenario
