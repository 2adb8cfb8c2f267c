#pragma once

// =============================================================================
// Lumped pneumatic network: capacitive pressure nodes joined by linear
// resistive edges. Edges may carry an inertance, in which case their flow is a
// state variable (L dQ/dt = dP - Q/G). Valve-tube edges take their conductance
// from the actuated state of a valve, which lags the logical state by the
// valve dead time.
//
// Pressures are gauge (ambient = 0). Flows are volumetric at reference
// conditions, so capacitance is volume / reference pressure.
// =============================================================================

#include "sepm/errors.hpp"
#include "sepm/types.hpp"
#include "sepm/valve.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sepm::pneumatics {

inline constexpr double kReferencePressure = 101325.0;  // Pa

enum class NodeKind { supply, internal, vent_terminal, well };

[[nodiscard]] std::string_view to_string(NodeKind kind) noexcept;
[[nodiscard]] std::optional<NodeKind> parse_node_kind(std::string_view text) noexcept;

struct PressureNode {
    std::string id;
    NodeKind kind = NodeKind::internal;
    double pressure = 0.0;     // Pa gauge
    double capacitance = 0.0;  // m^3/Pa, internal nodes only

    [[nodiscard]] bool fixed() const noexcept { return kind != NodeKind::internal; }
};

/// Capacitance of a gas volume under isothermal compression.
[[nodiscard]] inline double volume_capacitance(double volume, double reference_pressure = kReferencePressure) {
    return volume / reference_pressure;
}

struct ValveTubeRef {
    std::string valve_id;
    valve::Tube tube = valve::Tube::upper;
};

struct FlowEdge {
    std::string id;
    std::string from;
    std::string to;
    double conductance = 0.0;  // (m^3/s)/Pa
    double inertance = 0.0;    // Pa*s^2/m^3, zero for a purely resistive edge
    std::optional<ValveTubeRef> valve_tube;
};

class UnstableStep : public Error {
public:
    UnstableStep(const std::string& message, double bound)
        : Error(ErrorCode::unstable_step, message), bound_(bound) {}
    [[nodiscard]] double bound() const noexcept { return bound_; }

private:
    double bound_;
};

class NeverSettles : public Error {
public:
    explicit NeverSettles(const std::string& message) : Error(ErrorCode::never_settles, message) {}
};

struct Marker {
    double time = 0.0;
    std::string label;

    friend bool operator==(const Marker&, const Marker&) = default;
};

/// Uniformly sampled pressures and flows. Series are stored column-major in
/// id order (alphabetical).
struct Trace {
    double sample_interval = 0.0;
    std::vector<double> time;
    std::vector<std::string> node_ids;
    std::vector<std::string> edge_ids;
    std::vector<std::vector<double>> pressure;  // [node][sample]
    std::vector<std::vector<double>> flow;      // [edge][sample]
    std::vector<Marker> markers;

    [[nodiscard]] const std::vector<double>& pressure_of(const std::string& node) const;
    [[nodiscard]] const std::vector<double>& flow_of(const std::string& edge) const;
    [[nodiscard]] std::size_t index_at(double t) const;

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct PulseCommand {
    std::string valve_id;
    Polarity polarity = Polarity::positive;
};

struct SupplyChange {
    std::string node_id;
    double pressure = 0.0;
};

struct Event {
    double time = 0.0;
    std::variant<PulseCommand, SupplyChange> action;
};

struct IntegrationOptions {
    double dt = 1.0e-4;               // s, maximum step; sub-stepped for stability
    double sample_interval = 1.0e-3;  // s
};

class TraceRecorder;

class Network {
public:
    Network() = default;

    void add_node(PressureNode node);
    void add_edge(FlowEdge edge);
    void add_valve(valve::Valve v);

    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] const std::vector<PressureNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<FlowEdge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const std::vector<valve::Valve>& valves() const noexcept { return valves_; }
    [[nodiscard]] bool has_node(const std::string& id) const noexcept;
    [[nodiscard]] const PressureNode& node(const std::string& id) const;
    [[nodiscard]] double pressure(const std::string& id) const { return node(id).pressure; }
    [[nodiscard]] const valve::Valve& valve(const std::string& id) const;
    [[nodiscard]] bool has_valve(const std::string& id) const noexcept;

    /// Current flow on every edge, positive from `from` to `to`.
    [[nodiscard]] const std::vector<double>& edge_flows() const noexcept { return flows_; }
    [[nodiscard]] double edge_conductance(std::size_t edge_index) const;

    void set_pressure(const std::string& id, double pressure);

    /// Largest admissible explicit step.
    [[nodiscard]] double stability_bound() const;

    /// One explicit step. Throws UnstableStep when dt >= stability_bound().
    void step(double dt);

    /// Sum of C*P over internal nodes.
    [[nodiscard]] double stored_volume() const noexcept;

    /// Pulse a valve through its driver. Line pressure is the higher end of the
    /// tube being closed. The new tube conductances take effect after the
    /// valve dead time. Propagates valve::OcclusionFailed.
    valve::SwitchResult command_pulse(const std::string& valve_id, Polarity polarity,
                                      std::mt19937_64* rng = nullptr);

    /// Overwrite a valve's remanent state, effective immediately (restoring a
    /// persisted registry; no pulse is issued).
    void restore_valve(const std::string& valve_id, Polarity state, long pulse_count);

    /// Integrate to `t_end`, sub-stepping for stability, applying due
    /// actuations and sampling into `recorder` when given.
    void advance_to(double t_end, const IntegrationOptions& options, TraceRecorder* recorder = nullptr);

    /// Time of the next pending mechanical actuation, if any.
    [[nodiscard]] std::optional<double> next_actuation() const noexcept;

private:
    struct Actuation {
        valve::TubeConductances conductance;
        std::optional<valve::Tube> sealed;
        double hold_limit = 0.0;
    };
    struct Pending {
        double time = 0.0;
        std::size_t valve_index = 0;
        Actuation actuation;
    };

    [[nodiscard]] std::size_t node_index(const std::string& id) const;
    [[nodiscard]] std::size_t valve_index(const std::string& id) const;
    [[nodiscard]] Actuation actuation_of(const valve::Valve& v) const;
    void apply_due_actuations();
    void integrate(double span, double dt_max);
    void single_step(double h);

    std::vector<PressureNode> nodes_;
    std::vector<FlowEdge> edges_;
    std::vector<valve::Valve> valves_;
    std::vector<Actuation> applied_;
    std::vector<Pending> pending_;
    std::vector<double> flows_;
    std::vector<double> inflow_;
    std::vector<std::size_t> edge_from_;
    std::vector<std::size_t> edge_to_;
    std::vector<std::optional<std::size_t>> edge_valve_;
    std::map<std::string, std::size_t> node_lookup_;
    std::map<std::string, std::size_t> valve_lookup_;
    double time_ = 0.0;
};

/// Collects uniformly spaced samples of a network.
class TraceRecorder {
public:
    TraceRecorder(const Network& network, double sample_interval);

    /// Next sample time strictly greater than or equal to `t`.
    [[nodiscard]] double next_sample_time() const noexcept;
    void record(const Network& network);
    void mark(double time, std::string label);
    [[nodiscard]] Trace finish() &&;

private:
    Trace trace_;
    std::vector<std::size_t> node_order_;
    std::vector<std::size_t> edge_order_;
    std::size_t next_index_ = 0;
    double start_time_ = 0.0;
};

/// Value-semantics step: returns the advanced copy.
[[nodiscard]] Network step(Network network, double dt);

/// Run for `duration` seconds from the network's current time, executing
/// events at their timestamps (relative to the start). Events must be sorted.
/// OcclusionFailed is rethrown with the event timestamp in its message.
[[nodiscard]] Trace run(Network& network, double duration, const std::vector<Event>& events,
                        const IntegrationOptions& options = {}, std::mt19937_64* rng = nullptr);

struct SettleBand {
    double target = 0.0;      // Pa
    double half_width = 0.0;  // Pa
};

/// Time after `event_time` at which the node enters the band around the target
/// and stays in it to the end of the trace. Throws NeverSettles.
[[nodiscard]] double measure_settle(const Trace& trace, const std::string& node, const SettleBand& band,
                                    double event_time = 0.0);

/// Band of `fraction` of the step from the value at `event_time` to `target`.
[[nodiscard]] double measure_settle(const Trace& trace, const std::string& node, double fraction,
                                    double target, double event_time = 0.0);

/// Samples with t0 <= time <= t1, markers included when inside the window.
[[nodiscard]] Trace slice(const Trace& trace, double t0, double t1);

void write_csv(const Trace& trace, std::ostream& out);
[[nodiscard]] Trace read_csv(std::istream& in, const std::string& source = "<csv>");

}  // namespace sepm::pneumatics
