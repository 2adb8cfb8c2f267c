#pragma once

#include "sepm/errors.hpp"
#include "sepm/magnetics.hpp"
#include "sepm/types.hpp"

#include <optional>
#include <random>
#include <string>

namespace sepm::valve {

enum class Tube { upper, lower };

[[nodiscard]] constexpr std::string_view to_string(Tube t) noexcept {
    return t == Tube::upper ? "upper" : "lower";
}

/// Logical +1 seals the upper tube, -1 seals the lower tube.
[[nodiscard]] constexpr Tube occluded_tube(Polarity state) noexcept {
    return state == Polarity::positive ? Tube::upper : Tube::lower;
}

struct TubeSpec {
    double outer_diameter = 2.0e-3;         // m
    double inner_diameter = 1.5e-3;         // m
    double contact_length = 10.0e-3;        // m, along the raised bar
    double open_conductance = 1.25e-8;      // (m^3/s)/Pa
    double closed_leak_conductance = 0.0;   // (m^3/s)/Pa

    void validate() const;

    /// Width of the flattened tube, half its outer circumference.
    [[nodiscard]] double seal_width() const noexcept;
    [[nodiscard]] double seal_area() const noexcept { return contact_length * seal_width(); }
};

enum class OcclusionMode { deterministic, stochastic };

struct ValveConfig {
    magnetics::Pulse pulse{};           // polarity field is ignored
    double collapse_force = 7.0;        // N, elastic resistance of an open tube to pinching
    double retry_collapse_factor = 0.5; // remaining collapse resistance after each failed stroke
    int max_retry = 3;                  // additional pulses after the first
    double dead_time = 0.05;            // s, command to mechanical occlusion
    OcclusionMode mode = OcclusionMode::deterministic;
    double stochastic_ramp = 40.0e3;    // Pa, width of the success-probability ramp

    void validate() const;
};

struct SwitchResult {
    bool switched = false;
    bool occlusion_achieved = false;
    double energy = 0.0;  // J
    int pulses_used = 0;

    friend bool operator==(const SwitchResult&, const SwitchResult&) = default;
};

struct TubeConductances {
    double upper = 0.0;
    double lower = 0.0;
};

class OcclusionFailed : public Error {
public:
    OcclusionFailed(const std::string& message, SwitchResult result)
        : Error(ErrorCode::occlusion_failed, message), result_(result) {}

    [[nodiscard]] const SwitchResult& result() const noexcept { return result_; }

private:
    SwitchResult result_;
};

/// Bistable two-tube pinch valve. All state is remanent: the logical state,
/// the magnetic operating point and which tube is sealed.
class Valve {
public:
    Valve(std::string id, Polarity logical_state, magnetics::Actuator actuator,
          TubeSpec upper, TubeSpec lower, ValveConfig config);

    /// Restore from an explicit magnetic operating point.
    Valve(std::string id, magnetics::SepmState sepm, magnetics::Actuator actuator,
          TubeSpec upper, TubeSpec lower, ValveConfig config);

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] Polarity logical_state() const noexcept { return logical_state_; }
    [[nodiscard]] const magnetics::SepmState& sepm() const noexcept { return sepm_; }
    [[nodiscard]] std::optional<Tube> occluded() const noexcept { return occluded_; }
    [[nodiscard]] const TubeSpec& tube(Tube t) const noexcept { return t == Tube::upper ? upper_ : lower_; }
    [[nodiscard]] const TubeSpec& upper_tube() const noexcept { return upper_; }
    [[nodiscard]] const TubeSpec& lower_tube() const noexcept { return lower_; }
    [[nodiscard]] const ValveConfig& config() const noexcept { return config_; }
    [[nodiscard]] const magnetics::Actuator& actuator() const noexcept { return actuator_; }
    [[nodiscard]] long pulse_count() const noexcept { return pulse_count_; }
    void set_pulse_count(long count) noexcept { pulse_count_ = count; }

    /// Electrical energy of one drive pulse.
    [[nodiscard]] double pulse_energy() const;

    /// Gap force in the remanent state reached by a pulse of `polarity`.
    [[nodiscard]] double closing_force(Polarity polarity) const;

    /// Highest line pressure the n-th pulse (1-based) of a closing attempt
    /// can seal against in deterministic mode.
    [[nodiscard]] double pulse_threshold(Polarity polarity, int pulse_index) const;

    /// Single-pulse closing limit (`pulse_threshold` of the first pulse).
    [[nodiscard]] double dynamic_threshold() const { return pulse_threshold(logical_state_, 1); }

    /// Static limit of the current state: closing force over seal area.
    [[nodiscard]] double static_limit() const;

    /// Fire pulses of `polarity` until the target tube is sealed against
    /// `line_pressure` or the retry budget runs out (OcclusionFailed).
    /// `rng` is required in stochastic mode only.
    SwitchResult switch_to(Polarity polarity, double line_pressure, std::mt19937_64* rng = nullptr);

    /// Throws NotOccluded when no tube is sealed.
    [[nodiscard]] double hold_pressure_limit() const;

    [[nodiscard]] TubeConductances tube_conductances() const noexcept;

private:
    std::string id_;
    Polarity logical_state_;
    magnetics::SepmState sepm_;
    std::optional<Tube> occluded_;
    magnetics::Actuator actuator_;
    TubeSpec upper_;
    TubeSpec lower_;
    ValveConfig config_;
    long pulse_count_ = 0;
};

}  // namespace sepm::valve
