#include "sepm/valve.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace sepm::valve {

using magnetics::Pulse;
using magnetics::SepmState;

void TubeSpec::validate() const {
    if (!(inner_diameter > 0.0 && outer_diameter > inner_diameter)) {
        throw Error(ErrorCode::invalid_argument, "tube requires outer_diameter > inner_diameter > 0");
    }
    if (!(contact_length > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "tube contact_length must be > 0");
    }
    if (!(closed_leak_conductance >= 0.0 && open_conductance > closed_leak_conductance)) {
        throw Error(ErrorCode::invalid_argument,
                    "tube requires open_conductance > closed_leak_conductance >= 0");
    }
}

double TubeSpec::seal_width() const noexcept {
    return 0.5 * std::numbers::pi * outer_diameter;
}

void ValveConfig::validate() const {
    pulse.validate();
    if (!(collapse_force >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "collapse_force must be >= 0");
    }
    if (!(retry_collapse_factor >= 0.0 && retry_collapse_factor <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "retry_collapse_factor must be in [0, 1]");
    }
    if (max_retry < 0) {
        throw Error(ErrorCode::invalid_argument, "max_retry must be >= 0");
    }
    if (!(dead_time >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "dead_time must be >= 0");
    }
    if (!(stochastic_ramp > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "stochastic_ramp must be > 0");
    }
}

Valve::Valve(std::string id, Polarity logical_state, magnetics::Actuator actuator, TubeSpec upper,
             TubeSpec lower, ValveConfig config)
    : Valve(std::move(id),
            magnetics::solve_flux_balance(actuator.geometry, actuator.magnet, 0.0, logical_state,
                                          actuator.solver),
            actuator, upper, lower, config) {}

Valve::Valve(std::string id, SepmState sepm, magnetics::Actuator actuator, TubeSpec upper,
             TubeSpec lower, ValveConfig config)
    : id_(std::move(id)),
      logical_state_(sepm.alnico_sign),
      sepm_(sepm),
      occluded_(occluded_tube(sepm.alnico_sign)),
      actuator_(std::move(actuator)),
      upper_(upper),
      lower_(lower),
      config_(config) {
    actuator_.geometry.validate();
    actuator_.magnet.validate();
    upper_.validate();
    lower_.validate();
    config_.validate();
}

double Valve::pulse_energy() const {
    return magnetics::pulse_energy(config_.pulse, actuator_.magnet);
}

double Valve::closing_force(Polarity polarity) const {
    const auto state = magnetics::solve_flux_balance(actuator_.geometry, actuator_.magnet, 0.0, polarity,
                                                     actuator_.solver);
    return magnetics::gap_force(actuator_.geometry, actuator_.magnet, 0.0, state.h_m);
}

double Valve::pulse_threshold(Polarity polarity, int pulse_index) const {
    const double residual_collapse =
        config_.collapse_force * std::pow(config_.retry_collapse_factor, pulse_index - 1);
    return (closing_force(polarity) - residual_collapse) / tube(occluded_tube(polarity)).seal_area();
}

double Valve::static_limit() const {
    return closing_force(logical_state_) / tube(occluded_tube(logical_state_)).seal_area();
}

SwitchResult Valve::switch_to(Polarity polarity, double line_pressure, std::mt19937_64* rng) {
    if (!(line_pressure >= 0.0) || !std::isfinite(line_pressure)) {
        throw Error(ErrorCode::invalid_argument, "line_pressure must be finite and >= 0");
    }
    if (config_.mode == OcclusionMode::stochastic && rng == nullptr) {
        throw Error(ErrorCode::invalid_argument, "stochastic occlusion mode requires a seeded generator");
    }

    const Tube target = occluded_tube(polarity);
    const bool already_sealed = occluded_ == target;
    const double seal_area = tube(target).seal_area();
    const double load = line_pressure * seal_area;
    const Pulse pulse{config_.pulse.voltage, config_.pulse.duration, polarity};

    SwitchResult result;
    const int budget = 1 + config_.max_retry;
    for (int k = 1; k <= budget; ++k) {
        const auto outcome = magnetics::apply_pulse(sepm_, pulse, actuator_.geometry, actuator_.magnet,
                                                    actuator_.solver);
        sepm_ = outcome.state;
        ++result.pulses_used;
        ++pulse_count_;

        const double force = magnetics::gap_force(actuator_.geometry, actuator_.magnet, 0.0, sepm_.h_m);
        // A tube that is already pinched has no elastic resistance left to overcome.
        const double collapse =
            already_sealed ? 0.0 : config_.collapse_force * std::pow(config_.retry_collapse_factor, k - 1);

        bool sealed = force >= collapse + load;
        if (!sealed && config_.mode == OcclusionMode::stochastic) {
            const double threshold = (force - collapse) / seal_area;
            const double probability = 1.0 - (line_pressure - threshold) / config_.stochastic_ramp;
            if (probability > 0.0) {
                sealed = std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < probability;
            }
        }

        if (sealed) {
            result.switched = logical_state_ != polarity;
            result.occlusion_achieved = true;
            logical_state_ = polarity;
            occluded_ = target;
            result.energy = result.pulses_used * outcome.energy;
            return result;
        }
        result.energy = result.pulses_used * outcome.energy;
    }

    // The actuator has left the old tube but could not pinch the new one.
    occluded_.reset();
    std::ostringstream msg;
    msg << "valve " << id_ << ": " << to_string(target) << " tube not sealed against " << line_pressure
        << " Pa after " << result.pulses_used << " pulses";
    throw OcclusionFailed(msg.str(), result);
}

double Valve::hold_pressure_limit() const {
    if (!occluded_) {
        throw Error(ErrorCode::not_occluded, "valve " + id_ + " has no sealed tube");
    }
    const double force = magnetics::gap_force(actuator_.geometry, actuator_.magnet, 0.0, sepm_.h_m);
    return force / tube(*occluded_).seal_area();
}

TubeConductances Valve::tube_conductances() const noexcept {
    TubeConductances g{upper_.open_conductance, lower_.open_conductance};
    if (occluded_ == Tube::upper) {
        g.upper = upper_.closed_leak_conductance;
    } else if (occluded_ == Tube::lower) {
        g.lower = lower_.closed_leak_conductance;
    }
    return g;
}

}  // namespace sepm::valve
