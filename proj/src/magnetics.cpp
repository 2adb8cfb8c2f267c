#include "sepm/magnetics.hpp"

#include "sepm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sepm::magnetics {

namespace {

void require(bool condition, const char* what) {
    if (!condition) {
        throw Error(ErrorCode::invalid_argument, what);
    }
}

}  // namespace

void CircuitGeometry::validate() const {
    require(rod_diameter > 0.0, "rod_diameter must be > 0");
    require(rod_count >= 1, "rod_count must be >= 1");
    require(pole_width > 0.0, "pole_width must be > 0");
    require(pole_thickness > 0.0, "pole_thickness must be > 0");
    require(gap > 0.0, "gap must be > 0");
    require(path_length > 0.0, "path_length must be > 0");
    require(leakage_permeance >= 0.0, "leakage_permeance must be >= 0");
}

double CircuitGeometry::magnet_area() const noexcept {
    return std::numbers::pi * rod_diameter * rod_diameter / 12.0 * rod_count;
}

double CircuitGeometry::gap_permeance() const noexcept {
    return kVacuumPermeability * pole_area() / (2.0 * gap);
}

void MagnetSpec::validate() const {
    require(ndfeb_remanence > 0.0, "ndfeb_remanence must be > 0");
    require(alnico_remanence > 0.0, "alnico_remanence must be > 0");
    require(alnico_coercivity > 0.0, "alnico_coercivity must be > 0");
    require(alnico_field_scale > 0.0, "alnico_field_scale must be > 0");
    require(mu_0 > 0.0, "mu_0 must be > 0");
    require(coil_turns >= 1, "coil_turns must be >= 1");
    require(coil_resistance > 0.0, "coil_resistance must be > 0");
    require(coil_inductance >= 0.0, "coil_inductance must be >= 0");
}

void Pulse::validate() const {
    require(voltage > 0.0, "pulse voltage must be > 0");
    require(duration > 0.0, "pulse duration must be > 0");
}

double hysteron_saturation(const MagnetSpec& spec) noexcept {
    return spec.alnico_remanence / std::tanh(spec.alnico_coercivity / spec.alnico_field_scale);
}

double hysteron_b(double h_m, Polarity alnico_sign, const MagnetSpec& spec) noexcept {
    const double shifted = (h_m + sign(alnico_sign) * spec.alnico_coercivity) / spec.alnico_field_scale;
    return hysteron_saturation(spec) * std::tanh(shifted);
}

double hysteron_slope(double h_m, Polarity alnico_sign, const MagnetSpec& spec) noexcept {
    const double shifted = (h_m + sign(alnico_sign) * spec.alnico_coercivity) / spec.alnico_field_scale;
    const double sech = 1.0 / std::cosh(shifted);
    return hysteron_saturation(spec) * sech * sech / spec.alnico_field_scale;
}

double delta_br(Polarity alnico_sign, const MagnetSpec& spec) noexcept {
    return 2.0 * sign(alnico_sign) * spec.ndfeb_remanence;
}

double flux_balance_residual(const CircuitGeometry& geom, const MagnetSpec& spec, double current,
                             Polarity alnico_sign, double h_m) noexcept {
    const double magnet_side = geom.magnet_area() *
        (hysteron_b(h_m, alnico_sign, spec) + delta_br(alnico_sign, spec) + 2.0 * spec.mu_0 * h_m);
    const double permeance = spec.mu_0 * geom.pole_area() / (2.0 * geom.gap) + geom.leakage_permeance;
    const double gap_side = permeance * (spec.coil_turns * current - h_m * geom.path_length);
    return magnet_side - gap_side;
}

double gap_flux_density(const CircuitGeometry& geom, const MagnetSpec& spec, double current,
                        double h_m) noexcept {
    return spec.mu_0 * (spec.coil_turns * current - h_m * geom.path_length) / (2.0 * geom.gap);
}

SepmState solve_flux_balance(const CircuitGeometry& geom, const MagnetSpec& spec, double current,
                             Polarity alnico_sign, const SolverOptions& options) {
    geom.validate();
    spec.validate();
    if (!std::isfinite(current)) {
        throw Error(ErrorCode::invalid_argument, "coil current must be finite");
    }

    const double area = geom.magnet_area();
    const double permeance = spec.mu_0 * geom.pole_area() / (2.0 * geom.gap) + geom.leakage_permeance;
    const double linear_slope = 2.0 * area * spec.mu_0 + permeance * geom.path_length;
    const double drive = permeance * spec.coil_turns * current;
    const double offset = area * delta_br(alnico_sign, spec);
    const double b_sat = hysteron_saturation(spec);

    // |B_alnico| < B_sat bounds the root between the two linear envelopes.
    double lo = (drive - offset - area * b_sat) / linear_slope;
    double hi = (drive - offset + area * b_sat) / linear_slope;
    const double pad = 1.0e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
    lo -= pad;
    hi += pad;

    auto residual = [&](double h) { return flux_balance_residual(geom, spec, current, alnico_sign, h); };

    double f_lo = residual(lo);
    double f_hi = residual(hi);
    if (!(f_lo <= 0.0 && f_hi >= 0.0)) {
        std::ostringstream msg;
        msg << "flux balance root not bracketed on [" << lo << ", " << hi << "] (f = " << f_lo << ", "
            << f_hi << ")";
        throw NoConvergence(msg.str(), std::min(std::abs(f_lo), std::abs(f_hi)), 0);
    }

    double h = std::clamp(drive / linear_slope - offset / linear_slope, lo, hi);
    double f = residual(h);
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        if (f == 0.0) {
            break;
        }
        if (f < 0.0) {
            lo = h;
        } else {
            hi = h;
        }

        const double slope = area * (hysteron_slope(h, alnico_sign, spec) + 2.0 * spec.mu_0) +
                             permeance * geom.path_length;
        double next = h - f / slope;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double step = std::abs(next - h);
        h = next;
        f = residual(h);

        const double scale = std::max(1.0, std::abs(h));
        if (std::abs(f) < options.residual_tolerance &&
            (step <= 1.0e-13 * scale || hi - lo <= 1.0e-13 * scale)) {
            break;
        }
        if (iter == options.max_iterations) {
            if (std::abs(f) < options.residual_tolerance) {
                break;
            }
            std::ostringstream msg;
            msg << "flux balance did not converge in " << options.max_iterations
                << " iterations (last residual " << f << " Wb)";
            throw NoConvergence(msg.str(), std::abs(f), iter);
        }
    }
    if (options.max_iterations <= 0 && std::abs(f) >= options.residual_tolerance) {
        throw NoConvergence("flux balance iteration budget is zero", std::abs(f), 0);
    }

    return SepmState{alnico_sign, h, gap_flux_density(geom, spec, current, h)};
}

double gap_force(const CircuitGeometry& geom, const MagnetSpec& spec, double current, double h_m) noexcept {
    const double mmf_per_gap = (spec.coil_turns * current - h_m * geom.path_length) / (2.0 * geom.gap);
    return spec.mu_0 * geom.pole_area() * mmf_per_gap * mmf_per_gap;
}

double coil_current(const Pulse& pulse, const MagnetSpec& spec, double t) noexcept {
    if (t <= 0.0) {
        return 0.0;
    }
    const double steady = pulse.voltage / spec.coil_resistance;
    if (spec.coil_inductance == 0.0) {
        return steady;
    }
    const double tau = spec.coil_inductance / spec.coil_resistance;
    return steady * -std::expm1(-t / tau);
}

double pulse_energy(const Pulse& pulse, const MagnetSpec& spec) {
    pulse.validate();
    spec.validate();
    const double v2_over_r = pulse.voltage * pulse.voltage / spec.coil_resistance;
    if (spec.coil_inductance == 0.0) {
        return v2_over_r * pulse.duration;
    }
    // integral of (V^2/R)(1 - exp(-t/tau)) over [0, T]
    const double tau = spec.coil_inductance / spec.coil_resistance;
    return v2_over_r * (pulse.duration + tau * std::expm1(-pulse.duration / tau));
}

PulseOutcome apply_pulse(const SepmState& /*state*/, const Pulse& pulse, const CircuitGeometry& geom,
                         const MagnetSpec& spec, const SolverOptions& options) {
    pulse.validate();
    const double energy = pulse_energy(pulse, spec);
    return PulseOutcome{solve_flux_balance(geom, spec, 0.0, pulse.polarity, options), energy};
}

}  // namespace sepm::magnetics
