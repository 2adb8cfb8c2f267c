#include "sepm/calibration.hpp"

#include "sepm/rig.hpp"
#include "yaml_util.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sepm::calibration {

using profile::Profile;

namespace {

constexpr double kSettleLead = 0.5;         // s of open flow before the closing pulse
constexpr double kClosureSample = 1.0e-4;   // s
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool energy_met(const Profile& p, double e) {
    return std::abs(e - p.calibration.pulse_energy) <= p.calibration.pulse_energy_tolerance;
}

bool static_met(const Profile& p, double s) {
    return std::abs(s - p.calibration.static_limit) <= p.calibration.static_limit_tolerance;
}

bool closure_met(const Profile& p, double t) {
    return std::isfinite(t) && std::abs(t - p.calibration.closure_time) <= p.calibration.closure_time_tolerance;
}

double closing_force(const Profile& p) {
    return profile::make_valve(p, "V1", Polarity::negative).closing_force(Polarity::positive);
}

}  // namespace

bool single_pulse_closes(const Profile& profile, double line_pressure) {
    auto v = profile::make_valve(profile, "V1", Polarity::negative);
    try {
        return v.switch_to(Polarity::positive, line_pressure).pulses_used == 1;
    } catch (const valve::OcclusionFailed&) {
        return false;
    }
}

double closure_time(const Profile& profile) {
    auto net = rig::build_fig3_rig(profile, Polarity::negative, false);
    pneumatics::IntegrationOptions options = profile.integration;
    options.sample_interval = kClosureSample;
    const double horizon = kSettleLead + 4.0 * std::max(profile.calibration.closure_time, 0.1);
    const std::vector<pneumatics::Event> events{
        {kSettleLead, pneumatics::PulseCommand{"V1", Polarity::positive}}};
    try {
        const auto trace = pneumatics::run(net, horizon, events, options);
        const double band = profile.calibration.closure_fraction * profile.rig.supply_pressure;
        return pneumatics::measure_settle(trace, "Y0", pneumatics::SettleBand{0.0, band}, kSettleLead);
    } catch (const pneumatics::NeverSettles&) {
        return kNaN;
    }
}

Measurements measure(const Profile& profile) {
    Measurements m;
    const auto v = profile::make_valve(profile, "V1", Polarity::positive);
    m.pulse_energy = v.pulse_energy();
    m.static_limit = v.static_limit();
    m.dynamic_threshold = v.pulse_threshold(Polarity::positive, 1);
    const double target = profile.calibration.dynamic_threshold;
    m.boundary_exact = single_pulse_closes(profile, target) && !single_pulse_closes(profile, target + 1.0);
    m.closure_time = closure_time(profile);
    return m;
}

CalibrationReport calibrate(const Profile& original, std::optional<int> max_iterations) {
    Profile p = original;
    p.validate();
    const auto& cal = p.calibration;
    int budget = max_iterations.value_or(cal.max_iterations);
    if (budget < 0) {
        throw Error(ErrorCode::invalid_argument, "iteration budget must be >= 0");
    }
    CalibrationReport report;
    const Measurements before = measure(p);
    std::vector<std::string> bound_problems;

    // Pulse energy falls monotonically with coil inductance.
    if (!energy_met(p, before.pulse_energy) && budget > 0) {
        double lo = std::log(cal.coil_inductance.lo);
        double hi = std::log(cal.coil_inductance.hi);
        auto energy_at = [&](double log_l) {
            Profile q = p;
            q.actuator.magnet.coil_inductance = std::exp(log_l);
            return magnetics::pulse_energy(q.valve.pulse, q.actuator.magnet);
        };
        if (energy_at(lo) < cal.pulse_energy || energy_at(hi) > cal.pulse_energy) {
            bound_problems.push_back("pulse_energy outside the coil_inductance bounds");
        } else {
            while (budget > 0) {
                --budget;
                const double mid = 0.5 * (lo + hi);
                const double e = energy_at(mid);
                p.actuator.magnet.coil_inductance = std::exp(mid);
                if (std::abs(e - cal.pulse_energy) <= 0.1 * cal.pulse_energy_tolerance) break;
                (e > cal.pulse_energy ? lo : hi) = mid;
            }
        }
    }

    // Static limit is closing force over seal area, linear in contact length.
    if (!static_met(p, before.static_limit) && budget > 0) {
        --budget;
        const double length = closing_force(p) / (p.tube.seal_width() * cal.static_limit);
        if (length < cal.contact_length.lo || length > cal.contact_length.hi) {
            bound_problems.push_back("static_limit needs contact_length " + detail::format_number(length) +
                                     " m outside its bounds");
        } else {
            p.tube.contact_length = length;
        }
    }

    // Single-pulse boundary: force >= collapse + p * seal area.
    const double target = cal.dynamic_threshold;
    auto boundary_exact = [&] { return single_pulse_closes(p, target) && !single_pulse_closes(p, target + 1.0); };
    if (!boundary_exact() && budget > 0) {
        --budget;
        const double force = closing_force(p);
        double collapse = force - target * p.tube.seal_area();
        p.valve.collapse_force = collapse;
        for (int nudge = 0; nudge < 64 && !single_pulse_closes(p, target); ++nudge) {
            collapse = std::nextafter(collapse, -std::numeric_limits<double>::infinity());
            p.valve.collapse_force = collapse;
        }
        for (int nudge = 0; nudge < 64 && single_pulse_closes(p, target + 1.0); ++nudge) {
            collapse = std::nextafter(collapse, std::numeric_limits<double>::infinity());
            p.valve.collapse_force = collapse;
        }
        if (collapse < cal.collapse_force.lo || collapse > cal.collapse_force.hi) {
            bound_problems.push_back("dynamic_threshold needs collapse_force " + detail::format_number(collapse) +
                                     " N outside its bounds");
            p.valve.collapse_force = original.valve.collapse_force;
        }
    }

    // Closure time falls monotonically with vent conductance.
    if (!closure_met(p, closure_time(p)) && budget > 0) {
        double lo = std::log(cal.vent_conductance.lo);
        double hi = std::log(cal.vent_conductance.hi);
        auto time_at = [&](double log_g) {
            Profile q = p;
            q.rig.vent_conductance = std::exp(log_g);
            return closure_time(q);
        };
        budget -= 2;
        const double slow = time_at(lo);
        const double fast = time_at(hi);
        if (!(std::isnan(slow) || slow >= cal.closure_time) || !(fast <= cal.closure_time)) {
            bound_problems.push_back("closure_time outside the vent_conductance bounds");
        } else {
            while (budget > 0) {
                --budget;
                const double mid = 0.5 * (lo + hi);
                const double t = time_at(mid);
                p.rig.vent_conductance = std::exp(mid);
                if (std::isfinite(t) && std::abs(t - cal.closure_time) <= 0.25 * cal.closure_time_tolerance) break;
                ((std::isnan(t) || t > cal.closure_time) ? lo : hi) = mid;
            }
        }
    }

    const Measurements after = measure(p);
    report.iterations_used = max_iterations.value_or(cal.max_iterations) - std::max(budget, 0);
    report.residuals = {
        {"pulse_energy", "coil_inductance", cal.pulse_energy, before.pulse_energy, after.pulse_energy,
         cal.pulse_energy_tolerance, energy_met(p, before.pulse_energy), energy_met(p, after.pulse_energy)},
        {"static_limit", "contact_length", cal.static_limit, before.static_limit, after.static_limit,
         cal.static_limit_tolerance, static_met(p, before.static_limit), static_met(p, after.static_limit)},
        {"dynamic_threshold", "collapse_force", target, before.dynamic_threshold, after.dynamic_threshold, 1.0,
         before.boundary_exact, after.boundary_exact},
        {"closure_time", "vent_conductance", cal.closure_time, before.closure_time, after.closure_time,
         cal.closure_time_tolerance, closure_met(p, before.closure_time), closure_met(p, after.closure_time)},
    };
    report.profile = std::move(p);

    std::string unmet;
    for (const auto& r : report.residuals) {
        if (!r.met_after) unmet += (unmet.empty() ? "" : ", ") + r.target;
    }
    if (!unmet.empty()) {
        std::string message = "calibration targets not met: " + unmet;
        for (const auto& problem : bound_problems) message += "; " + problem;
        if (report.iterations_used >= max_iterations.value_or(cal.max_iterations)) {
            message += "; iteration budget exhausted";
        }
        throw CalibrationInfeasible(message, std::move(report));
    }
    return report;
}

std::string CalibrationReport::format() const {
    std::ostringstream out;
    out << std::left << std::setw(18) << "target" << std::setw(18) << "parameter" << std::setw(12) << "goal"
        << std::setw(24) << "before" << std::setw(24) << "after" << std::setw(24) << "residual"
        << "met\n";
    for (const auto& r : residuals) {
        out << std::left << std::setw(18) << r.target << std::setw(18) << r.parameter << std::setw(12)
            << detail::format_number(r.goal) << ' ' << std::setw(23) << detail::format_number(r.before) << ' '
            << std::setw(23) << detail::format_number(r.after) << ' ' << std::setw(23)
            << detail::format_number(r.after - r.goal) << (r.met_after ? "yes" : "no") << '\n';
    }
    out << "iterations: " << iterations_used << '\n';
    return out.str();
}

}  // namespace sepm::calibration
