#pragma once

// Fits the free parameters of a profile to the published bench figures:
// coil inductance to the pulse energy, bar contact length to the static
// holding limit, tube collapse force to the single-pulse closing boundary and
// vent conductance to the outlet closure time.

#include "sepm/errors.hpp"
#include "sepm/profile.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sepm::calibration {

struct Measurements {
    double pulse_energy = 0.0;       // J
    double dynamic_threshold = 0.0;  // Pa, analytic single-pulse limit
    bool boundary_exact = false;     // target closes in one pulse, target + 1 Pa does not
    double static_limit = 0.0;       // Pa
    double closure_time = 0.0;       // s; NaN when the outlet never settles
};

[[nodiscard]] Measurements measure(const profile::Profile& profile);

/// Command-to-settle time of the single-valve rig for an open-to-closed pulse.
[[nodiscard]] double closure_time(const profile::Profile& profile);

/// True when one closing pulse seals against `line_pressure`.
[[nodiscard]] bool single_pulse_closes(const profile::Profile& profile, double line_pressure);

struct Residual {
    std::string target;
    std::string parameter;
    double goal = 0.0;
    double before = 0.0;
    double after = 0.0;
    double tolerance = 0.0;
    bool met_before = false;
    bool met_after = false;
};

struct CalibrationReport {
    profile::Profile profile;
    std::vector<Residual> residuals;
    int iterations_used = 0;

    [[nodiscard]] bool changed(const profile::Profile& original) const { return !(profile == original); }
    [[nodiscard]] std::string format() const;
};

class CalibrationInfeasible : public Error {
public:
    CalibrationInfeasible(const std::string& message, CalibrationReport report)
        : Error(ErrorCode::calibration_infeasible, message), report_(std::move(report)) {}
    [[nodiscard]] const CalibrationReport& report() const noexcept { return report_; }

private:
    CalibrationReport report_;
};

/// Targets already met are left untouched, so a calibrated profile is a
/// fixed point. Throws CalibrationInfeasible listing unmet targets when the
/// iteration budget or the parameter bounds do not allow a fit.
[[nodiscard]] CalibrationReport calibrate(const profile::Profile& profile,
                                          std::optional<int> max_iterations = std::nullopt);

}  // namespace sepm::calibration
