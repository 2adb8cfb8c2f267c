#pragma once

// Named parameter profile: actuator, tube, valve, rig and integration
// settings plus the calibration targets and free-parameter bounds.
// Stored as YAML; see README.md for the schema.

#include "sepm/magnetics.hpp"
#include "sepm/pneumatics.hpp"
#include "sepm/valve.hpp"

#include <filesystem>
#include <string>

namespace sepm::profile {

/// Lumped plumbing of the bench rig around the valves.
struct RigParams {
    double supply_pressure = 100.0e3;   // Pa gauge
    double line_conductance = 2.1e-8;   // supply line, (m^3/s)/Pa
    double line_inertance = 2.0e5;      // supply line, Pa*s^2/m^3
    double inlet_volume = 5.0e-6;       // m^3, upstream sensor volume
    double outlet_volume = 2.0e-6;      // m^3, downstream sensor volume
    double junction_volume = 0.5e-6;    // m^3, internal channel volume
    double vent_conductance = 8.7e-10;  // (m^3/s)/Pa, outlet vent resistor

    void validate() const;
    friend bool operator==(const RigParams&, const RigParams&) = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct CalibrationTargets {
    double pulse_energy = 0.6;            // J
    double dynamic_threshold = 320.0e3;   // Pa, last single-pulse success
    double static_limit = 550.0e3;        // Pa, holding limit of a sealed tube
    double closure_time = 0.115;          // s, command to outlet below 5 % of supply

    double pulse_energy_tolerance = 1.0e-6;   // J
    double static_limit_tolerance = 1.0e3;    // Pa
    double closure_time_tolerance = 1.0e-3;   // s
    double closure_fraction = 0.05;           // of supply pressure

    Interval coil_inductance{1.0e-5, 1.0e-2};     // H
    Interval contact_length{1.0e-3, 30.0e-3};     // m
    Interval collapse_force{0.0, 50.0};           // N
    Interval vent_conductance{1.0e-11, 1.0e-8};   // (m^3/s)/Pa

    int max_iterations = 200;

    friend bool operator==(const CalibrationTargets&, const CalibrationTargets&) = default;
};

struct Profile {
    std::string name = "uncalibrated";
    magnetics::Actuator actuator;
    valve::TubeSpec tube;
    valve::ValveConfig valve;
    RigParams rig;
    pneumatics::IntegrationOptions integration;
    CalibrationTargets calibration;

    void validate() const;
};

[[nodiscard]] bool operator==(const Profile& a, const Profile& b);

/// Throws ParseError with file:line context.
[[nodiscard]] Profile load_profile(const std::filesystem::path& path);
[[nodiscard]] Profile parse_profile(const std::string& text, const std::string& source = "<profile>");
[[nodiscard]] std::string serialize_profile(const Profile& profile);
void save_profile(const Profile& profile, const std::filesystem::path& path);

/// SEPM_DATA_DIR, else the source tree the library was built from.
[[nodiscard]] std::filesystem::path data_dir();

/// SEPM_PROFILE, else <data_dir>/profiles/calibrated_default.yaml.
[[nodiscard]] std::filesystem::path default_profile_path();

/// A bare name resolves to <data_dir>/profiles/<name>.yaml; anything with a
/// path separator or .yaml suffix is taken relative to `base`.
[[nodiscard]] std::filesystem::path resolve_profile(const std::string& reference,
                                                    const std::filesystem::path& base);

/// A valve built from the profile in the given logical state.
[[nodiscard]] valve::Valve make_valve(const Profile& profile, const std::string& id, Polarity state);

/// Shortest round-tripping decimal form.
[[nodiscard]] std::string format_number(double value);

}  // namespace sepm::profile
