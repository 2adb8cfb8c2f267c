#pragma once

// =============================================================================
// Lumped magnetic circuit of a switchable-polarity electropermanent magnet.
//
// The circuit balances the flux produced by the magnet stack (Alnico core plus
// the state-dependent NdFeB contribution) against the flux carried by the two
// working gaps and the leakage path:
//
//   (pi d^2 / 12) N_rods (B_alnico(H_m) + dBr + 2 mu0 H_m)
//       = (mu0 a b / (2 g) + P_leak) (N I - H_m l)
//
// The gap flux density follows from Ampere's law around the loop,
// B_g = mu0 (N I - H_m l) / (2 g), and the pull across both pole faces is
// F = mu0 a b ((N I - H_m l) / (2 g))^2.
// =============================================================================

#include "sepm/types.hpp"

#include <numbers>

namespace sepm::magnetics {

inline constexpr double kVacuumPermeability = 4.0e-7 * std::numbers::pi;  // T*m/A

struct CircuitGeometry {
    double rod_diameter = 5.0e-3;       // m
    int rod_count = 3;
    double pole_width = 20.0e-3;        // m
    double pole_thickness = 10.0e-3;    // m
    double gap = 0.1e-3;                // m, per working gap
    double path_length = 15.0e-3;       // m
    double leakage_permeance = 0.0;     // Wb/A

    void validate() const;

    /// (pi d^2 / 12) * N_rods, the effective magnet cross-section.
    [[nodiscard]] double magnet_area() const noexcept;
    /// mu0 a b / (2 g), the series permeance of the two working gaps.
    [[nodiscard]] double gap_permeance() const noexcept;
    [[nodiscard]] double pole_area() const noexcept { return pole_width * pole_thickness; }
};

struct MagnetSpec {
    double ndfeb_remanence = 1.2;        // T
    double alnico_remanence = 1.25;      // T
    double alnico_coercivity = 48.0e3;   // A/m
    double alnico_field_scale = 12.0e3;  // A/m, width of the tanh branch
    double mu_0 = kVacuumPermeability;
    int coil_turns = 150;
    double coil_resistance = 3.0;        // ohm
    double coil_inductance = 0.0;        // H

    void validate() const;
};

struct SepmState {
    Polarity alnico_sign = Polarity::positive;
    double h_m = 0.0;  // A/m
    double b_g = 0.0;  // T

    friend bool operator==(const SepmState&, const SepmState&) = default;
};

struct Pulse {
    double voltage = 48.0;    // V
    double duration = 1.0e-3; // s
    Polarity polarity = Polarity::positive;

    void validate() const;
};

struct SolverOptions {
    int max_iterations = 200;
    double residual_tolerance = 1.0e-9;  // Wb
};

/// Geometry, materials and solver settings of one actuator.
struct Actuator {
    CircuitGeometry geometry;
    MagnetSpec magnet;
    SolverOptions solver;
};

/// Alnico flux density on the branch selected by `alnico_sign`.
/// Normalised so B(0, s) = s * B_r and B(-s * H_c, s) = 0.
[[nodiscard]] double hysteron_b(double h_m, Polarity alnico_sign, const MagnetSpec& spec) noexcept;

/// dB/dH of `hysteron_b`.
[[nodiscard]] double hysteron_slope(double h_m, Polarity alnico_sign, const MagnetSpec& spec) noexcept;

/// Saturation magnitude of the branch curve, the bound |B| < B_sat.
[[nodiscard]] double hysteron_saturation(const MagnetSpec& spec) noexcept;

/// State-dependent NdFeB contribution, 2 * s_A * B_r.
[[nodiscard]] double delta_br(Polarity alnico_sign, const MagnetSpec& spec) noexcept;

/// Flux-balance residual (magnet side minus gap/leakage side), in Wb.
[[nodiscard]] double flux_balance_residual(const CircuitGeometry& geom, const MagnetSpec& spec,
                                           double current, Polarity alnico_sign, double h_m) noexcept;

[[nodiscard]] double gap_flux_density(const CircuitGeometry& geom, const MagnetSpec& spec,
                                      double current, double h_m) noexcept;

/// Solve the flux balance for H_m. The residual is strictly increasing in H_m,
/// so the root is unique on each branch. Throws NoConvergence.
[[nodiscard]] SepmState solve_flux_balance(const CircuitGeometry& geom, const MagnetSpec& spec,
                                           double current, Polarity alnico_sign,
                                           const SolverOptions& options = {});

[[nodiscard]] double gap_force(const CircuitGeometry& geom, const MagnetSpec& spec,
                               double current, double h_m) noexcept;

/// Coil current of the series R-L drive at time t into the pulse.
[[nodiscard]] double coil_current(const Pulse& pulse, const MagnetSpec& spec, double t) noexcept;

/// Electrical energy delivered by the drive over the pulse, integral of V*I dt.
[[nodiscard]] double pulse_energy(const Pulse& pulse, const MagnetSpec& spec);

struct PulseOutcome {
    SepmState state;
    double energy = 0.0;  // J
};

/// Switch the Alnico to `pulse.polarity` and re-solve the remanent operating
/// point at zero current. Energy is spent even when the sign is unchanged.
[[nodiscard]] PulseOutcome apply_pulse(const SepmState& state, const Pulse& pulse,
                                       const CircuitGeometry& geom, const MagnetSpec& spec,
                                       const SolverOptions& options = {});

}  // namespace sepm::magnetics
