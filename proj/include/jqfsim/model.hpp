#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "jqfsim/linalg.hpp"

namespace jqfsim {

/// One transmon. Frequencies and rates are angular (rad/s).
struct TransmonParams {
    double omega = 0.0;
    double alpha = 0.0;
    double gamma_ex = 0.0;
    double gamma_in = 0.0;
    double gamma_phi = 0.0;
    double n_th = 0.0;
    int levels = 3;

    void validate(const char* name = "transmon") const;
};

/// Qubit sits at the open end of the line (r_q = 0); the JQF sits at distance
/// d = d_frac * lambda_q from it. omega_ref is the qubit frequency that defines
/// lambda_q.
struct WaveguideGeometry {
    double d_frac = 0.5;
    double omega_ref = 0.0;

    /// Propagation phase omega * d with v = 1.
    double phase(double omega) const;
};

struct ResonatorParams {
    double omega_r = 0.0;
    double kappa_ex = 0.0;
    double kappa_in = 0.0;
    double chi = 0.0;  // signed; ground-state resonance at omega_r + chi

    void validate() const;
};

struct DeviceModel {
    TransmonParams qubit;
    std::optional<TransmonParams> jqf;
    WaveguideGeometry geometry;
    std::optional<ResonatorParams> resonator;

    void validate() const;
    std::vector<int> dims() const;
    Eigen::Index dimension() const;
    bool has_jqf() const noexcept { return jqf.has_value(); }
};

struct DriveParams {
    double omega_d = 0.0;      // rotating-frame / drive frequency
    double photon_flux = 0.0;  // photons per second
    double phase = 0.0;        // rad
};

struct CouplingRates {
    Complex J;
    double gamma_qq = 0.0;
    double gamma_ff = 0.0;
    Complex gamma_qf;
    double gamma_bright = 0.0;
    double gamma_dark = 0.0;
};

struct BrightDarkModes {
    // Coefficients on (b_q, b_f).
    Eigen::Vector2cd bright;
    Eigen::Vector2cd dark;
    double gamma_bright = 0.0;
    double gamma_dark = 0.0;
    bool degenerate = false;
};

CouplingRates coupling_rates(const TransmonParams& qubit, const TransmonParams& jqf,
                             const WaveguideGeometry& geometry);
BrightDarkModes bright_dark_modes(const CouplingRates& rates);

// Lowering operators embedded in the device space.
Operator qubit_lowering(const DeviceModel& device);
Operator jqf_lowering(const DeviceModel& device);

Operator system_hamiltonian(const DeviceModel& device, double omega_d);
Operator drive_hamiltonian(const DeviceModel& device, const DriveParams& drive);
Operator effective_coupling_hamiltonian(const DeviceModel& device);

/// A Liouvillian that is affine in a complex drive amplitude s e^{i phi}:
///   L(s, phi) = base + s cos(phi) x + s sin(phi) y.
/// Pulse schedules only rescale the drive, so dynamics builds these once.
struct LiouvillianParts {
    Liouvillian base;
    Liouvillian x;
    Liouvillian y;

    Liouvillian at(double amplitude, double phase) const;
};

LiouvillianParts full_liouvillian_parts(const DeviceModel& device, double omega_d, double photon_flux);
Liouvillian full_liouvillian(const DeviceModel& device, const DriveParams& drive);

/// Single transmon driven through a port whose standing-wave factor is
/// cos_factor (1 at the open end).
LiouvillianParts transmon_liouvillian_parts(const TransmonParams& t, double cos_factor, double omega_d,
                                            double photon_flux);

/// Two-level model in which the qubit decays only through the excited JQF.
/// Valid only for the ideal geometry (omega_f = omega_q, d = lambda_q / 2).
LiouvillianParts two_level_approx_parts(const DeviceModel& device, double omega_d, double photon_flux);
Liouvillian two_level_approx_liouvillian(const DeviceModel& device, const DriveParams& drive);

}  // namespace jqfsim
