#pragma once

#include <vector>

#include "jqfsim/linalg.hpp"
#include "jqfsim/model.hpp"

namespace jqfsim {

struct ComplexTrace {
    std::vector<double> frequencies;  // rad/s
    std::vector<Complex> values;

    void validate() const;
};

/// Where a transmon sits on the line: the qubit at the open end, the JQF at d.
enum class Site { open_end, jqf_position };

/// Standing-wave factor cos(omega r) for a transmon at `site`.
double site_factor(const WaveguideGeometry& geometry, Site site, double omega);

/// S11 of a single driven transmon from the steady state of its master
/// equation. The drive coefficient is held at the transmon's own frequency.
Complex reflection_numeric(const TransmonParams& transmon, const WaveguideGeometry& geometry, Site site,
                           double omega_probe, double photon_flux);
Complex reflection_numeric(const TransmonParams& transmon, double cos_factor, double omega_probe,
                           double photon_flux);

/// S11 of the whole device (qubit and JQF radiate into the same port).
Complex reflection_device(const DeviceModel& device, double omega_probe, double photon_flux);

/// Closed-form two-level reflection including saturation and thermal
/// population of the intrinsic bath.
Complex reflection_qubit_analytic(const TransmonParams& params, double omega_probe, double photon_flux);
/// Weak-probe limit 1 - gamma_eff / (gamma_2 - i delta).
Complex reflection_qubit_weak(double omega_q, double gamma_eff, double gamma_2, double omega_probe);

struct TwoLevelRates {
    double gamma_1 = 0.0;
    double gamma_2 = 0.0;
    double n_eff = 0.0;
    double gamma_eff = 0.0;
};
TwoLevelRates two_level_rates(const TransmonParams& params);

/// Single resonator line shape centred at omega_0.
Complex resonator_line(double kappa_ex, double kappa_in, double omega_0, double omega_probe);
/// Thermally mixed dispersive resonator: ground-state resonance at omega_r + chi.
Complex resonator_reflection(const ResonatorParams& res, double p_th, double omega_probe);

double photon_flux_from_dbm(double power_dbm, double omega);
double dbm_from_photon_flux(double photon_flux, double omega);
double single_photon_power_dbm(double omega, double gamma_ex, double gamma_in);

/// gamma_ex = (2 n_eff + 1) gamma_eff with n_eff = p / (1 - 2p).
double effective_rate_correction(double p_th, double gamma_eff);

}  // namespace jqfsim
