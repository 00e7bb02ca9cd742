#include "jqfsim/spectra.hpp"

#include <cmath>

#include "jqfsim/dynamics.hpp"
#include "jqfsim/errors.hpp"
#include "jqfsim/units.hpp"

namespace jqfsim {

void ComplexTrace::validate() const {
    if (frequencies.size() != values.size()) throw InvalidArgument("ComplexTrace: length mismatch");
    for (std::size_t k = 1; k < frequencies.size(); ++k) {
        if (!(frequencies[k] > frequencies[k - 1])) {
            throw InvalidArgument("ComplexTrace: frequencies must be strictly increasing");
        }
    }
}

double site_factor(const WaveguideGeometry& geometry, Site site, double omega) {
    return site == Site::open_end ? 1.0 : std::cos(geometry.phase(omega));
}

Complex reflection_numeric(const TransmonParams& transmon, double cos_factor, double omega_probe,
                           double photon_flux) {
    if (!(photon_flux > 0.0)) throw InvalidArgument("reflection_numeric: photon_flux must be positive");
    const LiouvillianParts parts = transmon_liouvillian_parts(transmon, cos_factor, omega_probe, photon_flux);
    const DensityMatrix rho = steady_state(parts.at(1.0, 0.0), {transmon.levels});
    const Complex b = expectation(rho, annihilation(transmon.levels));
    return 1.0 - I * std::sqrt(transmon.gamma_ex / photon_flux) * cos_factor * b;
}

Complex reflection_numeric(const TransmonParams& transmon, const WaveguideGeometry& geometry, Site site,
                           double omega_probe, double photon_flux) {
    return reflection_numeric(transmon, site_factor(geometry, site, transmon.omega), omega_probe, photon_flux);
}

Complex reflection_device(const DeviceModel& device, double omega_probe, double photon_flux) {
    if (!(photon_flux > 0.0)) throw InvalidArgument("reflection_device: photon_flux must be positive");
    const DriveParams drive{omega_probe, photon_flux, 0.0};
    const DensityMatrix rho = steady_state(full_liouvillian(device, drive), device.dims());
    Complex field = std::sqrt(device.qubit.gamma_ex) * expectation(rho, qubit_lowering(device));
    if (device.jqf) {
        field += std::sqrt(device.jqf->gamma_ex) * std::cos(device.geometry.phase(omega_probe)) *
                 expectation(rho, jqf_lowering(device));
    }
    return 1.0 - I * field / std::sqrt(photon_flux);
}

TwoLevelRates two_level_rates(const TransmonParams& p) {
    TwoLevelRates r;
    r.gamma_1 = p.gamma_ex + (2.0 * p.n_th + 1.0) * p.gamma_in;
    r.gamma_2 = 0.5 * r.gamma_1 + p.gamma_phi;
    const double radiative = p.gamma_ex + p.gamma_in;
    r.n_eff = radiative > 0.0 ? p.gamma_in * p.n_th / radiative : 0.0;
    r.gamma_eff = p.gamma_ex / (2.0 * r.n_eff + 1.0);
    return r;
}

Complex reflection_qubit_analytic(const TransmonParams& params, double omega_probe, double photon_flux) {
    const TwoLevelRates r = two_level_rates(params);
    if (!(r.gamma_2 > 0.0)) throw InvalidArgument("reflection_qubit_analytic: gamma_2 must be positive");
    const double x = (omega_probe - params.omega) / r.gamma_2;
    const double sat = 4.0 * params.gamma_ex * photon_flux / (r.gamma_1 * r.gamma_2);
    return 1.0 - params.gamma_ex / ((2.0 * r.n_eff + 1.0) * r.gamma_2) * Complex(1.0, x) / (1.0 + x * x + sat);
}

Complex reflection_qubit_weak(double omega_q, double gamma_eff, double gamma_2, double omega_probe) {
    return 1.0 - gamma_eff / Complex(gamma_2, -(omega_probe - omega_q));
}

Complex resonator_line(double kappa_ex, double kappa_in, double omega_0, double omega_probe) {
    const double delta = omega_probe - omega_0;
    return -Complex(0.5 * (kappa_ex - kappa_in), delta) / Complex(0.5 * (kappa_ex + kappa_in), -delta);
}

Complex resonator_reflection(const ResonatorParams& res, double p_th, double omega_probe) {
    if (!(p_th >= 0.0 && p_th <= 1.0)) throw InvalidArgument("resonator_reflection: p_th must lie in [0, 1]");
    return (1.0 - p_th) * resonator_line(res.kappa_ex, res.kappa_in, res.omega_r + res.chi, omega_probe) +
           p_th * resonator_line(res.kappa_ex, res.kappa_in, res.omega_r - res.chi, omega_probe);
}

double photon_flux_from_dbm(double power_dbm, double omega) {
    if (!(omega > 0.0)) throw InvalidArgument("photon_flux_from_dbm: omega must be positive");
    return 1e-3 * std::pow(10.0, power_dbm / 10.0) / (hbar * omega);
}

double dbm_from_photon_flux(double photon_flux, double omega) {
    if (!(omega > 0.0) || !(photon_flux > 0.0)) {
        throw InvalidArgument("dbm_from_photon_flux: omega and photon_flux must be positive");
    }
    return 10.0 * std::log10(photon_flux * hbar * omega / 1e-3);
}

double single_photon_power_dbm(double omega, double gamma_ex, double gamma_in) {
    if (!(gamma_ex > 0.0)) throw InvalidArgument("single_photon_power_dbm: gamma_ex must be positive");
    const double total = gamma_ex + gamma_in;
    const double watts = hbar * omega * total * total / (4.0 * gamma_ex);
    return 10.0 * std::log10(watts / 1e-3);
}

double effective_rate_correction(double p_th, double gamma_eff) {
    if (!(p_th >= 0.0 && p_th < 0.5)) throw InvalidArgument("effective_rate_correction: p_th must lie in [0, 0.5)");
    const double n_eff = p_th / (1.0 - 2.0 * p_th);
    return (2.0 * n_eff + 1.0) * gamma_eff;
}

}  // namespace jqfsim
