#include "jqfsim/model.hpp"

#include <cmath>
#include <string>

#include "jqfsim/errors.hpp"
#include "jqfsim/units.hpp"

namespace jqfsim {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

Operator number(const Operator& b) { return b.adjoint() * b; }

// Intrinsic loss, thermal excitation and pure dephasing of one mode. The
// dephasing channel is 2 gamma_phi D(n) so that gamma_phi is the decay rate
// of the coherences.
void add_intrinsic(Liouvillian& l, const Operator& b, const TransmonParams& p) {
    if (p.gamma_in > 0.0) {
        l += Complex(p.gamma_in * (1.0 + p.n_th)) * dissipator(b);
        if (p.n_th > 0.0) l += Complex(p.gamma_in * p.n_th) * dissipator(b.adjoint());
    }
    if (p.gamma_phi > 0.0) l += Complex(2.0 * p.gamma_phi) * dissipator(number(b));
}

Operator bare_hamiltonian(const Operator& b, const TransmonParams& p, double omega_d) {
    const Operator bd = b.adjoint();
    Operator h = Complex(p.omega - omega_d) * (bd * b);
    if (p.alpha != 0.0) h += Complex(0.5 * p.alpha) * (bd * bd * b * b);
    return h;
}

// sqrt(gamma ndot) (b^dag + b) and sqrt(gamma ndot) i (b^dag - b).
std::pair<Operator, Operator> drive_quadratures(const Operator& b, double coefficient) {
    const Operator bd = b.adjoint();
    return {Complex(coefficient) * (bd + b), Complex(0.0, coefficient) * (bd - b)};
}

}  // namespace

void TransmonParams::validate(const char* name) const {
    const std::string n(name);
    require(std::isfinite(omega) && omega > 0.0, n + ".omega must be positive");
    require(std::isfinite(alpha) && alpha <= 0.0, n + ".alpha must be <= 0");
    require(std::abs(alpha) < omega, n + ".alpha must be smaller in magnitude than omega");
    require(finite_nonneg(gamma_ex), n + ".gamma_ex must be >= 0");
    require(finite_nonneg(gamma_in), n + ".gamma_in must be >= 0");
    require(finite_nonneg(gamma_phi), n + ".gamma_phi must be >= 0");
    require(finite_nonneg(n_th), n + ".n_th must be >= 0");
    require(levels >= 2, n + ".levels must be >= 2");
}

double WaveguideGeometry::phase(double omega) const { return two_pi * d_frac * omega / omega_ref; }

void ResonatorParams::validate() const {
    require(std::isfinite(omega_r) && omega_r > 0.0, "resonator.omega_r must be positive");
    require(finite_nonneg(kappa_ex), "resonator.kappa_ex must be >= 0");
    require(finite_nonneg(kappa_in), "resonator.kappa_in must be >= 0");
    require(std::isfinite(chi), "resonator.chi must be finite");
}

void DeviceModel::validate() const {
    qubit.validate("qubit");
    if (jqf) jqf->validate("jqf");
    if (jqf) {
        require(std::isfinite(geometry.d_frac) && geometry.d_frac > 0.0, "geometry.d_frac must be positive");
        require(std::isfinite(geometry.omega_ref) && geometry.omega_ref > 0.0,
                "geometry.omega_ref must be positive");
    }
    if (resonator) resonator->validate();
}

std::vector<int> DeviceModel::dims() const {
    if (jqf) return {qubit.levels, jqf->levels};
    return {qubit.levels};
}

Eigen::Index DeviceModel::dimension() const {
    return static_cast<Eigen::Index>(qubit.levels) * (jqf ? jqf->levels : 1);
}

CouplingRates coupling_rates(const TransmonParams& qubit, const TransmonParams& jqf,
                             const WaveguideGeometry& geometry) {
    const double th_q = geometry.phase(qubit.omega);
    const double th_f = geometry.phase(jqf.omega);
    const double g = std::sqrt(qubit.gamma_ex * jqf.gamma_ex);
    const Complex ef = std::exp(I * th_f);
    const Complex eq = std::exp(-I * th_q);

    CouplingRates r;
    r.J = 0.5 * g * (ef - eq) / (2.0 * I);
    r.gamma_qq = qubit.gamma_ex;
    r.gamma_ff = jqf.gamma_ex * std::cos(th_f) * std::cos(th_f);
    r.gamma_qf = 0.5 * g * (ef + eq);
    // Off resonance the frequency-mixed phases leave the decay matrix slightly
    // indefinite, so the eigenvalues are reported without the PSD check.
    const double a = r.gamma_qq, d = r.gamma_ff;
    const double root = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(r.gamma_qf));
    r.gamma_bright = 0.5 * (a + d) + root;
    r.gamma_dark = r.gamma_bright > 0.0 ? (a * d - std::norm(r.gamma_qf)) / r.gamma_bright : 0.0;
    return r;
}

BrightDarkModes bright_dark_modes(const CouplingRates& rates) {
    const double a = rates.gamma_qq;
    const double d = rates.gamma_ff;
    const double c2 = std::norm(rates.gamma_qf);
    const double scale = std::max({a, d, 1e-300});
    if (a < 0.0 || d < 0.0 || c2 > a * d + 1e-9 * scale * scale) {
        throw InvalidArgument("bright_dark_modes: decay matrix is not positive semidefinite");
    }
    const double mean = 0.5 * (a + d);
    const double half = 0.5 * (a - d);
    const double root = std::sqrt(half * half + c2);

    BrightDarkModes m;
    m.gamma_bright = mean + root;
    // Cancellation-free smaller eigenvalue: product of eigenvalues is det.
    const double det = std::max(a * d - c2, 0.0);
    m.gamma_dark = m.gamma_bright > 0.0 ? det / m.gamma_bright : 0.0;

    if (root <= 1e-14 * scale) {
        m.degenerate = true;
        m.bright = Eigen::Vector2cd(1.0, 0.0);
        m.dark = Eigen::Vector2cd(0.0, 1.0);
        return m;
    }
    // Eigenvectors of [[g_qq, g_qf*], [g_qf, g_ff]]; b_mode = u_q b_q + u_f b_f.
    auto mode = [&](double lambda) {
        Eigen::Vector2cd u(lambda - d, rates.gamma_qf);
        if (u.norm() < 1e-12 * scale) u = Eigen::Vector2cd(std::conj(rates.gamma_qf), lambda - a);
        return Eigen::Vector2cd(u / u.norm());
    };
    m.bright = mode(m.gamma_bright);
    m.dark = mode(m.gamma_dark);
    return m;
}

Operator qubit_lowering(const DeviceModel& device) {
    const auto dims = device.dims();
    return embed(annihilation(device.qubit.levels), 0, dims);
}

Operator jqf_lowering(const DeviceModel& device) {
    if (!device.jqf) throw InvalidArgument("jqf_lowering: device has no JQF");
    const auto dims = device.dims();
    return embed(annihilation(device.jqf->levels), 1, dims);
}

Operator system_hamiltonian(const DeviceModel& device, double omega_d) {
    Operator h = bare_hamiltonian(qubit_lowering(device), device.qubit, omega_d);
    if (device.jqf) h += bare_hamiltonian(jqf_lowering(device), *device.jqf, omega_d);
    return h;
}

Operator drive_hamiltonian(const DeviceModel& device, const DriveParams& drive) {
    if (!(drive.photon_flux >= 0.0)) throw InvalidArgument("drive_hamiltonian: photon_flux must be >= 0");
    const Complex e = std::exp(I * drive.phase);
    const Operator bq = qubit_lowering(device);
    const double cq = std::sqrt(device.qubit.gamma_ex * drive.photon_flux);
    Operator h = Complex(cq) * (e * bq.adjoint() + std::conj(e) * bq);
    if (device.jqf) {
        const Operator bf = jqf_lowering(device);
        const double cf =
            std::sqrt(device.jqf->gamma_ex * drive.photon_flux) * std::cos(device.geometry.phase(drive.omega_d));
        h += Complex(cf) * (e * bf.adjoint() + std::conj(e) * bf);
    }
    return h;
}

Operator effective_coupling_hamiltonian(const DeviceModel& device) {
    if (!device.jqf) return Operator::zero(device.dims());
    const CouplingRates r = coupling_rates(device.qubit, *device.jqf, device.geometry);
    const Operator bq = qubit_lowering(device);
    const Operator bf = jqf_lowering(device);
    return r.J * (bq.adjoint() * bf) + std::conj(r.J) * (bf.adjoint() * bq);
}

Liouvillian LiouvillianParts::at(double amplitude, double phase) const {
    Liouvillian l = base;
    if (amplitude != 0.0) {
        const double c = amplitude * std::cos(phase);
        const double s = amplitude * std::sin(phase);
        if (c != 0.0) l.data += c * x.data;
        if (s != 0.0) l.data += s * y.data;
    }
    return l;
}

LiouvillianParts full_liouvillian_parts(const DeviceModel& device, double omega_d, double photon_flux) {
    device.validate();
    if (!(photon_flux >= 0.0)) throw InvalidArgument("photon_flux must be >= 0");
    if (!device.jqf) {
        return transmon_liouvillian_parts(device.qubit, 1.0, omega_d, photon_flux);
    }
    const TransmonParams& q = device.qubit;
    const TransmonParams& f = *device.jqf;
    const Operator bq = qubit_lowering(device);
    const Operator bf = jqf_lowering(device);
    const CouplingRates r = coupling_rates(q, f, device.geometry);

    Operator h = system_hamiltonian(device, omega_d);
    h += r.J * (bq.adjoint() * bf) + std::conj(r.J) * (bf.adjoint() * bq);

    LiouvillianParts parts;
    parts.base = commutator_superop(h);
    if (r.gamma_qq > 0.0) parts.base += Complex(r.gamma_qq) * dissipator(bq);
    if (r.gamma_ff > 0.0) parts.base += Complex(r.gamma_ff) * dissipator(bf);
    if (std::abs(r.gamma_qf) > 0.0) {
        parts.base += r.gamma_qf * dissipator_matrix(bq, bf);
        parts.base += std::conj(r.gamma_qf) * dissipator_matrix(bf, bq);
    }
    add_intrinsic(parts.base, bq, q);
    add_intrinsic(parts.base, bf, f);

    const double cq = std::sqrt(q.gamma_ex * photon_flux);
    const double cf = std::sqrt(f.gamma_ex * photon_flux) * std::cos(device.geometry.phase(omega_d));
    auto [qx, qy] = drive_quadratures(bq, cq);
    auto [fx, fy] = drive_quadratures(bf, cf);
    parts.x = commutator_superop(qx + fx);
    parts.y = commutator_superop(qy + fy);
    return parts;
}

Liouvillian full_liouvillian(const DeviceModel& device, const DriveParams& drive) {
    return full_liouvillian_parts(device, drive.omega_d, drive.photon_flux).at(1.0, drive.phase);
}

LiouvillianParts transmon_liouvillian_parts(const TransmonParams& t, double cos_factor, double omega_d,
                                            double photon_flux) {
    t.validate();
    if (!(photon_flux >= 0.0)) throw InvalidArgument("photon_flux must be >= 0");
    const Operator b = annihilation(t.levels);
    LiouvillianParts parts;
    parts.base = commutator_superop(bare_hamiltonian(b, t, omega_d));
    const double g = t.gamma_ex * cos_factor * cos_factor;
    if (g > 0.0) parts.base += Complex(g) * dissipator(b);
    add_intrinsic(parts.base, b, t);
    auto [hx, hy] = drive_quadratures(b, std::sqrt(t.gamma_ex * photon_flux) * cos_factor);
    parts.x = commutator_superop(hx);
    parts.y = commutator_superop(hy);
    return parts;
}

LiouvillianParts two_level_approx_parts(const DeviceModel& device, double omega_d, double photon_flux) {
    device.validate();
    if (!device.jqf) throw InvalidArgument("two_level_approx: device has no JQF");
    const TransmonParams& q = device.qubit;
    const TransmonParams& f = *device.jqf;
    if (std::abs(f.omega - q.omega) > 1e-12 * q.omega || std::abs(device.geometry.d_frac - 0.5) > 1e-12 ||
        std::abs(device.geometry.omega_ref - q.omega) > 1e-12 * q.omega) {
        throw InvalidArgument("two_level_approx: requires omega_f = omega_q and d = lambda_q / 2");
    }
    if (!(photon_flux >= 0.0)) throw InvalidArgument("photon_flux must be >= 0");

    const std::vector<int> dims{2, 2};
    const Operator sm = annihilation(2);
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0) = -1.0;
    z(1, 1) = 1.0;
    const Operator one_plus_z_f = embed(Operator({2}, Matrix::Identity(2, 2) + z), 1, dims);
    const Operator sq = embed(sm, 0, dims);
    const Operator sf = embed(sm, 1, dims);

    TransmonParams q2 = q, f2 = f;
    q2.alpha = f2.alpha = 0.0;
    Operator h = Complex(q.omega - omega_d) * (sq.adjoint() * sq) + Complex(f.omega - omega_d) * (sf.adjoint() * sf);

    const Operator c = Complex(std::sqrt(f.gamma_ex)) * sf - Complex(std::sqrt(q.gamma_ex)) * (one_plus_z_f * sq);

    LiouvillianParts parts;
    parts.base = commutator_superop(h);
    parts.base += dissipator(c);
    add_intrinsic(parts.base, sq, q2);
    add_intrinsic(parts.base, sf, f2);

    // -(Omega_f/2) sigma_x^f + (Omega_q/2)(1 + sigma_z^f) sigma_x^q with Omega = 2 sqrt(gamma ndot).
    const double half_wq = std::sqrt(q.gamma_ex * photon_flux);
    const double half_wf = std::sqrt(f.gamma_ex * photon_flux);
    auto [fx, fy] = drive_quadratures(sf, -half_wf);
    auto [qx, qy] = drive_quadratures(sq, half_wq);
    parts.x = commutator_superop(fx + one_plus_z_f * qx);
    parts.y = commutator_superop(fy + one_plus_z_f * qy);
    return parts;
}

Liouvillian two_level_approx_liouvillian(const DeviceModel& device, const DriveParams& drive) {
    return two_level_approx_parts(device, drive.omega_d, drive.photon_flux).at(1.0, drive.phase);
}

}  // namespace jqfsim
