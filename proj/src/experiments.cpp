#include "jqfsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "jqfsim/clifford.hpp"
#include "jqfsim/errors.hpp"
#include "jqfsim/units.hpp"

namespace jqfsim {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void require_delays(const std::vector<double>& t, const char* what) {
    if (t.size() < 6) throw InvalidArgument(std::string(what) + ": need at least 6 delays");
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!(t[k] >= 0.0) || (k > 0 && !(t[k] > t[k - 1]))) {
            throw InvalidArgument(std::string(what) + ": delays must be non-negative and strictly increasing");
        }
    }
}

void require_converged(const FitResult& fit, const char* what) {
    if (!fit.converged) throw FitFailure(std::string(what) + ": fit did not converge (" + fit.message + ")");
}

// Rotation on the qubit's {|0>, |1>} subspace, identity elsewhere.
Matrix qubit_unitary(const DeviceModel& device, const Eigen::Matrix2cd& u2) {
    Matrix uq = Matrix::Identity(device.qubit.levels, device.qubit.levels);
    uq.topLeftCorner(2, 2) = u2;
    const auto dims = device.dims();
    return embed(Operator({device.qubit.levels}, uq), 0, dims).matrix();
}

Matrix unitary_superop(const Matrix& u) { return kron(u.conjugate(), u); }

void apply_unitary(Vector& v, const Matrix& u) {
    const Eigen::Index d = u.rows();
    const Matrix rho = unvec(v, d);
    v = vec(Matrix(u * rho * u.adjoint()));
}

double excitation_of(const DeviceModel& device, const Vector& v) {
    const Eigen::Index nf = device.jqf ? device.jqf->levels : 1;
    const Eigen::Index d = device.dimension();
    double ground = 0.0;
    for (Eigen::Index k = 0; k < nf; ++k) ground += v(k + k * d).real();
    return 1.0 - ground;
}

double level_population(const DeviceModel& device, const Vector& v, int level) {
    const Eigen::Index nf = device.jqf ? device.jqf->levels : 1;
    const Eigen::Index d = device.dimension();
    double p = 0.0;
    for (Eigen::Index k = 0; k < nf; ++k) {
        const Eigen::Index i = level * nf + k;
        p += v(i + i * d).real();
    }
    return p;
}

void check_vector_state(const DeviceModel& device, const Vector& v, double t) {
    const DensityMatrix rho(device.dims(), unvec(v, device.dimension()));
    try {
        rho.check(1e-8, 1e-8, -1e-8);
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string(e.what()) + " at t=" + std::to_string(t), t);
    }
}

// exp(L t) for a fixed drive-free Liouvillian at arbitrary times; uses the
// eigendecomposition when it is well conditioned.
class FreeEvolution {
public:
    explicit FreeEvolution(const Liouvillian& l) : l_(l) {
        try {
            spectral_.emplace(l);
        } catch (const NumericalFailure&) {
            spectral_.reset();
        }
    }
    Vector apply(const Vector& v, double t) const {
        if (t == 0.0) return v;
        if (spectral_) return spectral_->apply(v, t);
        return propagator(l_, t) * v;
    }

private:
    Liouvillian l_;
    std::optional<SpectralPropagator> spectral_;
};

Vector rotated_ground(const DeviceModel& device, const Eigen::Matrix2cd& u) {
    Vector v = vec(qubit_basis_state(device, 0));
    apply_unitary(v, qubit_unitary(device, u));
    return v;
}

double qubit_gamma_1(const TransmonParams& q) { return q.gamma_ex + (2.0 * q.n_th + 1.0) * q.gamma_in; }

// Hamiltonian-only parts: drive coupling kept, every dissipator removed.
LiouvillianParts hamiltonian_parts(const DeviceModel& device, double omega_d, double photon_flux) {
    LiouvillianParts parts;
    parts.base = commutator_superop(system_hamiltonian(device, omega_d) + effective_coupling_hamiltonian(device));
    parts.x = commutator_superop(drive_hamiltonian(device, {omega_d, photon_flux, 0.0}));
    parts.y = commutator_superop(drive_hamiltonian(device, {omega_d, photon_flux, 0.5 * pi}));
    return parts;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return v;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ------------------------------------------------------------ decay curves

DecayResult adaptive_decay(const std::function<DecayResult(const std::vector<double>&)>& run, double guess,
                           std::size_t points) {
    if (!(guess > 0.0)) throw InvalidArgument("adaptive_decay: guess must be positive");
    double window = 5.0 * guess;
    DecayResult r = run(linspace(0.0, window, points));
    for (int pass = 0; pass < 2 && r.time > window / 3.0; ++pass) {
        window = 5.0 * r.time;
        r = run(linspace(0.0, window, points));
    }
    return r;
}

RamseyResult adaptive_ramsey(const DeviceModel& device, double guess, std::size_t points,
                             double artificial_detuning) {
    if (!(guess > 0.0)) throw InvalidArgument("adaptive_ramsey: guess must be positive");
    double window = 5.0 * guess;
    RamseyResult r;
    for (int pass = 0; pass < 3; ++pass) {
        const double art =
            artificial_detuning > 0.0 ? artificial_detuning : std::max(two_pi * 2e6, two_pi * 10.0 / window);
        const auto n = std::max<std::size_t>(points, static_cast<std::size_t>(16.0 * window * art / two_pi) + 1);
        r = ramsey_experiment(device, linspace(0.0, window, n), art);
        if (r.t2_star <= window / 3.0) break;
        window = 5.0 * r.t2_star;
    }
    return r;
}

double coherence_guess(const TransmonParams& q) { return 1.0 / (0.5 * qubit_gamma_1(q) + q.gamma_phi); }
double relaxation_guess(const TransmonParams& q) { return 1.0 / qubit_gamma_1(q); }

DecayResult t1_experiment(const DeviceModel& device, const std::vector<double>& delays) {
    device.validate();
    require_delays(delays, "t1_experiment");
    const FreeEvolution free(full_liouvillian_parts(device, device.qubit.omega, 0.0).base);
    const Vector v0 = vec(qubit_basis_state(device, 1));
    DecayResult r;
    r.curve.x = delays;
    for (double t : delays) {
        const Vector v = free.apply(v0, t);
        check_vector_state(device, v, t);
        r.curve.y.push_back(excitation_of(device, v));
    }
    r.fit = fit_exponential(r.curve.x, r.curve.y);
    require_converged(r.fit, "t1_experiment");
    r.time = r.fit.value("T");
    return r;
}

RamseyResult ramsey_experiment(const DeviceModel& device, const std::vector<double>& delays,
                               double artificial_detuning) {
    device.validate();
    require_delays(delays, "ramsey_experiment");
    if (!(artificial_detuning > 0.0)) throw InvalidArgument("ramsey_experiment: artificial detuning must be positive");
    double max_step = 0.0;
    for (std::size_t k = 1; k < delays.size(); ++k) max_step = std::max(max_step, delays[k] - delays[k - 1]);
    if (max_step > two_pi / artificial_detuning / 8.0) {
        throw SamplingError("ramsey_experiment: delays resolve fewer than 8 points per detuning period");
    }
    const FreeEvolution free(full_liouvillian_parts(device, device.qubit.omega - artificial_detuning, 0.0).base);
    const Matrix half_pi = qubit_unitary(device, rotation(0.5 * pi, 0.0));
    const Vector v0 = rotated_ground(device, rotation(0.5 * pi, 0.0));
    RamseyResult r;
    r.curve.x = delays;
    for (double t : delays) {
        Vector v = free.apply(v0, t);
        check_vector_state(device, v, t);
        apply_unitary(v, half_pi);
        r.curve.y.push_back(excitation_of(device, v));
    }
    r.fit = fit_damped_sinusoid(r.curve.x, r.curve.y);
    require_converged(r.fit, "ramsey_experiment");
    r.t2_star = r.fit.value("T");
    r.freq_shift = r.fit.value("Omega") - artificial_detuning;
    return r;
}

DecayResult echo_experiment(const DeviceModel& device, const std::vector<double>& delays) {
    device.validate();
    require_delays(delays, "echo_experiment");
    const FreeEvolution free(full_liouvillian_parts(device, device.qubit.omega, 0.0).base);
    const Matrix pi_x = qubit_unitary(device, rotation(pi, 0.0));
    const Matrix half_pi = qubit_unitary(device, rotation(0.5 * pi, 0.0));
    const Vector v0 = rotated_ground(device, rotation(0.5 * pi, 0.0));
    DecayResult r;
    r.curve.x = delays;
    for (double t : delays) {
        Vector v = free.apply(v0, 0.5 * t);
        apply_unitary(v, pi_x);
        v = free.apply(v, 0.5 * t);
        check_vector_state(device, v, t);
        apply_unitary(v, half_pi);
        r.curve.y.push_back(excitation_of(device, v));
    }
    r.fit = fit_exponential(r.curve.x, r.curve.y);
    require_converged(r.fit, "echo_experiment");
    r.time = r.fit.value("T");
    return r;
}

// -------------------------------------------------------------------- Rabi

double rabi_upper_bound(double photon_flux, double t1) {
    if (!(t1 > 0.0)) throw InvalidArgument("rabi_upper_bound: T1 must be positive");
    if (!(photon_flux >= 0.0)) throw InvalidArgument("rabi_upper_bound: photon_flux must be >= 0");
    return 2.0 * std::sqrt(photon_flux / t1);
}

std::vector<double> default_rabi_durations(const DeviceModel& device, double photon_flux) {
    const double omega = 2.0 * std::sqrt(device.qubit.gamma_ex * photon_flux);
    if (!(omega > 0.0)) throw InvalidArgument("default_rabi_durations: no drive");
    const double period = two_pi / omega;
    const double gamma = qubit_gamma_1(device.qubit) + 2.0 * device.qubit.gamma_phi;
    const double window = std::min(120.0 * period, std::max(8.0 * period, 10.0 / gamma));
    const auto n = static_cast<std::size_t>(std::max(400.0, std::ceil(16.0 * window / period))) + 1;
    return linspace(0.0, window, n);
}

RabiResult rabi_experiment(const DeviceModel& device, double photon_flux, const std::vector<double>& durations,
                           const RabiOptions& options) {
    device.validate();
    if (!(photon_flux > 0.0)) throw InvalidArgument("rabi_experiment: photon_flux must be positive");
    require_delays(durations, "rabi_experiment");
    const double expected = 2.0 * std::sqrt(device.qubit.gamma_ex * photon_flux);
    double max_step = 0.0;
    for (std::size_t k = 1; k < durations.size(); ++k) max_step = std::max(max_step, durations[k] - durations[k - 1]);
    if (max_step > two_pi / expected / 8.0) {
        throw SamplingError("rabi_experiment: durations resolve fewer than 8 points per Rabi period");
    }

    const double omega_d = device.qubit.omega;
    LiouvillianParts parts = options.approximative ? two_level_approx_parts(device, omega_d, photon_flux)
                                                   : full_liouvillian_parts(device, omega_d, photon_flux);
    DeviceModel layout = device;
    if (options.approximative) {
        layout.qubit.levels = 2;
        layout.jqf->levels = 2;
    }
    Evolver evolver(std::move(parts));

    PulseSchedule rise, fall;
    rise.sample_dt = fall.sample_dt = options.sample_dt;
    if (options.edge_sigma > 0.0) {
        PulseSchedule edges;
        edges.sample_dt = options.sample_dt;
        edges.append_flat_top(0.0, options.edge_sigma, 1.0, 0.0, options.quantization);
        const std::size_t half = edges.segments.size() / 2;
        rise.segments.assign(edges.segments.begin(), edges.segments.begin() + static_cast<std::ptrdiff_t>(half));
        fall.segments.assign(edges.segments.begin() + static_cast<std::ptrdiff_t>(half), edges.segments.end());
    }

    Vector v = vec(qubit_basis_state(layout, 0));
    evolver.apply(v, rise);
    RabiResult r;
    r.curve.x = durations;
    double now = 0.0;
    for (double t : durations) {
        evolver.advance(v, 1.0, 0.0, t - now);
        now = t;
        Vector w = v;
        evolver.apply(w, fall);
        check_vector_state(layout, w, t);
        r.curve.y.push_back(excitation_of(layout, w));
    }
    r.fit = fit_damped_sinusoid(r.curve.x, r.curve.y);
    require_converged(r.fit, "rabi_experiment");
    r.rabi_freq = r.fit.value("Omega");
    r.rabi_decay = r.fit.value("T");
    if (max_step > two_pi / r.rabi_freq / 8.0) {
        throw SamplingError("rabi_experiment: fitted Rabi period is resolved by fewer than 8 points");
    }
    r.error_per_cycle = two_pi / (r.rabi_decay * r.rabi_freq);
    return r;
}

// ------------------------------------------------------------------ sweeps

double SweepResult::at(std::size_t row, const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidArgument("SweepResult: no column " + name);
    return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

std::vector<double> SweepResult::column(const std::string& name) const {
    std::vector<double> out;
    for (std::size_t k = 0; k < rows.size(); ++k) out.push_back(at(k, name));
    return out;
}

namespace {

template <class RowFn>
void run_rows(SweepResult& s, std::size_t n, int threads, RowFn row) {
    s.rows.assign(n, std::vector<double>(s.columns.size(), nan));
    s.errors.assign(n, "");
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            row(i, s.rows[i]);
        } catch (const Error& e) {
            s.errors[i] = e.kind() + ": " + e.what();
        }
    });
}

DeviceModel detuned(const DeviceModel& device, double detuning) {
    if (!device.jqf) throw InvalidArgument("detuning sweep requires a JQF");
    DeviceModel d = device;
    d.jqf->omega = device.qubit.omega + detuning;
    return d;
}

}  // namespace

SweepResult sweep_detuning(const DeviceModel& device, const std::vector<double>& detunings,
                           const SweepOptions& options) {
    device.validate();
    if (!device.jqf) throw InvalidArgument("sweep_detuning: device has no JQF");
    SweepResult s;
    s.axis_name = "detuning_hz";
    for (double d : detunings) s.axis.push_back(hertz(d));
    s.columns = {"detuning_hz", "t1_s",        "t1_err_s",       "t2e_s",  "t2e_err_s", "t2star_s",
                 "t2star_err_s", "freq_shift_hz", "p_th", "gamma_ex_hz"};
    const TransmonParams& q = device.qubit;
    const double g1 = qubit_gamma_1(q);
    const double g2 = 0.5 * g1 + q.gamma_phi;
    const std::size_t points = std::max<std::size_t>(options.points, 16);

    run_rows(s, detunings.size(), options.threads, [&](std::size_t i, std::vector<double>& row) {
        const DeviceModel dev = detuned(device, detunings[i]);
        row[0] = hertz(detunings[i]);

        const DecayResult t1 = adaptive_decay([&](const std::vector<double>& t) { return t1_experiment(dev, t); },
                                              1.0 / g1, points);
        row[1] = t1.time;
        row[2] = t1.fit.error("T");

        DeviceModel radiative = dev;
        radiative.qubit.gamma_in = 0.0;
        radiative.qubit.n_th = 0.0;
        const double gex_guess = std::max(q.gamma_ex, 1e-3 * g1);
        const DecayResult tr = adaptive_decay(
            [&](const std::vector<double>& t) { return t1_experiment(radiative, t); }, 1.0 / gex_guess, points);
        row[9] = hertz(1.0 / tr.time);

        const DensityMatrix ss = steady_state(full_liouvillian_parts(dev, q.omega, 0.0).base, dev.dims());
        row[8] = qubit_excitation(dev, ss);

        if (options.coherence) {
            const DecayResult echo = adaptive_decay(
                [&](const std::vector<double>& t) { return echo_experiment(dev, t); }, 1.0 / g2, points);
            row[3] = echo.time;
            row[4] = echo.fit.error("T");

            const RamseyResult ram = adaptive_ramsey(dev, 1.0 / g2, points, options.ramsey_detuning);
            row[5] = ram.t2_star;
            row[6] = ram.fit.error("T");
            row[7] = hertz(ram.freq_shift);
        }
    });
    return s;
}

SweepResult sweep_amplitude(const DeviceModel& device, const std::vector<double>& photon_fluxes,
                            const RabiOptions& rabi, int threads) {
    device.validate();
    SweepResult s;
    s.axis_name = "photon_flux";
    s.axis = photon_fluxes;
    s.columns = {"photon_flux", "sqrt_photon_flux", "rabi_freq_hz", "rabi_freq_err_hz", "rabi_decay_s",
                 "rabi_decay_err_s", "error_per_cycle", "expected_rabi_freq_hz"};
    run_rows(s, photon_fluxes.size(), threads, [&](std::size_t i, std::vector<double>& row) {
        const double nd = photon_fluxes[i];
        row[0] = nd;
        row[1] = std::sqrt(nd);
        row[7] = hertz(2.0 * std::sqrt(device.qubit.gamma_ex * nd));
        const RabiResult r = rabi_experiment(device, nd, default_rabi_durations(device, nd), rabi);
        row[2] = hertz(r.rabi_freq);
        row[3] = hertz(r.fit.error("Omega"));
        row[4] = r.rabi_decay;
        row[5] = r.fit.error("T");
        row[6] = r.error_per_cycle;
    });
    return s;
}

SweepResult sweep_anharmonicity(const DeviceModel& base, const std::vector<double>& alphas, double photon_flux,
                                const AnharmonicityOptions& options) {
    base.validate();
    if (!base.jqf) throw InvalidArgument("sweep_anharmonicity: device has no JQF");
    if (options.start_levels < 2 || options.max_levels < options.start_levels) {
        throw InvalidArgument("sweep_anharmonicity: invalid truncation range");
    }
    const std::vector<double> durations = default_rabi_durations(base, photon_flux);
    SweepResult s;
    s.axis_name = "alpha_hz";
    for (double a : alphas) s.axis.push_back(hertz(a));
    s.columns = {"alpha_hz", "jqf_levels", "rabi_freq_hz", "rabi_decay_s", "rabi_decay_err_s", "error_per_cycle"};

    run_rows(s, alphas.size(), options.threads, [&](std::size_t i, std::vector<double>& row) {
        DeviceModel dev = base;
        dev.jqf->alpha = alphas[i];
        row[0] = hertz(alphas[i]);
        dev.jqf->levels = options.start_levels;
        RabiResult prev = rabi_experiment(dev, photon_flux, durations, options.rabi);
        while (true) {
            if (dev.jqf->levels + 1 > options.max_levels) {
                throw TruncationFailure("sweep_anharmonicity: JQF truncation did not converge by " +
                                        std::to_string(options.max_levels) + " levels");
            }
            ++dev.jqf->levels;
            const RabiResult next = rabi_experiment(dev, photon_flux, durations, options.rabi);
            if (std::abs(next.rabi_decay - prev.rabi_decay) < options.rel_tol * prev.rabi_decay) break;
            prev = next;
        }
        row[1] = dev.jqf->levels - 1;
        row[2] = hertz(prev.rabi_freq);
        row[3] = prev.rabi_decay;
        row[4] = prev.fit.error("T");
        row[5] = prev.error_per_cycle;
    });

    DeviceModel none = base;
    none.jqf.reset();
    const RabiResult r0 = rabi_experiment(none, photon_flux, durations, options.rabi);
    s.scalars["no_jqf_rabi_freq_hz"] = hertz(r0.rabi_freq);
    s.scalars["no_jqf_rabi_decay_s"] = r0.rabi_decay;
    s.scalars["no_jqf_error_per_cycle"] = r0.error_per_cycle;

    DeviceModel two = base;
    two.jqf->levels = 2;
    const RabiResult r2 = rabi_experiment(two, photon_flux, durations, options.rabi);
    s.scalars["two_level_jqf_rabi_freq_hz"] = hertz(r2.rabi_freq);
    s.scalars["two_level_jqf_rabi_decay_s"] = r2.rabi_decay;
    s.scalars["two_level_jqf_error_per_cycle"] = r2.error_per_cycle;

    RabiOptions approx = options.rabi;
    approx.approximative = true;
    try {
        const RabiResult ra = rabi_experiment(base, photon_flux, durations, approx);
        s.scalars["approx_rabi_freq_hz"] = hertz(ra.rabi_freq);
        s.scalars["approx_rabi_decay_s"] = ra.rabi_decay;
        s.scalars["approx_error_per_cycle"] = ra.error_per_cycle;
    } catch (const InvalidArgument&) {
        // The approximative model only exists for a resonant half-wave geometry.
    }

    const double gq = base.qubit.gamma_ex;
    s.scalars["bound_4pi_over_3"] = 4.0 * pi / 3.0 * std::sqrt(gq / photon_flux);
    s.scalars["bound_3pi_over_4"] = 3.0 * pi / 4.0 * std::sqrt(gq / photon_flux);
    s.scalars["gamma_ex_jqf_hz"] = hertz(base.jqf->gamma_ex);

    std::size_t best = s.rows.size();
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
        if (!s.errors[k].empty()) continue;
        if (best == s.rows.size() || s.rows[k][5] < s.rows[best][5]) best = k;
    }
    if (best < s.rows.size()) {
        s.scalars["argmin_alpha_hz"] = s.rows[best][0];
        s.scalars["min_error_per_cycle"] = s.rows[best][5];
    }
    return s;
}

SweepResult tradeoff(const DeviceModel& device, const std::vector<double>& detunings, double photon_flux,
                     const RabiOptions& rabi, int threads) {
    device.validate();
    SweepResult s;
    s.axis_name = "detuning_hz";
    for (double d : detunings) s.axis.push_back(hertz(d));
    s.columns = {"detuning_hz", "rabi_freq_hz", "t1_s", "upper_bound_hz", "exceeds_bound"};
    const double g1 = qubit_gamma_1(device.qubit);
    const std::vector<double> durations = default_rabi_durations(device, photon_flux);
    run_rows(s, detunings.size(), threads, [&](std::size_t i, std::vector<double>& row) {
        const DeviceModel dev = detuned(device, detunings[i]);
        row[0] = hertz(detunings[i]);
        const RabiResult r = rabi_experiment(dev, photon_flux, durations, rabi);
        const DecayResult t1 =
            adaptive_decay([&](const std::vector<double>& t) { return t1_experiment(dev, t); }, 1.0 / g1, 301);
        const double bound = rabi_upper_bound(photon_flux, t1.time);
        row[1] = hertz(r.rabi_freq);
        row[2] = t1.time;
        row[3] = hertz(bound);
        row[4] = r.rabi_freq > bound ? 1.0 : 0.0;
    });
    DeviceModel none = device;
    none.jqf.reset();
    const RabiResult r0 = rabi_experiment(none, photon_flux, durations, rabi);
    s.scalars["no_jqf_rabi_freq_hz"] = hertz(r0.rabi_freq);
    return s;
}

// -------------------------------------------------------------------- RB

void RBConfig::validate() const {
    if (sequence_lengths.empty()) throw InvalidArgument("rb: sequence_lengths must not be empty");
    for (int m : sequence_lengths) {
        if (m < 1) throw InvalidArgument("rb: sequence lengths must be >= 1");
    }
    if (sequences_per_length < 1) throw InvalidArgument("rb: sequences_per_length must be >= 1");
    if (!(pulse_sigma > 0.0)) throw InvalidArgument("rb: pulse_sigma must be positive");
    if (!(pulse_truncation > 0.0)) throw InvalidArgument("rb: pulse_truncation must be positive");
    if (!(pulse_interval_factor >= 1.0)) throw InvalidArgument("rb: pulse_interval_factor must be >= 1");
    if (!(sample_dt > 0.0)) throw InvalidArgument("rb: sample_dt must be positive");
}

std::vector<int> default_rb_lengths() {
    std::vector<int> out;
    for (int k = 0; k < 14; ++k) {
        const int m = static_cast<int>(std::lround(std::pow(200.0, k / 13.0)));
        if (out.empty() || m != out.back()) out.push_back(m);
    }
    return out;
}

std::vector<int> rb_sequence(std::uint64_t seed, std::size_t length_index, std::size_t sequence_index, int length) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(length_index), static_cast<std::uint32_t>(sequence_index)};
    std::mt19937_64 rng(seq);
    std::vector<int> out(static_cast<std::size_t>(length));
    for (auto& c : out) c = static_cast<int>(rng() % 24);
    return out;
}

double calibrate_pi_amplitude(const DeviceModel& device, const RBConfig& rb) {
    rb.validate();
    DeviceModel iso;
    iso.qubit = device.qubit;
    iso.geometry = device.geometry;
    if (!(iso.qubit.gamma_ex > 0.0)) throw InvalidArgument("calibrate_pi_amplitude: qubit has no drive coupling");
    Evolver evolver(hamiltonian_parts(iso, iso.qubit.omega, 1.0));
    const double duration = rb.pulse_duration();

    PulseSchedule unit;
    unit.sample_dt = rb.sample_dt;
    unit.append_gaussian(duration, rb.pulse_sigma, 1.0, 0.0);
    double area = 0.0;
    for (const auto& s : unit.segments) area += s.amplitude * s.duration;
    const double a0 = pi / (2.0 * std::sqrt(iso.qubit.gamma_ex) * area);

    const Vector ground = vec(qubit_basis_state(iso, 0));
    auto excited = [&](double amp) {
        PulseSchedule p;
        p.sample_dt = rb.sample_dt;
        p.append_gaussian(duration, rb.pulse_sigma, amp, 0.0);
        Vector v = ground;
        evolver.apply(v, p);
        return level_population(iso, v, 1);
    };
    const auto best = boost::math::tools::brent_find_minima([&](double a) { return -excited(a); }, 0.7 * a0,
                                                            1.3 * a0, 40);
    return best.first;
}

RBResult randomized_benchmarking(const DeviceModel& device, const RBConfig& rb) {
    device.validate();
    rb.validate();
    RBResult out;
    out.lengths = rb.sequence_lengths;
    out.pi_amplitude = calibrate_pi_amplitude(device, rb);

    const double omega_d = device.qubit.omega;
    Evolver evolver(rb.lossless ? hamiltonian_parts(device, omega_d, 1.0)
                                : full_liouvillian_parts(device, omega_d, 1.0));
    const double duration = rb.pulse_duration();
    const double slot = rb.pulse_interval_factor * duration;
    const Eigen::Index n = device.dimension() * device.dimension();

    // One slot per generator: pulse followed by idle.
    std::map<Generator, Matrix> slot_op, ideal_op;
    const Matrix idle_slot = evolver.propagator(0.0, 0.0, slot);
    slot_op[Generator::idle] = idle_slot;
    ideal_op[Generator::idle] = idle_slot;
    const Matrix lead = evolver.propagator(0.0, 0.0, 0.5 * duration);
    const Matrix tail = evolver.propagator(0.0, 0.0, slot - 0.5 * duration);
    for (Generator g : pulse_generators) {
        const GeneratorPulse gp = generator_pulse(g);
        PulseSchedule p;
        p.sample_dt = rb.sample_dt;
        p.append_gaussian(duration, rb.pulse_sigma, out.pi_amplitude * gp.angle / pi, gp.phase);
        p.append_idle(slot - duration);
        slot_op[g] = evolver.schedule_superop(p);
        ideal_op[g] = tail * unitary_superop(qubit_unitary(device, generator_unitary(g))) * lead;
    }
    const auto& group = clifford_group();
    std::vector<Matrix> cliff(group.size()), cliff_ideal(group.size());
    for (std::size_t k = 0; k < group.size(); ++k) {
        Matrix a = Matrix::Identity(n, n), b = Matrix::Identity(n, n);
        for (Generator g : group[k].pulses) {
            a = slot_op[g] * a;
            b = ideal_op[g] * b;
        }
        cliff[k] = std::move(a);
        cliff_ideal[k] = std::move(b);
    }

    const Vector ground = vec(qubit_basis_state(device, 0));
    const std::size_t nl = rb.sequence_lengths.size();
    const auto ns = static_cast<std::size_t>(rb.sequences_per_length);
    std::vector<double> surv(nl * ns), ideal(nl * ns);
    out.first_sequences.assign(nl, {});
    parallel_for(nl * ns, 1, [&](std::size_t idx) {
        const std::size_t li = idx / ns, si = idx % ns;
        std::vector<int> seq = rb_sequence(rb.rng_seed, li, si, rb.sequence_lengths[li]);
        Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
        for (int c : seq) total = group[static_cast<std::size_t>(c)].unitary * total;
        seq.push_back(static_cast<int>(find_clifford(total.adjoint())));
        if (si == 0) out.first_sequences[li] = seq;
        Vector v = ground, w = ground;
        for (int c : seq) {
            v = cliff[static_cast<std::size_t>(c)] * v;
            w = cliff_ideal[static_cast<std::size_t>(c)] * w;
        }
        surv[idx] = 1.0 - excitation_of(device, v);
        ideal[idx] = 1.0 - excitation_of(device, w);
    });

    std::vector<double> m;
    for (std::size_t li = 0; li < nl; ++li) {
        double mean = 0.0, mean_i = 0.0;
        for (std::size_t si = 0; si < ns; ++si) {
            mean += surv[li * ns + si];
            mean_i += ideal[li * ns + si];
        }
        mean /= static_cast<double>(ns);
        mean_i /= static_cast<double>(ns);
        double var = 0.0;
        for (std::size_t si = 0; si < ns; ++si) var += std::pow(surv[li * ns + si] - mean, 2);
        out.survival.push_back(mean);
        out.ideal_survival.push_back(mean_i);
        out.survival_std.push_back(ns > 1 ? std::sqrt(var / static_cast<double>(ns - 1)) : 0.0);
        m.push_back(rb.sequence_lengths[li]);
    }
    out.fit = fit_rb_decay(m, out.survival);
    out.ideal_fit = fit_rb_decay(m, out.ideal_survival);
    require_converged(out.fit, "randomized_benchmarking");
    require_converged(out.ideal_fit, "randomized_benchmarking");
    out.avg_gate_error = out.fit.value("r");
    out.coherence_limit = out.ideal_fit.value("r");
    return out;
}

}  // namespace jqfsim
