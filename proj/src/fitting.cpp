#include "jqfsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jqfsim/errors.hpp"
#include "jqfsim/spectra.hpp"

namespace jqfsim {

namespace {

using Eigen::VectorXd;
using Eigen::MatrixXd;

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pi = std::numbers::pi;

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * pi);
    return phi <= -pi ? phi + 2.0 * pi : phi;
}

void require_points(std::size_t points, std::size_t params, const char* what) {
    if (points < 2 * params) {
        throw InvalidArgument(std::string(what) + ": need at least " + std::to_string(2 * params) +
                              " data points, got " + std::to_string(points));
    }
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw InvalidArgument(std::string(what) + ": x and y lengths differ");
}

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite data");
    }
}

double nonzero_scale(double x, double fallback) {
    const double a = std::abs(x);
    return a > 0.0 && std::isfinite(a) ? a : fallback;
}

// Linear least squares for fixed nonlinear parameters; returns the residual
// sum of squares and the coefficients.
double linear_fit(const MatrixXd& basis, const VectorXd& y, VectorXd& coeffs) {
    coeffs = basis.colPivHouseholderQr().solve(y);
    return (basis * coeffs - y).squaredNorm();
}

std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    const double a = std::log(lo), b = std::log(hi);
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (n - 1));
    return out;
}

std::vector<double> unwrap(const std::vector<Complex>& z) {
    std::vector<double> ph(z.size());
    double offset = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double raw = std::arg(z[k]);
        if (k > 0) {
            const double prev = ph[k - 1] - offset;
            const double jump = raw - prev;
            if (jump > pi) offset -= 2.0 * pi;
            if (jump < -pi) offset += 2.0 * pi;
        }
        ph[k] = raw + offset;
    }
    return ph;
}

double slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t from, std::size_t to) {
    const double n = static_cast<double>(to - from);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = from; k < to; ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    const double den = n * sxx - sx * sx;
    return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

struct Baseline {
    double centre = 0.0;
    double phi_c = 0.0;  // phase at centre
    double tau = 0.0;
};

// Electrical delay and phase offset from the off-resonant edges of a trace.
Baseline estimate_baseline(const std::vector<double>& w, const std::vector<Complex>& s) {
    Baseline b;
    const std::size_t n = w.size();
    b.centre = 0.5 * (w.front() + w.back());
    const std::size_t edge = std::max<std::size_t>(3, n / 6);
    const std::vector<double> ph = unwrap(s);
    const double left = slope(w, ph, 0, edge);
    const double right = slope(w, ph, n - edge, n);
    b.tau = 0.5 * (left + right);
    Complex acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k >= edge && k < n - edge) continue;
        acc += s[k] * std::exp(-I * (w[k] - b.centre) * b.tau);
    }
    b.phi_c = std::arg(acc);
    return b;
}

struct LineGuess {
    double omega0 = 0.0;
    double half_width = 0.0;  // gamma_2 or kappa/2
    double depth = 0.0;       // |1 - z| at omega0
};

LineGuess estimate_line(const std::vector<double>& w, const std::vector<Complex>& d) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < d.size(); ++j) {
        if (std::abs(d[j]) > std::abs(d[k])) k = j;
    }
    LineGuess g;
    g.omega0 = w[k];
    g.depth = std::abs(d[k]);
    const double half = 0.5 * std::norm(d[k]);
    auto crossing = [&](int dir) {
        std::ptrdiff_t j = static_cast<std::ptrdiff_t>(k);
        const auto n = static_cast<std::ptrdiff_t>(d.size());
        while (j + dir >= 0 && j + dir < n && std::norm(d[static_cast<std::size_t>(j + dir)]) >= half) j += dir;
        if (j + dir < 0 || j + dir >= n) return w[static_cast<std::size_t>(j)];
        const double y0 = std::norm(d[static_cast<std::size_t>(j)]);
        const double y1 = std::norm(d[static_cast<std::size_t>(j + dir)]);
        const double f = (y0 - half) / (y0 - y1);
        return w[static_cast<std::size_t>(j)] + f * (w[static_cast<std::size_t>(j + dir)] - w[static_cast<std::size_t>(j)]);
    };
    g.half_width = 0.5 * (crossing(+1) - crossing(-1));
    const double spacing = (w.back() - w.front()) / static_cast<double>(std::max<std::size_t>(w.size() - 1, 1));
    g.half_width = std::max(g.half_width, spacing);
    return g;
}

VectorXd stack(const std::vector<Complex>& z) {
    VectorXd r(2 * z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        r(static_cast<Eigen::Index>(k)) = z[k].real();
        r(static_cast<Eigen::Index>(k + z.size())) = z[k].imag();
    }
    return r;
}

VectorXd to_vector(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

void apply_initial(VectorXd& p, const Initial& initial, const char* what) {
    if (!initial) return;
    if (static_cast<Eigen::Index>(initial->size()) != p.size()) {
        throw InvalidArgument(std::string(what) + ": initial override has wrong number of parameters");
    }
    p = to_vector(*initial);
}

}  // namespace

double FitResult::value(std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return values[k];
    }
    throw InvalidArgument("FitResult: no parameter named " + std::string(name));
}

double FitResult::error(std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return k < errors.size() ? errors[k] : std::numeric_limits<double>::quiet_NaN();
    }
    throw InvalidArgument("FitResult: no parameter named " + std::string(name));
}

bool FitResult::has(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

FitResult least_squares(const std::string& model, std::vector<std::string> names, LsqProblem problem,
                        const LsqOptions& options) {
    const Eigen::Index np = problem.initial.size();
    if (static_cast<Eigen::Index>(names.size()) != np) throw InvalidArgument("least_squares: names/params mismatch");
    if (problem.scale.size() == 0) {
        problem.scale = problem.initial.cwiseAbs();
        for (Eigen::Index j = 0; j < np; ++j) {
            if (!(problem.scale(j) > 0.0)) problem.scale(j) = 1.0;
        }
    }
    if (problem.lower.size() == 0) problem.lower = VectorXd::Constant(np, -inf);
    if (problem.upper.size() == 0) problem.upper = VectorXd::Constant(np, inf);
    if (problem.fixed.empty()) problem.fixed.assign(static_cast<std::size_t>(np), false);
    for (Eigen::Index j = 0; j < np; ++j) {
        if (!std::isfinite(problem.initial(j))) throw InvalidArgument("least_squares: non-finite initial parameter");
        if (problem.initial(j) < problem.lower(j) || problem.initial(j) > problem.upper(j)) {
            throw InvalidArgument("least_squares: initial parameter " + names[static_cast<std::size_t>(j)] +
                                  " outside bounds");
        }
        if (!(problem.scale(j) > 0.0)) throw InvalidArgument("least_squares: scales must be positive");
    }

    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < np; ++j) {
        if (!problem.fixed[static_cast<std::size_t>(j)]) free.push_back(j);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());

    auto params = [&](const VectorXd& x) {
        VectorXd p = problem.initial;
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Eigen::Index j = free[static_cast<std::size_t>(k)];
            p(j) = std::clamp(problem.initial(j) + problem.scale(j) * x(k), problem.lower(j), problem.upper(j));
        }
        return p;
    };
    auto unclamped = [&](const VectorXd& x) {
        VectorXd p = problem.initial;
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Eigen::Index j = free[static_cast<std::size_t>(k)];
            p(j) = problem.initial(j) + problem.scale(j) * x(k);
        }
        return p;
    };
    auto project = [&](VectorXd x) {
        for (Eigen::Index k = 0; k < nf; ++k) {
            const Eigen::Index j = free[static_cast<std::size_t>(k)];
            const double lo = (problem.lower(j) - problem.initial(j)) / problem.scale(j);
            const double hi = (problem.upper(j) - problem.initial(j)) / problem.scale(j);
            x(k) = std::clamp(x(k), lo, hi);
        }
        return x;
    };
    auto jacobian = [&](const VectorXd& x, Eigen::Index m) {
        MatrixXd jac(m, nf);
        for (Eigen::Index k = 0; k < nf; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
            VectorXd xp = x, xm = x;
            xp(k) += h;
            xm(k) -= h;
            jac.col(k) = (problem.residual(unclamped(xp)) - problem.residual(unclamped(xm))) / (2.0 * h);
        }
        return jac;
    };

    FitResult out;
    out.model = model;
    out.names = std::move(names);

    VectorXd x = VectorXd::Zero(nf);
    VectorXd r = problem.residual(params(x));
    const Eigen::Index m = r.size();
    if (m < nf) throw InvalidArgument("least_squares: fewer residuals than free parameters");
    if (!r.allFinite()) throw FitFailure("least_squares: residual is not finite at the initial parameters");
    double cost = r.squaredNorm();

    double lambda = 1e-3;
    bool converged = cost == 0.0 || nf == 0;
    out.message = converged ? "exact fit at initial parameters" : "";
    int iter = 0;
    MatrixXd jac;
    while (!converged && iter < options.max_iterations) {
        jac = jacobian(x, m);
        const VectorXd g = jac.transpose() * r;
        const MatrixXd a = jac.transpose() * jac;
        if (g.cwiseAbs().maxCoeff() <= 1e-15 * std::max(cost, 1e-300) || !g.allFinite()) {
            converged = g.allFinite();
            out.message = converged ? "gradient vanished" : "non-finite gradient";
            break;
        }
        VectorXd diag = a.diagonal();
        for (Eigen::Index k = 0; k < nf; ++k) {
            if (!(diag(k) > 0.0)) diag(k) = 1.0;
        }
        bool accepted = false;
        while (!accepted) {
            MatrixXd damped = a;
            damped.diagonal() += lambda * diag;
            const VectorXd step = damped.ldlt().solve(-g);
            const VectorXd xn = project(x + step);
            const VectorXd rn = problem.residual(params(xn));
            const double cn = rn.allFinite() ? rn.squaredNorm() : inf;
            if (cn < cost) {
                const double dx = (xn - x).cwiseAbs().maxCoeff();
                const double dc = cost - cn;
                x = xn;
                r = rn;
                ++iter;
                accepted = true;
                lambda = std::max(lambda * 0.3, 1e-15);
                if (dx <= options.xtol * (1.0 + x.cwiseAbs().maxCoeff())) {
                    converged = true;
                    out.message = "relative step below tolerance";
                } else if (dc <= options.ftol * cost) {
                    converged = true;
                    out.message = "relative residual change below tolerance";
                }
                cost = cn;
                if (cost == 0.0) {
                    converged = true;
                    out.message = "exact fit";
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e20) {
                    // No decrease possible at machine precision: a stationary point.
                    converged = true;
                    out.message = "no further decrease";
                    break;
                }
            }
        }
    }
    if (!converged) out.message = "iteration limit reached";

    const VectorXd p = params(x);
    out.values.assign(p.data(), p.data() + np);
    out.residual_norm = std::sqrt(cost);
    out.converged = converged;
    out.iterations = iter;
    if (converged) {
        out.errors.assign(static_cast<std::size_t>(np), 0.0);
        if (nf > 0 && m > nf) {
            jac = jacobian(x, m);
            const MatrixXd a = jac.transpose() * jac;
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
            const VectorXd ev = es.eigenvalues();
            const double tol = ev.cwiseAbs().maxCoeff() * 1e-14;
            VectorXd inv = VectorXd::Zero(nf);
            for (Eigen::Index k = 0; k < nf; ++k) inv(k) = ev(k) > tol ? 1.0 / ev(k) : inf;
            const double s2 = cost / static_cast<double>(m - nf);
            for (Eigen::Index k = 0; k < nf; ++k) {
                double var = 0.0;
                for (Eigen::Index e = 0; e < nf; ++e) {
                    const double v = es.eigenvectors()(k, e);
                    if (v != 0.0) var += v * v * inv(e);
                }
                const Eigen::Index j = free[static_cast<std::size_t>(k)];
                out.errors[static_cast<std::size_t>(j)] = problem.scale(j) * std::sqrt(var * s2);
            }
        }
    }
    return out;
}

// ------------------------------------------------------------------ models

double exponential_model(double t, double a, double tau, double c) { return a * std::exp(-t / tau) + c; }

double damped_sinusoid_model(double t, double a, double tau, double omega, double phi, double c) {
    return a * std::exp(-t / tau) * std::cos(omega * t + phi) + c;
}

Complex reflection_qubit_model(double omega, double omega_q, double gamma_eff, double gamma_2, double phi0,
                               double tau) {
    return std::exp(I * (phi0 + omega * tau)) * reflection_qubit_weak(omega_q, gamma_eff, gamma_2, omega);
}

Complex reflection_resonator_model(double omega, double omega_r, double kappa_ex, double kappa_in, double chi,
                                   double p_th, double phi0, double tau) {
    const Complex s = (1.0 - p_th) * resonator_line(kappa_ex, kappa_in, omega_r + chi, omega) +
                      p_th * resonator_line(kappa_ex, kappa_in, omega_r - chi, omega);
    return std::exp(I * (phi0 + omega * tau)) * s;
}

// -------------------------------------------------------------- fit families

FitResult fit_exponential(const std::vector<double>& t, const std::vector<double>& y, const Initial& initial) {
    require_same_length(t.size(), y.size(), "fit_exponential");
    require_points(t.size(), 3, "fit_exponential");
    require_finite(t, "fit_exponential");
    require_finite(y, "fit_exponential");
    const VectorXd tv = to_vector(t), yv = to_vector(y);
    const double span = tv.maxCoeff() - tv.minCoeff();
    if (!(span > 0.0)) throw InvalidArgument("fit_exponential: time axis has zero span");

    VectorXd p0(3);
    if (initial) {
        apply_initial(p0, initial, "fit_exponential");
    } else {
        // Separable search over T: A and C are linear once T is fixed.
        double best = inf;
        for (double tau : logspace(span * 1e-3, span * 1e2, 241)) {
            MatrixXd basis(tv.size(), 2);
            basis.col(0) = (-tv.array() / tau).exp();
            basis.col(1).setOnes();
            VectorXd c;
            const double rss = linear_fit(basis, yv, c);
            if (rss < best) {
                best = rss;
                p0 << c(0), tau, c(1);
            }
        }
    }
    LsqProblem prob;
    prob.initial = p0;
    const double amp = nonzero_scale(p0(0), 1.0);
    prob.scale = (VectorXd(3) << amp, std::abs(p0(1)), std::max(std::abs(p0(2)), amp)).finished();
    prob.residual = [&](const VectorXd& p) -> VectorXd {
        return p(0) * (-tv.array() / p(1)).exp() + p(2) - yv.array();
    };
    return least_squares("exponential", {"A", "T", "C"}, prob);
}

FitResult fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& y, const Initial& initial) {
    require_same_length(t.size(), y.size(), "fit_damped_sinusoid");
    require_points(t.size(), 5, "fit_damped_sinusoid");
    require_finite(t, "fit_damped_sinusoid");
    require_finite(y, "fit_damped_sinusoid");
    const VectorXd tv = to_vector(t), yv = to_vector(y);
    const Eigen::Index n = tv.size();
    const double span = tv.maxCoeff() - tv.minCoeff();
    if (!(span > 0.0)) throw InvalidArgument("fit_damped_sinusoid: time axis has zero span");

    VectorXd p0(5);
    if (initial) {
        apply_initial(p0, initial, "fit_damped_sinusoid");
    } else {
        // Periodogram peak of the mean-removed data (direct DFT, 8x oversampled).
        const double mean = yv.mean();
        const double dt = span / static_cast<double>(n - 1);
        const double dw = 2.0 * pi / (8.0 * span);
        const double w_max = pi / dt;
        double best_w = dw, best_pow = -1.0;
        for (double w = 4.0 * dw; w <= w_max; w += dw) {
            Complex acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) acc += (yv(k) - mean) * std::exp(-I * w * tv(k));
            if (std::norm(acc) > best_pow) {
                best_pow = std::norm(acc);
                best_w = w;
            }
        }
        // Separable search over (Omega, T) near the peak.
        double best = inf;
        for (int iw = -8; iw <= 8; ++iw) {
            const double w = best_w + iw * dw / 4.0;
            if (w <= 0.0) continue;
            for (double tau : logspace(span * 1e-2, span * 1e3, 61)) {
                MatrixXd basis(n, 3);
                const auto env = (-tv.array() / tau).exp();
                basis.col(0) = env * (w * tv.array()).cos();
                basis.col(1) = env * (w * tv.array()).sin();
                basis.col(2).setOnes();
                VectorXd c;
                const double rss = linear_fit(basis, yv, c);
                if (rss < best) {
                    best = rss;
                    p0 << std::hypot(c(0), c(1)), tau, w, std::atan2(-c(1), c(0)), c(2);
                }
            }
        }
    }
    LsqProblem prob;
    prob.initial = p0;
    const double amp = nonzero_scale(p0(0), 1.0);
    prob.scale = (VectorXd(5) << amp, std::abs(p0(1)), std::abs(p0(2)), 1.0, std::max(std::abs(p0(4)), amp)).finished();
    prob.residual = [&](const VectorXd& p) -> VectorXd {
        return p(0) * (-tv.array() / p(1)).exp() * (p(2) * tv.array() + p(3)).cos() + p(4) - yv.array();
    };
    FitResult fr = least_squares("damped_sinusoid", {"A", "T", "Omega", "phi", "C"}, prob);
    if (fr.values[0] < 0.0) {
        fr.values[0] = -fr.values[0];
        fr.values[3] += pi;
    }
    if (fr.values[2] < 0.0) {
        fr.values[2] = -fr.values[2];
        fr.values[3] = -fr.values[3];
    }
    fr.values[3] = wrap_phase(fr.values[3]);
    return fr;
}

FitResult fit_reflection_qubit(const std::vector<double>& omega, const std::vector<Complex>& s11,
                               const Initial& initial) {
    require_same_length(omega.size(), s11.size(), "fit_reflection_qubit");
    require_points(2 * omega.size(), 5, "fit_reflection_qubit");
    ComplexTrace{omega, s11}.validate();
    const std::size_t n = omega.size();
    const double centre = 0.5 * (omega.front() + omega.back());

    // Internal parameters: omega_q, gamma_eff, gamma_2, phase at centre, tau.
    VectorXd p0(5);
    if (initial) {
        apply_initial(p0, initial, "fit_reflection_qubit");
        p0(3) = wrap_phase(p0(3) + centre * p0(4));
    } else {
        const Baseline b = estimate_baseline(omega, s11);
        std::vector<Complex> d(n);
        for (std::size_t k = 0; k < n; ++k) {
            d[k] = 1.0 - s11[k] * std::exp(-I * (b.phi_c + (omega[k] - centre) * b.tau));
        }
        const LineGuess g = estimate_line(omega, d);
        p0 << g.omega0, g.depth * g.half_width, g.half_width, b.phi_c, b.tau;
    }
    const double width = nonzero_scale(p0(2), (omega.back() - omega.front()) / 10.0);
    const double span = omega.back() - omega.front();
    LsqProblem prob;
    prob.initial = p0;
    prob.scale = (VectorXd(5) << width, nonzero_scale(p0(1), width), width, 1.0, 1.0 / span).finished();
    prob.lower = (VectorXd(5) << -inf, 0.0, 0.0, -inf, -inf).finished();
    prob.upper = VectorXd::Constant(5, inf);
    prob.residual = [&](const VectorXd& p) -> VectorXd {
        std::vector<Complex> res(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Complex model = std::exp(I * (p(3) + (omega[k] - centre) * p(4))) *
                                  reflection_qubit_weak(p(0), p(1), p(2), omega[k]);
            res[k] = model - s11[k];
        }
        return stack(res);
    };
    FitResult fr = least_squares("reflection_qubit", {"omega_q", "gamma_eff", "gamma_2", "phi0", "tau"}, prob);
    fr.values[3] = wrap_phase(fr.values[3] - centre * fr.values[4]);
    if (!fr.errors.empty()) fr.errors[3] = std::hypot(fr.errors[3], centre * fr.errors[4]);
    return fr;
}

FitResult fit_reflection_resonator(const std::vector<double>& omega, const std::vector<Complex>& s11,
                                   const ResonatorFitOptions& options) {
    require_same_length(omega.size(), s11.size(), "fit_reflection_resonator");
    require_points(2 * omega.size(), 7, "fit_reflection_resonator");
    ComplexTrace{omega, s11}.validate();
    const std::size_t n = omega.size();
    const double centre = 0.5 * (omega.front() + omega.back());
    const double span = omega.back() - omega.front();

    // Internal parameters: omega_r, kappa_ex, kappa_in, chi, p_th, phase at centre, tau.
    VectorXd p0(7);
    if (options.initial) {
        apply_initial(p0, options.initial, "fit_reflection_resonator");
        p0(5) = wrap_phase(p0(5) + centre * p0(6));
    } else {
        const Baseline b = estimate_baseline(omega, s11);
        std::vector<Complex> z(n), d(n);
        for (std::size_t k = 0; k < n; ++k) {
            z[k] = s11[k] * std::exp(-I * (b.phi_c + (omega[k] - centre) * b.tau));
            d[k] = 1.0 - z[k];
        }
        const LineGuess g = estimate_line(omega, d);
        const double kappa = 2.0 * g.half_width;
        const double k_ex = std::clamp(g.depth * g.half_width, 0.0, kappa);
        const double k_in = std::max(kappa - k_ex, 1e-3 * kappa);
        // Second (excited-state) line: scan its position, p_th enters linearly.
        double best = inf;
        p0 << g.omega0, k_ex, k_in, 0.0, 0.0, b.phi_c, b.tau;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(omega[j] - g.omega0) < 0.25 * g.half_width) continue;
            double num = 0.0, den = 0.0;
            std::vector<Complex> sa(n), diff(n);
            for (std::size_t k = 0; k < n; ++k) {
                sa[k] = resonator_line(k_ex, k_in, g.omega0, omega[k]);
                diff[k] = resonator_line(k_ex, k_in, omega[j], omega[k]) - sa[k];
                num += std::real(std::conj(diff[k]) * (z[k] - sa[k]));
                den += std::norm(diff[k]);
            }
            const double p = std::clamp(den > 0.0 ? num / den : 0.0, 0.0, 0.5);
            double rss = 0.0;
            for (std::size_t k = 0; k < n; ++k) rss += std::norm(sa[k] + p * diff[k] - z[k]);
            if (rss < best) {
                best = rss;
                const double chi = 0.5 * (g.omega0 - omega[j]);
                p0 << 0.5 * (g.omega0 + omega[j]), k_ex, k_in, chi, std::max(p, 1e-3), b.phi_c, b.tau;
            }
        }
    }
    if (options.fixed_kappa_in) p0(2) = *options.fixed_kappa_in;
    if (options.fixed_p_th) p0(4) = *options.fixed_p_th;

    const double width = nonzero_scale(p0(1) + p0(2), span / 10.0);
    LsqProblem prob;
    prob.initial = p0;
    prob.scale = (VectorXd(7) << width, width, nonzero_scale(p0(2), width * 1e-2), width,
                  nonzero_scale(p0(4), 0.01), 1.0, 1.0 / span)
                     .finished();
    prob.lower = (VectorXd(7) << -inf, 0.0, 0.0, -inf, 0.0, -inf, -inf).finished();
    prob.upper = (VectorXd(7) << inf, inf, inf, inf, 1.0, inf, inf).finished();
    prob.fixed = {false, false, options.fixed_kappa_in.has_value(), false, options.fixed_p_th.has_value(), false,
                  false};
    prob.residual = [&](const VectorXd& p) -> VectorXd {
        std::vector<Complex> res(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Complex s = (1.0 - p(4)) * resonator_line(p(1), p(2), p(0) + p(3), omega[k]) +
                              p(4) * resonator_line(p(1), p(2), p(0) - p(3), omega[k]);
            res[k] = std::exp(I * (p(5) + (omega[k] - centre) * p(6))) * s - s11[k];
        }
        return stack(res);
    };
    FitResult fr = least_squares("reflection_resonator",
                                 {"omega_r", "kappa_ex", "kappa_in", "chi", "p_th", "phi0", "tau"}, prob);
    fr.values[5] = wrap_phase(fr.values[5] - centre * fr.values[6]);
    if (!fr.errors.empty()) fr.errors[5] = std::hypot(fr.errors[5], centre * fr.errors[6]);

    const bool both_free = !options.fixed_kappa_in && !options.fixed_p_th;
    if (both_free && options.enforce_identifiability) {
        const double k_tot = fr.value("kappa_ex") + fr.value("kappa_in");
        if (k_tot > 2.0 * std::abs(fr.value("chi"))) {
            throw InvalidArgument(
                "fit_reflection_resonator: kappa_in and p_th are not separately identifiable outside the strong "
                "dispersive regime (kappa_ex + kappa_in > 2|chi|); fix one of them or disable the guard");
        }
    }
    return fr;
}

FitResult fit_rb_decay(const std::vector<double>& m, const std::vector<double>& survival, const Initial& initial) {
    require_same_length(m.size(), survival.size(), "fit_rb_decay");
    require_points(m.size(), 3, "fit_rb_decay");
    require_finite(m, "fit_rb_decay");
    require_finite(survival, "fit_rb_decay");
    const VectorXd mv = to_vector(m), yv = to_vector(survival);

    // Flat survival leaves p undetermined; no decay is resolved, so p = 1.
    if (yv.maxCoeff() - yv.minCoeff() <= 1e-9 * std::max(1.0, yv.cwiseAbs().maxCoeff())) {
        FitResult flat;
        flat.model = "rb_decay";
        flat.names = {"A", "p", "B", "r"};
        flat.values = {0.0, 1.0, yv.mean(), 0.0};
        flat.errors = {0.0, 0.0, 0.0, 0.0};
        flat.residual_norm = (yv.array() - yv.mean()).matrix().norm();
        flat.converged = true;
        flat.message = "flat survival: no decay resolved";
        return flat;
    }

    VectorXd p0(3);
    if (initial) {
        apply_initial(p0, initial, "fit_rb_decay");
    } else {
        double best = inf;
        p0 << 0.0, 1.0, yv.mean();
        for (double one_minus_p : logspace(1e-7, 0.5, 400)) {
            const double p = 1.0 - one_minus_p;
            MatrixXd basis(mv.size(), 2);
            basis.col(0) = mv.unaryExpr([p](double x) { return std::pow(p, x); });
            basis.col(1).setOnes();
            VectorXd c;
            const double rss = linear_fit(basis, yv, c);
            if (rss < best && c(0) > 0.0) {
                best = rss;
                p0 << c(0), p, c(1);
            }
        }
    }
    LsqProblem prob;
    prob.initial = p0;
    prob.scale = (VectorXd(3) << nonzero_scale(p0(0), 0.5), std::max(1.0 - p0(1), 1e-7),
                  nonzero_scale(p0(2), 0.5))
                     .finished();
    prob.residual = [&](const VectorXd& p) -> VectorXd {
        return p(0) * mv.unaryExpr([&](double x) { return std::pow(p(1), x); }).array() + p(2) - yv.array();
    };
    // Survival decays from above towards the mixed-state floor: A >= 0 and
    // 0 < p <= 1. A fit pinned to either bound means the data do not decay.
    prob.lower = (VectorXd(3) << 0.0, 1e-12, -inf).finished();
    prob.upper = (VectorXd(3) << inf, 1.0, inf).finished();
    FitResult fr = least_squares("rb_decay", {"A", "p", "B"}, prob);
    const double p = fr.values[1];
    if (!(p > 0.0 && p < 1.0) || !(fr.values[0] > 0.0)) {
        throw FitFailure("fit_rb_decay: no decay towards a floor (A=" + std::to_string(fr.values[0]) +
                         ", p=" + std::to_string(p) + "); depolarizing parameter must lie in (0, 1)");
    }
    fr.names.push_back("r");
    fr.values.push_back(0.5 * (1.0 - p));
    if (!fr.errors.empty()) fr.errors.push_back(0.5 * fr.errors[1]);
    return fr;
}

FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    require_same_length(x.size(), y.size(), "fit_linear");
    require_points(x.size(), 2, "fit_linear");
    require_finite(x, "fit_linear");
    require_finite(y, "fit_linear");
    const auto n = static_cast<double>(x.size());
    const VectorXd xv = to_vector(x), yv = to_vector(y);
    const double mx = xv.mean(), my = yv.mean();
    const double sxx = (xv.array() - mx).square().sum();
    if (!(sxx > 0.0)) throw InvalidArgument("fit_linear: x values are all equal");
    const double sxy = ((xv.array() - mx) * (yv.array() - my)).sum();
    const double a = sxy / sxx;
    const double b = my - a * mx;
    const double rss = (yv.array() - a * xv.array() - b).square().sum();
    const double s2 = rss / (n - 2.0);

    FitResult fr;
    fr.model = "linear";
    fr.names = {"slope", "intercept"};
    fr.values = {a, b};
    fr.errors = {std::sqrt(s2 / sxx), std::sqrt(s2 * (1.0 / n + mx * mx / sxx))};
    fr.residual_norm = std::sqrt(rss);
    fr.converged = true;
    fr.iterations = 0;
    fr.message = "closed form";
    return fr;
}

}  // namespace jqfsim
