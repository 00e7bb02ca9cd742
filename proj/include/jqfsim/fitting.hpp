#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "jqfsim/linalg.hpp"

namespace jqfsim {

struct FitResult {
    std::string model;
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> errors;  // empty unless converged
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string message;

    double value(std::string_view name) const;
    double error(std::string_view name) const;
    bool has(std::string_view name) const;
};

struct LsqProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    Eigen::VectorXd initial;
    /// Typical magnitude of each parameter; the solver works in
    /// x = (p - initial) / scale.
    Eigen::VectorXd scale;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    /// Parameters held at their initial value.
    std::vector<bool> fixed;
};

struct LsqOptions {
    int max_iterations = 500;
    double xtol = 1e-10;
    double ftol = 1e-12;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and central-difference
/// Jacobian. Bounds are enforced by projection.
FitResult least_squares(const std::string& model, std::vector<std::string> names, LsqProblem problem,
                        const LsqOptions& options = {});

using Initial = std::optional<std::vector<double>>;

/// A exp(-t/T) + C
FitResult fit_exponential(const std::vector<double>& t, const std::vector<double>& y, const Initial& initial = {});
/// A exp(-t/T) cos(Omega t + phi) + C
FitResult fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& y,
                              const Initial& initial = {});
/// e^{i(phi0 + omega tau)} (1 - gamma_eff / (gamma_2 - i(omega - omega_q)))
FitResult fit_reflection_qubit(const std::vector<double>& omega, const std::vector<Complex>& s11,
                               const Initial& initial = {});

struct ResonatorFitOptions {
    Initial initial;
    /// Refuse to free both kappa_in and p_th outside the strong dispersive
    /// regime kappa_ex + kappa_in <= 2|chi|.
    bool enforce_identifiability = true;
    std::optional<double> fixed_kappa_in;
    std::optional<double> fixed_p_th;
};
/// e^{i(phi0 + omega tau)} [(1-p) S_r(omega_r + chi) + p S_r(omega_r - chi)]
FitResult fit_reflection_resonator(const std::vector<double>& omega, const std::vector<Complex>& s11,
                                   const ResonatorFitOptions& options = {});

/// A p^m + B, r = (1 - p) / 2
FitResult fit_rb_decay(const std::vector<double>& m, const std::vector<double>& survival,
                       const Initial& initial = {});
FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y);

// Model evaluations shared with tests and the CLI.
double exponential_model(double t, double a, double tau, double c);
double damped_sinusoid_model(double t, double a, double tau, double omega, double phi, double c);
Complex reflection_qubit_model(double omega, double omega_q, double gamma_eff, double gamma_2, double phi0,
                               double tau);
Complex reflection_resonator_model(double omega, double omega_r, double kappa_ex, double kappa_in, double chi,
                                   double p_th, double phi0, double tau);

}  // namespace jqfsim
