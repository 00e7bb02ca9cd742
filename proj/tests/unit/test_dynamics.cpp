#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "jqfsim/dynamics.hpp"
#include "jqfsim/errors.hpp"
#include "jqfsim/fitting.hpp"
#include "jqfsim/units.hpp"

using namespace jqfsim;

namespace {

DeviceModel lone_qubit(int levels = 2) {
    DeviceModel dev;
    dev.qubit.omega = angular(8e9);
    dev.qubit.alpha = angular(-0.4e9);
    dev.qubit.gamma_ex = angular(200e3);
    dev.qubit.gamma_in = angular(30e3);
    dev.qubit.gamma_phi = angular(20e3);
    dev.qubit.n_th = 0.2;
    dev.qubit.levels = levels;
    return dev;
}

double trace_distance(const Matrix& a, const Matrix& b) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(a - b);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Bloch equations of a driven two-level system with thermal relaxation,
// integrated with classical RK4.
struct Bloch {
    double omega_rabi, delta, up, down, gamma_phi;
    std::array<double, 3> rhs(const std::array<double, 3>& s) const {
        const double g1 = up + down;
        const double g2 = 0.5 * g1 + gamma_phi;
        const double w0 = (up - down) / g1;
        return {-delta * s[1] - g2 * s[0], delta * s[0] - g2 * s[1] - omega_rabi * s[2],
                omega_rabi * s[1] - g1 * (s[2] - w0)};
    }
    double excited_population(double t, int steps) const {
        std::array<double, 3> s{0.0, 0.0, -1.0};
        const double h = t / steps;
        for (int k = 0; k < steps; ++k) {
            auto add = [](std::array<double, 3> a, const std::array<double, 3>& b, double f) {
                for (int i = 0; i < 3; ++i) a[i] += f * b[i];
                return a;
            };
            const auto k1 = rhs(s);
            const auto k2 = rhs(add(s, k1, h / 2));
            const auto k3 = rhs(add(s, k2, h / 2));
            const auto k4 = rhs(add(s, k3, h));
            for (int i = 0; i < 3; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        return 0.5 * (1.0 + s[2]);
    }
};

}  // namespace

TEST_CASE("undriven steady state at zero temperature is the ground state") {
    DeviceModel dev = lone_qubit(3);
    dev.qubit.n_th = 0.0;
    const DensityMatrix rho = steady_state(full_liouvillian(dev, {dev.qubit.omega, 0.0, 0.0}), dev.dims());
    CHECK(std::abs(rho.matrix()(0, 0) - 1.0) < 1e-12);
    CHECK(qubit_excitation(dev, rho) < 1e-12);
}

TEST_CASE("thermal steady state follows detailed balance") {
    DeviceModel dev = lone_qubit(2);
    dev.qubit.gamma_ex = 0.0;
    const DensityMatrix rho = steady_state(full_liouvillian(dev, {dev.qubit.omega, 0.0, 0.0}), dev.dims());
    const double n = dev.qubit.n_th;
    CHECK(rho.matrix()(1, 1).real() == doctest::Approx(n / (2 * n + 1)).epsilon(1e-10));

    dev = lone_qubit(2);
    const DensityMatrix rho2 = steady_state(full_liouvillian(dev, {dev.qubit.omega, 0.0, 0.0}), dev.dims());
    const double up = n * dev.qubit.gamma_in;
    const double down = dev.qubit.gamma_ex + (n + 1) * dev.qubit.gamma_in;
    CHECK(rho2.matrix()(1, 1).real() == doctest::Approx(up / (up + down)).epsilon(1e-10));
}

TEST_CASE("driven two-level steady-state coherence") {
    DeviceModel dev = lone_qubit(2);
    dev.qubit.n_th = 0.0;
    const double g1 = dev.qubit.gamma_ex + dev.qubit.gamma_in;
    const double g2 = 0.5 * g1 + dev.qubit.gamma_phi;
    const double flux = 2e5;
    const double sat = 4 * dev.qubit.gamma_ex * flux / (g1 * g2);
    for (double x : {0.0, 1.0, -2.5}) {
        const double delta = x * g2;
        const DensityMatrix rho =
            steady_state(full_liouvillian(dev, {dev.qubit.omega - delta, flux, 0.0}), dev.dims());
        const double expect = std::sqrt(dev.qubit.gamma_ex * flux) / g2 * std::sqrt(1 + x * x) / (1 + x * x + sat);
        CHECK(std::abs(rho.matrix()(0, 1)) == doctest::Approx(expect).epsilon(1e-8));
        if (x == 0.0) CHECK(std::abs(rho.matrix()(0, 1).real()) < 1e-10 * expect);
    }
}

TEST_CASE("zero Liouvillian has no unique steady state") {
    CHECK_THROWS_AS(steady_state(Liouvillian::zero(2), {2}), DegenerateSteadyState);
    DeviceModel dev = lone_qubit(2);
    dev.qubit.gamma_ex = dev.qubit.gamma_in = dev.qubit.gamma_phi = 0.0;
    CHECK_THROWS_AS(steady_state(full_liouvillian(dev, {dev.qubit.omega, 0.0, 0.0}), dev.dims()),
                    DegenerateSteadyState);
}

TEST_CASE("driven two-level dynamics match the Bloch equations") {
    DeviceModel dev = lone_qubit(2);
    const double flux = 4e10;
    const double delta = angular(0.3e6);
    const double t_end = 3e-6;
    PulseSchedule sched;
    sched.append_constant(t_end, 1.0);
    std::vector<double> times;
    for (int k = 0; k <= 30; ++k) times.push_back(t_end * k / 30);
    const Trajectory traj =
        evolve(dev, {dev.qubit.omega - delta, flux, 0.0}, sched, qubit_basis_state(dev, 0), times);
    const Bloch bloch{2 * std::sqrt(dev.qubit.gamma_ex * flux), delta, dev.qubit.n_th * dev.qubit.gamma_in,
                      dev.qubit.gamma_ex + (dev.qubit.n_th + 1) * dev.qubit.gamma_in, dev.qubit.gamma_phi};
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double expect = bloch.excited_population(times[k], 2000 * static_cast<int>(k) + 1);
        CHECK(traj.states[k].matrix()(1, 1).real() == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("free decay of an excited two-level qubit") {
    DeviceModel dev = lone_qubit(2);
    const double g1 = dev.qubit.gamma_ex + (2 * dev.qubit.n_th + 1) * dev.qubit.gamma_in;
    const double p_ss = dev.qubit.n_th * dev.qubit.gamma_in / g1;
    PulseSchedule sched;
    sched.append_idle(1.0 / g1);
    const Trajectory traj =
        evolve(dev, {dev.qubit.omega, 0.0, 0.0}, sched, qubit_basis_state(dev, 1), {0.0, 1.0 / g1});
    CHECK(traj.states[0].matrix()(1, 1).real() == doctest::Approx(1.0));
    CHECK(traj.states[1].matrix()(1, 1).real() ==
          doctest::Approx(std::exp(-1.0) * (1 - p_ss) + p_ss).epsilon(1e-6));
}

TEST_CASE("resonant Rabi frequency without a JQF") {
    DeviceModel dev = lone_qubit(3);
    const double flux = 1.5e10;
    const double omega_r = 2 * std::sqrt(dev.qubit.gamma_ex * flux);
    const double period = two_pi / omega_r;
    const double t_end = 6 * period;
    PulseSchedule sched;
    sched.append_constant(t_end, 1.0);
    std::vector<double> times, pop;
    for (int k = 0; k <= 240; ++k) times.push_back(t_end * k / 240);
    const Trajectory traj = evolve(dev, {dev.qubit.omega, flux, 0.0}, sched, qubit_basis_state(dev, 0), times);
    for (const auto& s : traj.states) pop.push_back(qubit_excitation(dev, s));
    const FitResult fit = fit_damped_sinusoid(times, pop);
    REQUIRE(fit.converged);
    CHECK(fit.value("Omega") == doctest::Approx(omega_r).epsilon(0.01));
}

TEST_CASE("propagation composes and preserves the trace") {
    DeviceModel dev = lone_qubit(3);
    TransmonParams f = dev.qubit;
    f.gamma_ex = angular(50e6);
    f.alpha = angular(-0.3e9);
    dev.jqf = f;
    dev.geometry = {0.5, dev.qubit.omega};
    const double flux = 1e10;
    PulseSchedule a, b, ab;
    a.append_constant(13e-9, 1.0);
    b.append_constant(29e-9, 1.0);
    ab.append_constant(42e-9, 1.0);
    Evolver ev(full_liouvillian_parts(dev, dev.qubit.omega, flux));
    Vector v1 = vec(qubit_basis_state(dev, 0));
    Vector v2 = v1;
    ev.apply(v1, a);
    ev.apply(v1, b);
    ev.apply(v2, ab);
    CHECK((v1 - v2).cwiseAbs().maxCoeff() < 1e-9);

    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(42e-9 * k / 20);
    const Trajectory traj = evolve(ev, dev.dims(), ab, qubit_basis_state(dev, 0), times);
    for (const auto& s : traj.states) CHECK(std::abs(s.trace() - 1.0) < 1e-8);
}

TEST_CASE("long evolution relaxes to the steady state") {
    DeviceModel dev = lone_qubit(3);
    const double flux = 1e9;
    const DriveParams drive{dev.qubit.omega, flux, 0.0};
    const double g1 = dev.qubit.gamma_ex + dev.qubit.gamma_in;
    PulseSchedule sched;
    sched.append_constant(20.0 / g1 * 2.0, 1.0);
    const double t_end = sched.total_duration();
    const Trajectory traj = evolve(dev, drive, sched, qubit_basis_state(dev, 0), {t_end});
    const DensityMatrix ss = steady_state(full_liouvillian(dev, drive), dev.dims());
    CHECK(trace_distance(traj.states[0].matrix(), ss.matrix()) < 1e-6);
}

TEST_CASE("non-physical evolution reports the failure time") {
    const Operator b = annihilation(2);
    LiouvillianParts parts;
    parts.base = Complex(-1e6) * dissipator(b);
    parts.x = parts.y = Liouvillian::zero(2);
    Evolver ev(parts);
    PulseSchedule sched;
    sched.append_idle(5e-6);
    std::vector<double> times{0.0, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6};
    try {
        evolve(ev, {2}, sched, DensityMatrix::basis_state({2}, 1), times);
        FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
        CHECK(e.time() > 0.0);
    }
}

TEST_CASE("pulse schedules") {
    PulseSchedule s;
    s.sample_dt = 1e-9;
    s.append_idle(10e-9);
    s.append_idle(0.0);
    CHECK(s.segments.size() == 1);
    s.append_gaussian(20e-9, 5e-9, 1.0, 0.0);
    CHECK(s.total_duration() == doctest::Approx(30e-9).epsilon(1e-12));

    PulseSchedule ft;
    ft.sample_dt = 1e-9;
    ft.append_flat_top(100e-9, 5e-9, 1.0, 0.3, 64);
    CHECK(ft.total_duration() == doctest::Approx(120e-9).epsilon(1e-12));
    std::set<double> amps;
    for (const auto& seg : ft.segments) {
        amps.insert(seg.amplitude);
        CHECK(std::abs(std::round(seg.amplitude * 64) - seg.amplitude * 64) < 1e-9);
    }
    CHECK(amps.size() <= 65);

    PulseSchedule bad;
    bad.segments.push_back({-1e-9, 1.0, 0.0});
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("propagator cache returns the same matrix for equal keys") {
    DeviceModel dev = lone_qubit(2);
    Evolver ev(full_liouvillian_parts(dev, dev.qubit.omega, 1e9));
    const Matrix& p1 = ev.propagator(0.5, 0.1, 3e-9);
    const Matrix& p2 = ev.propagator(0.5, 0.1, 3e-9);
    CHECK(&p1 == &p2);
    CHECK((p1 - propagator(ev.parts().at(0.5, 0.1), 3e-9)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("truncation convergence") {
    DeviceModel dev;
    dev.qubit = lone_qubit(2).qubit;
    TransmonParams f;
    f.omega = dev.qubit.omega;
    f.alpha = angular(-100e6);
    f.gamma_ex = angular(100e6);
    f.levels = 2;
    dev.jqf = f;
    dev.geometry = {0.5, dev.qubit.omega};
    auto jqf_photons = [](double flux) {
        return [flux](const DeviceModel& d) {
            const DensityMatrix rho = steady_state(full_liouvillian(d, {d.qubit.omega, flux, 0.0}), d.dims());
            return expectation(rho, jqf_lowering(d).adjoint() * jqf_lowering(d)).real();
        };
    };
    const ConvergenceResult weak = convergence_check(dev, jqf_photons(1e4), 2, 8);
    CHECK(weak.jqf_levels == 2);
    const ConvergenceResult strong = convergence_check(dev, jqf_photons(1e9), 2, 8);
    CHECK(strong.jqf_levels >= 3);

    dev.jqf->alpha = 0.0;
    CHECK_THROWS_AS(convergence_check(dev, jqf_photons(1e12), 2, 3), TruncationFailure);
}
