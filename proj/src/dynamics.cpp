#include "jqfsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jqfsim/errors.hpp"

namespace jqfsim {

namespace {

constexpr double time_quantum = 1e-21;

void check_state(const Vector& v, Eigen::Index dim, const std::vector<int>& dims, double t) {
    const DensityMatrix rho(dims, unvec(v, dim));
    try {
        rho.check(1e-8, 1e-8, -1e-8);
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string(e.what()) + " at t=" + std::to_string(t), t);
    }
}

}  // namespace

void PulseSchedule::validate() const {
    if (!(sample_dt > 0.0)) throw InvalidArgument("PulseSchedule: sample_dt must be positive");
    for (const auto& s : segments) {
        if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
            throw InvalidArgument("PulseSchedule: segment durations must be positive and finite");
        }
        if (!(s.amplitude >= 0.0) || !std::isfinite(s.amplitude)) {
            throw InvalidArgument("PulseSchedule: amplitude scale must be >= 0");
        }
    }
}

double PulseSchedule::total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
}

void PulseSchedule::append_idle(double duration) {
    if (duration > 0.0) segments.push_back({duration, 0.0, 0.0});
}

void PulseSchedule::append_constant(double duration, double amplitude, double phase) {
    if (duration > 0.0) segments.push_back({duration, amplitude, phase});
}

void PulseSchedule::append_gaussian(double duration, double sigma, double peak, double phase, int quantization) {
    if (!(duration > 0.0) || !(sigma > 0.0)) throw InvalidArgument("append_gaussian: duration and sigma must be positive");
    const int n = std::max(1, static_cast<int>(std::lround(duration / sample_dt)));
    const double dt = duration / n;
    const double centre = 0.5 * duration;
    for (int k = 0; k < n; ++k) {
        const double t = (k + 0.5) * dt - centre;
        double a = std::exp(-0.5 * t * t / (sigma * sigma));
        if (quantization > 0) a = std::round(a * quantization) / quantization;
        a *= peak;
        if (!segments.empty() && segments.back().amplitude == a && segments.back().phase == phase &&
            quantization > 0) {
            segments.back().duration += dt;
        } else {
            segments.push_back({dt, a, phase});
        }
    }
}

void PulseSchedule::append_flat_top(double flat, double sigma, double peak, double phase, int quantization) {
    if (sigma > 0.0) {
        const int n = std::max(1, static_cast<int>(std::lround(2.0 * sigma / sample_dt)));
        const double dt = 2.0 * sigma / n;
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * sigma - (k + 0.5) * dt;
            double a = std::exp(-0.5 * t * t / (sigma * sigma));
            if (quantization > 0) a = std::round(a * quantization) / quantization;
            segments.push_back({dt, a * peak, phase});
        }
    }
    append_constant(flat, peak, phase);
    if (sigma > 0.0) {
        const int n = std::max(1, static_cast<int>(std::lround(2.0 * sigma / sample_dt)));
        const double dt = 2.0 * sigma / n;
        for (int k = 0; k < n; ++k) {
            const double t = (k + 0.5) * dt;
            double a = std::exp(-0.5 * t * t / (sigma * sigma));
            if (quantization > 0) a = std::round(a * quantization) / quantization;
            segments.push_back({dt, a * peak, phase});
        }
    }
}

DensityMatrix steady_state(const Liouvillian& l, const std::vector<int>& dims) {
    const Eigen::Index d = l.dim;
    const double scale = l.data.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw DegenerateSteadyState("steady_state: zero Liouvillian has no unique steady state");
    Matrix m = l.data;
    m.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) m(0, i + i * d) = scale;
    Vector rhs = Vector::Zero(d * d);
    rhs(0) = scale;

    Eigen::PartialPivLU<Matrix> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        throw DegenerateSteadyState("steady_state: kernel of L is not one-dimensional (rcond=" +
                                    std::to_string(rcond) + ")");
    }
    Vector x = lu.solve(rhs);
    for (int refine = 0; refine < 2; ++refine) {
        const Vector r = rhs - m * x;
        if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) break;
        x += lu.solve(r);
    }
    Matrix rho = unvec(x, d);
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace();
    return {dims, rho};
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
    if (rho.dimension() != op.dimension()) throw InvalidArgument("expectation: dimension mismatch");
    return (op.matrix().transpose().cwiseProduct(rho.matrix())).sum();
}

Operator qubit_ground_projector(const DeviceModel& device) {
    Matrix p = Matrix::Zero(device.qubit.levels, device.qubit.levels);
    p(0, 0) = 1.0;
    const auto dims = device.dims();
    return embed(Operator({device.qubit.levels}, p), 0, dims);
}

double qubit_excitation(const DeviceModel& device, const DensityMatrix& rho) {
    const Eigen::Index nf = device.jqf ? device.jqf->levels : 1;
    double ground = 0.0;
    for (Eigen::Index k = 0; k < nf; ++k) ground += rho.matrix()(k, k).real();
    return 1.0 - ground;
}

DensityMatrix qubit_basis_state(const DeviceModel& device, int k) {
    if (k < 0 || k >= device.qubit.levels) throw InvalidArgument("qubit_basis_state: level out of range");
    const Eigen::Index nf = device.jqf ? device.jqf->levels : 1;
    return DensityMatrix::basis_state(device.dims(), k * nf);
}

std::int64_t quantize_time(double dt) { return std::llround(dt / time_quantum); }

Evolver::Evolver(LiouvillianParts parts, std::size_t max_cache) : parts_(std::move(parts)), max_cache_(max_cache) {}

const Matrix& Evolver::propagator(double amplitude, double phase, double dt) {
    const Key key{amplitude, amplitude == 0.0 ? 0.0 : phase, quantize_time(dt)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= max_cache_) cache_.clear();
    const double t = static_cast<double>(std::get<2>(key)) * time_quantum;
    Matrix p = jqfsim::propagator(parts_.at(amplitude, std::get<1>(key)), t);
    return cache_.emplace(key, std::move(p)).first->second;
}

void Evolver::advance(Vector& v, double amplitude, double phase, double dt) {
    if (quantize_time(dt) <= 0) return;
    v = propagator(amplitude, phase, dt) * v;
}

void Evolver::apply(Vector& v, const PulseSchedule& schedule) {
    for (const auto& s : schedule.segments) advance(v, s.amplitude, s.phase, s.duration);
}

Matrix Evolver::schedule_superop(const PulseSchedule& schedule) {
    const Eigen::Index n = dim() * dim();
    Matrix m = Matrix::Identity(n, n);
    for (const auto& s : schedule.segments) {
        if (quantize_time(s.duration) <= 0) continue;
        m = propagator(s.amplitude, s.phase, s.duration) * m;
    }
    return m;
}

Trajectory evolve(Evolver& evolver, const std::vector<int>& dims, const PulseSchedule& schedule,
                  const DensityMatrix& rho0, const std::vector<double>& sample_times) {
    schedule.validate();
    const Eigen::Index d = evolver.dim();
    if (rho0.dimension() != d) throw InvalidArgument("evolve: initial state dimension mismatch");
    const double total = schedule.total_duration();
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        if (sample_times[k] < 0.0 || sample_times[k] > total * (1.0 + 1e-12) + 1e-18) {
            throw InvalidArgument("evolve: sample time outside the schedule");
        }
        if (k > 0 && !(sample_times[k] > sample_times[k - 1])) {
            throw InvalidArgument("evolve: sample times must be strictly increasing");
        }
    }

    Trajectory traj;
    Vector v = vec(rho0);
    double now = 0.0;
    std::size_t next = 0;
    auto record = [&](double t) {
        check_state(v, d, dims, t);
        traj.times.push_back(t);
        traj.states.emplace_back(dims, unvec(v, d));
    };
    while (next < sample_times.size() && sample_times[next] <= 0.0) record(sample_times[next++]);

    double seg_start = 0.0;
    for (const auto& s : schedule.segments) {
        const double seg_end = seg_start + s.duration;
        while (next < sample_times.size() && sample_times[next] <= seg_end * (1.0 + 1e-12)) {
            const double t = sample_times[next++];
            evolver.advance(v, s.amplitude, s.phase, t - now);
            now = t;
            record(t);
        }
        evolver.advance(v, s.amplitude, s.phase, seg_end - now);
        now = seg_end;
        seg_start = seg_end;
    }
    return traj;
}

Trajectory evolve(const DeviceModel& device, const DriveParams& drive, const PulseSchedule& schedule,
                  const DensityMatrix& rho0, const std::vector<double>& sample_times) {
    Evolver evolver(full_liouvillian_parts(device, drive.omega_d, drive.photon_flux));
    return evolve(evolver, device.dims(), schedule, rho0, sample_times);
}

ConvergenceResult convergence_check(const DeviceModel& device,
                                    const std::function<double(const DeviceModel&)>& observable,
                                    int start_levels, int max_levels, double rel_tol) {
    if (start_levels < 2) throw InvalidArgument("convergence_check: start_levels must be >= 2");
    if (max_levels < start_levels) throw InvalidArgument("convergence_check: max_levels < start_levels");
    DeviceModel dev = device;

    auto converge = [&](int& levels, const char* which) {
        levels = start_levels;
        double value = observable(dev);
        while (true) {
            if (levels + 1 > max_levels) {
                throw TruncationFailure(std::string("convergence_check: ") + which + " truncation did not converge by " +
                                        std::to_string(max_levels) + " levels");
            }
            ++levels;
            const double next = observable(dev);
            const double denom = std::max(std::abs(value), 1e-300);
            if (std::abs(next - value) / denom < rel_tol) {
                --levels;
                return value;
            }
            value = next;
        }
    };

    ConvergenceResult out;
    double value = 0.0;
    if (dev.jqf) {
        value = converge(dev.jqf->levels, "JQF");
        out.jqf_levels = dev.jqf->levels;
    }
    value = converge(dev.qubit.levels, "qubit");
    out.qubit_levels = dev.qubit.levels;
    out.value = value;
    return out;
}

}  // namespace jqfsim
