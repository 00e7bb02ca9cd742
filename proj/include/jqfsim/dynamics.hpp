#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "jqfsim/linalg.hpp"
#include "jqfsim/model.hpp"

namespace jqfsim {

struct Segment {
    double duration = 0.0;   // s
    double amplitude = 0.0;  // scales sqrt(photon flux)
    double phase = 0.0;      // rad
};

struct PulseSchedule {
    std::vector<Segment> segments;
    double sample_dt = 1e-9;

    void validate() const;
    double total_duration() const;

    void append_idle(double duration);
    void append_constant(double duration, double amplitude, double phase = 0.0);
    /// Gaussian of standard deviation sigma spanning `duration` (centred),
    /// sampled piecewise-constant at sample_dt. quantization > 0 rounds the
    /// amplitude to multiples of peak/quantization.
    void append_gaussian(double duration, double sigma, double peak, double phase, int quantization = 0);
    /// Square pulse of length `flat` with Gaussian edges of width sigma, each
    /// edge 2 sigma long.
    void append_flat_top(double flat, double sigma, double peak, double phase, int quantization = 64);
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
};

DensityMatrix steady_state(const Liouvillian& l, const std::vector<int>& dims);

Complex expectation(const DensityMatrix& rho, const Operator& op);

/// Projector onto the qubit ground state in the device space.
Operator qubit_ground_projector(const DeviceModel& device);
/// 1 - P(qubit in |0>).
double qubit_excitation(const DeviceModel& device, const DensityMatrix& rho);

/// |k_q> (x) |0_f> as a density matrix.
DensityMatrix qubit_basis_state(const DeviceModel& device, int k);

/// Piecewise-constant integrator with a propagator cache keyed by
/// (amplitude, phase, duration). Not thread-safe; use one per run.
class Evolver {
public:
    explicit Evolver(LiouvillianParts parts, std::size_t max_cache = 512);

    const Matrix& propagator(double amplitude, double phase, double dt);
    void advance(Vector& v, double amplitude, double phase, double dt);
    void apply(Vector& v, const PulseSchedule& schedule);
    /// Superoperator of a whole schedule.
    Matrix schedule_superop(const PulseSchedule& schedule);

    const LiouvillianParts& parts() const noexcept { return parts_; }
    Eigen::Index dim() const noexcept { return parts_.base.dim; }

private:
    using Key = std::tuple<double, double, std::int64_t>;
    LiouvillianParts parts_;
    std::size_t max_cache_;
    std::map<Key, Matrix> cache_;
};

/// Time quantum used for propagator cache keys (zeptoseconds).
std::int64_t quantize_time(double dt);

Trajectory evolve(Evolver& evolver, const std::vector<int>& dims, const PulseSchedule& schedule,
                  const DensityMatrix& rho0, const std::vector<double>& sample_times);
Trajectory evolve(const DeviceModel& device, const DriveParams& drive, const PulseSchedule& schedule,
                  const DensityMatrix& rho0, const std::vector<double>& sample_times);

struct ConvergenceResult {
    int qubit_levels = 0;
    int jqf_levels = 0;
    double value = 0.0;
};

/// Raises JQF (then qubit) truncation until the observable changes by less
/// than rel_tol between successive levels.
ConvergenceResult convergence_check(const DeviceModel& device,
                                    const std::function<double(const DeviceModel&)>& observable,
                                    int start_levels, int max_levels = 8, double rel_tol = 0.005);

}  // namespace jqfsim
