#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "jqfsim/dynamics.hpp"
#include "jqfsim/fitting.hpp"
#include "jqfsim/model.hpp"

namespace jqfsim {

struct Curve {
    std::vector<double> x;
    std::vector<double> y;
};

struct DecayResult {
    Curve curve;  // delay (s) vs qubit excitation
    FitResult fit;
    double time = 0.0;  // s
};

struct RamseyResult {
    Curve curve;
    FitResult fit;
    double t2_star = 0.0;
    double freq_shift = 0.0;  // rad/s, qubit frequency minus bare omega_q
};

struct RabiOptions {
    double edge_sigma = 5e-9;  // Gaussian edges of the square pulse; 0 for a hard square
    double sample_dt = 1e-9;
    int quantization = 64;
    bool approximative = false;  // use the two-level approximative model
};

struct RabiResult {
    Curve curve;  // flat-top duration (s) vs qubit excitation
    FitResult fit;
    double rabi_freq = 0.0;   // rad/s
    double rabi_decay = 0.0;  // s
    double error_per_cycle = 0.0;
};

/// Ideal |1> preparation, free decay, exponential fit.
DecayResult t1_experiment(const DeviceModel& device, const std::vector<double>& delays);
/// Ideal pi/2 - delay - pi/2 in a frame below the qubit by artificial_detuning.
RamseyResult ramsey_experiment(const DeviceModel& device, const std::vector<double>& delays,
                               double artificial_detuning);
/// Ideal pi/2 - t/2 - pi - t/2 - pi/2.
DecayResult echo_experiment(const DeviceModel& device, const std::vector<double>& delays);

/// Runs `run` on a uniform grid over 5 guess and widens the window to five
/// fitted times while the fitted time exceeds a third of it.
DecayResult adaptive_decay(const std::function<DecayResult(const std::vector<double>&)>& run, double guess,
                           std::size_t points);
/// Ramsey with the same window rule; the artificial detuning (0 = automatic)
/// and point count are chosen to resolve at least 16 points per period.
RamseyResult adaptive_ramsey(const DeviceModel& device, double guess, std::size_t points,
                             double artificial_detuning = 0.0);
/// Decay-time guesses from the bare qubit rates.
double relaxation_guess(const TransmonParams& qubit);
double coherence_guess(const TransmonParams& qubit);

RabiResult rabi_experiment(const DeviceModel& device, double photon_flux, const std::vector<double>& durations,
                           const RabiOptions& options = {});
/// Duration grid resolving the expected Rabi oscillation and its decay.
std::vector<double> default_rabi_durations(const DeviceModel& device, double photon_flux);

/// Conventional bound 2 sqrt(ndot / T1) in rad/s.
double rabi_upper_bound(double photon_flux, double t1);

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// One row per axis point; column names carry their unit (_s, _hz, or none).
struct SweepResult {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> errors;  // empty string when the point succeeded
    std::map<std::string, double> scalars;

    double at(std::size_t row, const std::string& column) const;
    std::vector<double> column(const std::string& name) const;
};

struct SweepOptions {
    int threads = 1;
    std::size_t points = 301;            // samples per decay curve
    double ramsey_detuning = 0.0;        // rad/s; 0 selects a default
    bool coherence = true;               // include T2E and T2*
};

/// Per JQF detuning: T1, T2E, T2*, qubit frequency shift, thermal population
/// and the radiative rate gamma_ex^q (qubit intrinsic channels removed).
SweepResult sweep_detuning(const DeviceModel& device, const std::vector<double>& detunings,
                           const SweepOptions& options = {});

/// Rabi frequency and decay vs photon flux.
SweepResult sweep_amplitude(const DeviceModel& device, const std::vector<double>& photon_fluxes,
                            const RabiOptions& rabi = {}, int threads = 1);

struct AnharmonicityOptions {
    int start_levels = 4;
    int max_levels = 16;
    double rel_tol = 0.005;
    int threads = 1;
    RabiOptions rabi{0.0, 1e-9, 0, false};
};

/// Rabi decay and error per cycle vs JQF anharmonicity, with the truncation
/// of the JQF converged per point. Scalars hold the no-JQF, two-level-JQF and
/// approximative-model references.
SweepResult sweep_anharmonicity(const DeviceModel& base, const std::vector<double>& alphas, double photon_flux,
                                const AnharmonicityOptions& options = {});

/// Rabi frequency at photon_flux and T1 per JQF detuning, with the
/// conventional bound.
SweepResult tradeoff(const DeviceModel& device, const std::vector<double>& detunings, double photon_flux,
                     const RabiOptions& rabi = {}, int threads = 1);

struct RBConfig {
    std::vector<int> sequence_lengths;
    int sequences_per_length = 30;
    double pulse_sigma = 5e-9;
    double pulse_truncation = 4.0;       // pulse duration in units of sigma
    double pulse_interval_factor = 2.0;  // slot length / pulse duration
    double sample_dt = 0.25e-9;
    std::uint64_t rng_seed = 1;
    bool lossless = false;  // drop every dissipator (keeps the drive coupling)

    void validate() const;
    double pulse_duration() const { return pulse_truncation * pulse_sigma; }
};

std::vector<int> default_rb_lengths();

struct RBResult {
    std::vector<int> lengths;
    std::vector<double> survival;        // mean over sequences
    std::vector<double> survival_std;
    std::vector<double> ideal_survival;  // coherence-limit schedule
    FitResult fit;
    FitResult ideal_fit;
    double avg_gate_error = 0.0;
    double coherence_limit = 0.0;
    double pi_amplitude = 0.0;  // calibrated peak sqrt(photon flux)
    /// First sequence per length (Clifford indices) for reproducibility checks.
    std::vector<std::vector<int>> first_sequences;
};

/// Clifford index sequence for (length index, sequence index) under seed.
std::vector<int> rb_sequence(std::uint64_t seed, std::size_t length_index, std::size_t sequence_index, int length);

/// Peak sqrt(photon flux) of a Gaussian pi pulse, calibrated on the isolated
/// lossless qubit.
double calibrate_pi_amplitude(const DeviceModel& device, const RBConfig& rb);

RBResult randomized_benchmarking(const DeviceModel& device, const RBConfig& rb);

/// Runs f(i) for i in [0, n) on up to `threads` worker threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace jqfsim
