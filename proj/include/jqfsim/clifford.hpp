#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jqfsim {

/// Physical pulses used to compile single-qubit Cliffords. Idle occupies one
/// pulse slot without driving.
enum class Generator { idle, x, y, x_half, x_minus_half, y_half, y_minus_half };

inline constexpr std::array<Generator, 6> pulse_generators = {Generator::x,      Generator::y,
                                                              Generator::x_half, Generator::x_minus_half,
                                                              Generator::y_half, Generator::y_minus_half};

struct GeneratorPulse {
    double angle = 0.0;  // rotation angle
    double phase = 0.0;  // drive phase: 0 -> +x, pi/2 -> +y
};
GeneratorPulse generator_pulse(Generator g);
std::string generator_name(Generator g);

/// exp(-i angle/2 (cos(phase) sigma_x + sin(phase) sigma_y)) in the (|0>, |1>) basis.
Eigen::Matrix2cd rotation(double angle, double phase);
Eigen::Matrix2cd generator_unitary(Generator g);

struct Clifford {
    Eigen::Matrix2cd unitary;
    std::vector<Generator> pulses;  // applied left to right
};

/// The 24 single-qubit Cliffords, each with a shortest decomposition into
/// generator pulses. Element 0 is the identity (a single idle slot).
const std::vector<Clifford>& clifford_group();

/// Index of the Clifford equal to u up to global phase; throws if none.
std::size_t find_clifford(const Eigen::Matrix2cd& u);

}  // namespace jqfsim
