#include "jqfsim/clifford.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <numbers>

#include "jqfsim/errors.hpp"

namespace jqfsim {

namespace {

constexpr double pi = std::numbers::pi;

// Equal up to a global phase.
bool same_gate(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-9;
}

std::vector<Clifford> build_group() {
    std::vector<Clifford> group;
    group.push_back({Eigen::Matrix2cd::Identity(), {Generator::idle}});
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
        const std::size_t k = queue.front();
        queue.pop_front();
        for (Generator g : pulse_generators) {
            const Eigen::Matrix2cd u = generator_unitary(g) * group[k].unitary;
            bool known = false;
            for (const auto& c : group) {
                if (same_gate(c.unitary, u)) {
                    known = true;
                    break;
                }
            }
            if (known) continue;
            Clifford c;
            c.unitary = u;
            if (k != 0) c.pulses = group[k].pulses;
            c.pulses.push_back(g);
            group.push_back(std::move(c));
            queue.push_back(group.size() - 1);
        }
    }
    if (group.size() != 24) throw NumericalFailure("clifford_group: expected 24 elements");
    return group;
}

}  // namespace

GeneratorPulse generator_pulse(Generator g) {
    switch (g) {
        case Generator::idle: return {0.0, 0.0};
        case Generator::x: return {pi, 0.0};
        case Generator::y: return {pi, 0.5 * pi};
        case Generator::x_half: return {0.5 * pi, 0.0};
        case Generator::x_minus_half: return {0.5 * pi, pi};
        case Generator::y_half: return {0.5 * pi, 0.5 * pi};
        case Generator::y_minus_half: return {0.5 * pi, 1.5 * pi};
    }
    return {};
}

std::string generator_name(Generator g) {
    switch (g) {
        case Generator::idle: return "I";
        case Generator::x: return "X";
        case Generator::y: return "Y";
        case Generator::x_half: return "X/2";
        case Generator::x_minus_half: return "-X/2";
        case Generator::y_half: return "Y/2";
        case Generator::y_minus_half: return "-Y/2";
    }
    return "?";
}

Eigen::Matrix2cd rotation(double angle, double phase) {
    const std::complex<double> i{0.0, 1.0};
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    Eigen::Matrix2cd u;
    // sigma_x cos(phase) + sigma_y sin(phase) = [[0, e^{-i phase}], [e^{i phase}, 0]]
    u << c, -i * s * std::exp(-i * phase), -i * s * std::exp(i * phase), c;
    return u;
}

Eigen::Matrix2cd generator_unitary(Generator g) {
    const GeneratorPulse p = generator_pulse(g);
    return rotation(p.angle, p.phase);
}

const std::vector<Clifford>& clifford_group() {
    static const std::vector<Clifford> group = build_group();
    return group;
}

std::size_t find_clifford(const Eigen::Matrix2cd& u) {
    const auto& group = clifford_group();
    for (std::size_t k = 0; k < group.size(); ++k) {
        if (same_gate(group[k].unitary, u)) return k;
    }
    throw InvalidArgument("find_clifford: unitary is not a Clifford");
}

}  // namespace jqfsim
