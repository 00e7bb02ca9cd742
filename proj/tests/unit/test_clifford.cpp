#include <doctest.h>

#include <cmath>
#include <numbers>

#include "jqfsim/clifford.hpp"
#include "jqfsim/errors.hpp"

using namespace jqfsim;
using Complex = std::complex<double>;

namespace {

bool equal_up_to_phase(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-10;
}

}  // namespace

TEST_CASE("rotations") {
    const Eigen::Matrix2cd x = rotation(std::numbers::pi, 0.0);
    Eigen::Matrix2cd expect;
    expect << 0.0, Complex(0, -1), Complex(0, -1), 0.0;
    CHECK((x - expect).norm() < 1e-12);
    CHECK((rotation(0.3, 1.1) * rotation(0.3, 1.1).adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
    CHECK(equal_up_to_phase(generator_unitary(Generator::y_half) * generator_unitary(Generator::y_half),
                            generator_unitary(Generator::y)));
}

TEST_CASE("the Clifford group has 24 distinct elements and is closed") {
    const auto& group = clifford_group();
    REQUIRE(group.size() == 24);
    CHECK(group[0].pulses == std::vector<Generator>{Generator::idle});
    CHECK(equal_up_to_phase(group[0].unitary, Eigen::Matrix2cd::Identity()));
    for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) CHECK(!equal_up_to_phase(group[i].unitary, group[j].unitary));
    }
    for (const auto& a : group) {
        for (const auto& b : group) CHECK_NOTHROW(find_clifford(a.unitary * b.unitary));
    }
}

TEST_CASE("decompositions reproduce their unitaries") {
    double total = 0.0;
    for (const auto& c : clifford_group()) {
        Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
        for (Generator g : c.pulses) u = generator_unitary(g) * u;
        CHECK(equal_up_to_phase(u, c.unitary));
        total += static_cast<double>(c.pulses.size());
    }
    // Shortest words over {X, Y, +-X/2, +-Y/2} with the identity as one idle
    // slot: 7 one-slot, 13 two-pulse and 4 three-pulse elements.
    CHECK(total / 24.0 == doctest::Approx(1.875));
}

TEST_CASE("non-Clifford unitaries are rejected") {
    CHECK_THROWS_AS(find_clifford(rotation(std::numbers::pi / 4, 0.0)), InvalidArgument);
}
