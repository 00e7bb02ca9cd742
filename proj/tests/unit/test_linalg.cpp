#include <doctest.h>

#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "jqfsim/errors.hpp"
#include "jqfsim/linalg.hpp"

using namespace jqfsim;

namespace {

Matrix random_matrix(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

Matrix random_density(Eigen::Index n, std::mt19937_64& rng) {
    const Matrix a = random_matrix(n, rng);
    Matrix rho = a * a.adjoint();
    return rho / rho.trace();
}

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("annihilation ladder entries") {
    const Operator b2 = annihilation(2);
    Matrix expect2 = Matrix::Zero(2, 2);
    expect2(0, 1) = 1.0;
    CHECK(max_diff(b2.matrix(), expect2) == 0.0);

    const Operator b3 = annihilation(3);
    CHECK(b3.matrix()(0, 1) == Complex(1.0));
    CHECK(b3.matrix()(1, 2) == Complex(std::sqrt(2.0)));
    CHECK(b3.matrix().cwiseAbs().sum() == doctest::Approx(1.0 + std::sqrt(2.0)));

    const Operator b4 = annihilation(4);
    const Matrix n = b4.matrix().adjoint() * b4.matrix();
    Matrix diag = Matrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) diag(k, k) = k;
    CHECK(max_diff(n, diag) < 1e-15);

    CHECK_THROWS_AS(annihilation(1), InvalidArgument);
}

TEST_CASE("ladder commutator in truncation") {
    for (int levels : {2, 3, 5, 8}) {
        const Matrix b = annihilation(levels).matrix();
        Matrix expect = Matrix::Identity(levels, levels);
        expect(levels - 1, levels - 1) -= static_cast<double>(levels);
        CHECK(max_diff(b * b.adjoint() - b.adjoint() * b, expect) < 1e-14);
    }
}

TEST_CASE("embed") {
    const std::vector<int> dims{2, 2};
    const Operator sm = annihilation(2);
    const Operator e = embed(sm, 0, dims);
    CHECK(max_diff(e.matrix(), kron(sm.matrix(), Matrix::Identity(2, 2))) == 0.0);

    const std::vector<int> dims3{3, 4, 2};
    const Operator id = embed(Operator::identity({4}), 1, dims3);
    CHECK(max_diff(id.matrix(), Matrix::Identity(24, 24)) == 0.0);

    const std::vector<int> d33{3, 3};
    const Matrix bq = embed(annihilation(3), 0, d33).matrix();
    const Matrix bf = embed(annihilation(3), 1, d33).matrix();
    CHECK(max_diff(bq * bf, bf * bq) == 0.0);
    CHECK(max_diff(bq * bf.adjoint(), bf.adjoint() * bq) == 0.0);

    CHECK_THROWS_AS(embed(sm, 2, dims), InvalidArgument);
    CHECK_THROWS_AS(embed(annihilation(3), 0, dims), InvalidArgument);
}

TEST_CASE("operator construction rejects size mismatch") {
    CHECK_THROWS_AS(Operator({2, 3}, Matrix::Zero(5, 5)), InvalidArgument);
    CHECK_THROWS_AS(Operator({2}, Matrix::Zero(2, 2)) + Operator({3}, Matrix::Zero(3, 3)), InvalidArgument);
}

TEST_CASE("dissipator pure decay") {
    const Operator sm = annihilation(2);
    const Liouvillian d = dissipator(sm);
    const Matrix rho = DensityMatrix::basis_state({2}, 1).matrix();
    const Matrix out = unvec(d.apply(vec(rho)), 2);
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = -1.0;
    CHECK(max_diff(out, expect) < 1e-15);

    const Matrix g = DensityMatrix::basis_state({2}, 0).matrix();
    CHECK(unvec(d.apply(vec(g)), 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dissipator matches direct evaluation on random inputs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(3, rng);
        const Matrix b = random_matrix(3, rng);
        const Matrix rho = random_density(3, rng);
        const Matrix adb = a.adjoint() * b;
        const Matrix direct = b * rho * a.adjoint() - 0.5 * (adb * rho + rho * adb);
        const Liouvillian d = dissipator_matrix(Operator({3}, a), Operator({3}, b));
        CHECK(max_diff(unvec(d.apply(vec(rho)), 3), direct) < 1e-12);
    }
    CHECK_THROWS_AS(dissipator_matrix(annihilation(2), annihilation(3)), InvalidArgument);
}

TEST_CASE("commutator superoperator") {
    CHECK(commutator_superop(Operator::zero({3})).data.cwiseAbs().maxCoeff() == 0.0);

    Matrix hd = Matrix::Zero(3, 3);
    hd.diagonal() << 0.3, -1.2, 2.0;
    Matrix rd = Matrix::Zero(3, 3);
    rd.diagonal() << 0.5, 0.3, 0.2;
    CHECK(commutator_superop(Operator({3}, hd)).apply(vec(rd)).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(4, rng);
        const Matrix h = a + a.adjoint();
        const Matrix rho = random_density(4, rng);
        const Matrix direct = -I * (h * rho - rho * h);
        const Liouvillian c = commutator_superop(Operator({4}, h));
        CHECK(max_diff(unvec(c.apply(vec(rho)), 4), direct) < 1e-12);
    }
    Matrix nh = Matrix::Zero(2, 2);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(commutator_superop(Operator({2}, nh)), InvalidArgument);
}

TEST_CASE("trace preservation of assembled Liouvillian") {
    std::mt19937_64 rng(3);
    const std::vector<int> dims{3, 3};
    const Operator bq = embed(annihilation(3), 0, dims);
    const Operator bf = embed(annihilation(3), 1, dims);
    const Matrix a = random_matrix(9, rng);
    Liouvillian l = commutator_superop(Operator(dims, a + a.adjoint()));
    const Complex g{0.3, -0.7};
    l += dissipator(bq);
    l += 2.0 * dissipator(bf);
    l += g * dissipator_matrix(bq, bf);
    l += std::conj(g) * dissipator_matrix(bf, bq);
    l += dissipator(bq.adjoint() * bq);
    CHECK(l.trace_preservation_error() < 1e-12);
}

TEST_CASE("propagator basics") {
    const Liouvillian l = dissipator(annihilation(3));
    CHECK(max_diff(propagator(l, 0.0), Matrix::Identity(9, 9)) == 0.0);
    CHECK_THROWS_AS(propagator(l, -1.0), InvalidArgument);

    Matrix d = Matrix::Zero(4, 4);
    d.diagonal() << -1.0, -250.0, Complex(-3.0, 40.0), 0.5;
    const Matrix e = expm(d * 0.7);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(e(k, k) - std::exp(d(k, k) * 0.7)) < 1e-12 * std::max(1.0, std::abs(e(k, k))));
    CHECK(std::abs(e(0, 1)) == 0.0);

    Matrix n = Matrix::Zero(2, 2);
    n(0, 1) = 3.5;
    const Matrix en = expm(n);
    CHECK(max_diff(en, Matrix::Identity(2, 2) + n) < 1e-14);
}

TEST_CASE("expm agrees with independent implementation across norms") {
    std::mt19937_64 rng(17);
    for (double scale : {1e-4, 0.05, 0.5, 1.5, 4.0, 30.0, 800.0}) {
        const Matrix a = random_matrix(6, rng) * (scale / 6.0);
        const Matrix ours = expm(a);
        const Matrix ref = a.exp();
        CHECK(max_diff(ours, ref) < 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("propagator composition") {
    std::mt19937_64 rng(23);
    const std::vector<int> dims{2, 3};
    const Matrix a = random_matrix(6, rng);
    Liouvillian l = commutator_superop(Operator(dims, (a + a.adjoint()) * 1e7));
    l += 2e6 * dissipator(embed(annihilation(3), 1, dims));
    l += 1e5 * dissipator(embed(annihilation(2), 0, dims));
    const double t1 = 0.37e-6, t2 = 1.1e-6;
    CHECK(max_diff(propagator(l, t1) * propagator(l, t2), propagator(l, t1 + t2)) < 1e-9);

    const SpectralPropagator sp(l);
    CHECK(max_diff(sp.at(t1 + t2), propagator(l, t1 + t2)) < 1e-9);
    const Vector v = vec(random_density(6, rng));
    CHECK((sp.apply(v, t2) - propagator(l, t2) * v).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("block-diagonal Liouvillian is propagated per block") {
    std::mt19937_64 rng(29);
    const std::vector<int> dims{3, 4};
    const Operator a = embed(annihilation(3), 0, dims), b = embed(annihilation(4), 1, dims);
    const Operator h = Complex(2e7) * (a.adjoint() * b + b.adjoint() * a) + Complex(5e6) * (a.adjoint() * a);
    Liouvillian l = commutator_superop(h);
    l += 3e6 * dissipator(b);
    l += 1e5 * dissipator(a);
    l += 2e4 * dissipator(a.adjoint());
    l += 1e4 * dissipator(a.adjoint() * a);
    const SpectralPropagator sp(l);
    CHECK(sp.block_count() > 1);
    const Vector v = vec(random_density(12, rng));
    for (double t : {0.0, 0.2e-6, 3e-6}) {
        CHECK((sp.apply(v, t) - propagator(l, t) * v).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(max_diff(sp.at(t), propagator(l, t)) < 1e-9);
    }
    CHECK(sp.eigenvalues().size() == l.data.rows());
}

TEST_CASE("density matrix checks") {
    const DensityMatrix g = DensityMatrix::basis_state({2, 2}, 0);
    CHECK_NOTHROW(g.check());
    CHECK(vec(g).size() == 16);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 0) = 1.2;
    bad(1, 1) = -0.2;
    CHECK_THROWS_AS(DensityMatrix({2}, bad).check(), NumericalFailure);
    Vector ket(2);
    ket << 1.0, I;
    const DensityMatrix p = DensityMatrix::pure({2}, ket);
    CHECK(std::abs(p.trace() - 1.0) < 1e-15);
    CHECK(std::abs(p.matrix()(1, 0) - 0.5 * I) < 1e-15);
}
