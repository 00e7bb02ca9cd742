#include "jqfsim/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "jqfsim/errors.hpp"

namespace jqfsim {

namespace {

Eigen::Index product(std::span<const int> dims) {
    return std::accumulate(dims.begin(), dims.end(), Eigen::Index{1}, std::multiplies<>());
}

void require_same_dims(const std::vector<int>& a, const std::vector<int>& b, const char* what) {
    if (a != b) throw InvalidArgument(std::string(what) + ": subsystem dimensions differ");
}

double norm1(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------- Operator

Operator::Operator(std::vector<int> dims, Matrix data) : dims_(std::move(dims)), data_(std::move(data)) {
    for (int d : dims_) {
        if (d < 1) throw InvalidArgument("Operator: subsystem dimension must be positive");
    }
    const auto n = product(dims_);
    if (data_.rows() != n || data_.cols() != n) {
        throw InvalidArgument("Operator: matrix size " + std::to_string(data_.rows()) + "x" +
                              std::to_string(data_.cols()) + " does not match product of dims " +
                              std::to_string(n));
    }
}

Operator Operator::identity(std::vector<int> dims) {
    const auto n = product(dims);
    return {std::move(dims), Matrix::Identity(n, n)};
}

Operator Operator::zero(std::vector<int> dims) {
    const auto n = product(dims);
    return {std::move(dims), Matrix::Zero(n, n)};
}

bool Operator::is_hermitian(double tol) const {
    return (data_ - data_.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, data_.cwiseAbs().maxCoeff());
}

Operator& Operator::operator+=(const Operator& rhs) {
    require_same_dims(dims_, rhs.dims_, "Operator +");
    data_ += rhs.data_;
    return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
    require_same_dims(dims_, rhs.dims_, "Operator -");
    data_ -= rhs.data_;
    return *this;
}

Operator& Operator::operator*=(Complex s) {
    data_ *= s;
    return *this;
}

Operator operator*(const Operator& lhs, const Operator& rhs) {
    require_same_dims(lhs.dims_, rhs.dims_, "Operator *");
    return {lhs.dims_, lhs.data_ * rhs.data_};
}

// ----------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(std::vector<int> dims, Matrix data) : dims_(std::move(dims)), data_(std::move(data)) {
    const auto n = product(dims_);
    if (data_.rows() != n || data_.cols() != n) {
        throw InvalidArgument("DensityMatrix: matrix size does not match product of dims");
    }
}

DensityMatrix DensityMatrix::basis_state(std::vector<int> dims, Eigen::Index index) {
    const auto n = product(dims);
    if (index < 0 || index >= n) throw InvalidArgument("DensityMatrix::basis_state: index out of range");
    Matrix m = Matrix::Zero(n, n);
    m(index, index) = 1.0;
    return {std::move(dims), std::move(m)};
}

DensityMatrix DensityMatrix::pure(std::vector<int> dims, const Vector& ket) {
    const double nrm = ket.norm();
    if (nrm == 0.0) throw InvalidArgument("DensityMatrix::pure: zero ket");
    const Vector k = ket / nrm;
    return {std::move(dims), k * k.adjoint()};
}

double DensityMatrix::hermiticity_error() const { return (data_ - data_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
    const Matrix h = 0.5 * (data_ + data_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::check(double trace_tol, double herm_tol, double positivity_tol) const {
    const Complex tr = trace();
    if (std::abs(tr - 1.0) > trace_tol) {
        throw NumericalFailure("density matrix trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    }
    if (hermiticity_error() > herm_tol) throw NumericalFailure("density matrix is not Hermitian");
    const double lmin = min_eigenvalue();
    if (lmin < positivity_tol) {
        throw NumericalFailure("density matrix has negative eigenvalue " + std::to_string(lmin));
    }
}

// -------------------------------------------------------------- Liouvillian

Liouvillian::Liouvillian(Eigen::Index hilbert_dim, Matrix m) : dim(hilbert_dim), data(std::move(m)) {
    if (data.rows() != dim * dim || data.cols() != dim * dim) {
        throw InvalidArgument("Liouvillian: matrix must be D^2 x D^2");
    }
}

Liouvillian Liouvillian::zero(Eigen::Index hilbert_dim) {
    return {hilbert_dim, Matrix::Zero(hilbert_dim * hilbert_dim, hilbert_dim * hilbert_dim)};
}

Liouvillian& Liouvillian::operator+=(const Liouvillian& rhs) {
    if (rhs.dim != dim) throw InvalidArgument("Liouvillian +: dimension mismatch");
    data += rhs.data;
    return *this;
}

Liouvillian& Liouvillian::operator*=(Complex s) {
    data *= s;
    return *this;
}

double Liouvillian::trace_preservation_error() const {
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(data.cols());
    for (Eigen::Index i = 0; i < dim; ++i) row += data.row(i + i * dim);
    const double scale = data.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return row.cwiseAbs().maxCoeff() / scale;
}

// ------------------------------------------------------------ free functions

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim) throw InvalidArgument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Vector vec(const DensityMatrix& rho) { return vec(rho.matrix()); }

Operator annihilation(int levels) {
    if (levels < 2) throw InvalidArgument("annihilation: levels must be >= 2");
    Matrix b = Matrix::Zero(levels, levels);
    for (int k = 1; k < levels; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
    return {{levels}, std::move(b)};
}

Operator embed(const Operator& op, std::size_t slot, std::span<const int> dims) {
    if (slot >= dims.size()) throw InvalidArgument("embed: slot out of range");
    if (op.dims().size() != 1 || op.dims()[0] != dims[slot]) {
        throw InvalidArgument("embed: operator dimension does not match dims[slot]");
    }
    Matrix out = Matrix::Identity(1, 1);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const Matrix factor = (k == slot) ? op.matrix() : Matrix::Identity(dims[k], dims[k]);
        out = kron(out, factor);
    }
    return {std::vector<int>(dims.begin(), dims.end()), std::move(out)};
}

Liouvillian dissipator_matrix(const Operator& a, const Operator& b) {
    require_same_dims(a.dims(), b.dims(), "dissipator_matrix");
    const auto n = a.dimension();
    const Matrix id = Matrix::Identity(n, n);
    const Matrix adb = a.matrix().adjoint() * b.matrix();
    // vec(X rho Y) = (Y^T (x) X) vec(rho)
    Matrix m = kron(a.matrix().conjugate(), b.matrix());
    m -= 0.5 * kron(id, adb);
    m -= 0.5 * kron(adb.transpose(), id);
    return {n, std::move(m)};
}

Liouvillian commutator_superop(const Operator& h) {
    if (!h.is_hermitian(1e-10)) throw InvalidArgument("commutator_superop: H is not Hermitian");
    const auto n = h.dimension();
    const Matrix id = Matrix::Identity(n, n);
    Matrix m = -I * (kron(id, h.matrix()) - kron(h.matrix().transpose(), id));
    return {n, std::move(m)};
}

// Scaling and squaring with Pade degrees 3..13 (Higham 2005).
Matrix expm(const Matrix& a) {
    const auto n = a.rows();
    if (a.cols() != n) throw InvalidArgument("expm: matrix must be square");
    const Matrix id = Matrix::Identity(n, n);
    if (n == 0) return a;

    static constexpr std::array<double, 4> theta = {1.495585217958292e-2, 2.539398330063230e-1,
                                                    9.504178996162932e-1, 2.097847961257068e0};
    static constexpr double theta13 = 5.371920351148152e0;
    static constexpr double b3[] = {120., 60., 12., 1.};
    static constexpr double b5[] = {30240., 15120., 3360., 420., 30., 1.};
    static constexpr double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
    static constexpr double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                    2162160.,     110880.,     3960.,       90.,        1.};
    static constexpr double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                     1187353796428800.,  129060195264000.,   10559470521600.,
                                     670442572800.,      33522128640.,       1323241920.,
                                     40840800.,          960960.,            16380.,
                                     182.,               1.};

    auto solve = [&](const Matrix& u, const Matrix& v) -> Matrix {
        return (v - u).partialPivLu().solve(v + u);
    };

    const double nrm = norm1(a);
    if (!std::isfinite(nrm)) throw NumericalFailure("expm: non-finite matrix");

    const double* low_coeffs[] = {b3, b5, b7, b9};
    for (int k = 0; k < 4; ++k) {
        if (nrm <= theta[static_cast<std::size_t>(k)]) {
            const int m = 3 + 2 * k;
            const double* b = low_coeffs[k];
            const Matrix a2 = a * a;
            Matrix pw = id;
            Matrix uo = b[1] * id;
            Matrix v = b[0] * id;
            for (int j = 2; j <= m; j += 2) {
                pw = pw * a2;
                v += b[j] * pw;
                uo += b[j + 1] * pw;
            }
            const Matrix u = a * uo;
            return solve(u, v);
        }
    }

    int s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    s = std::max(s, 0);
    const Matrix as = a / std::ldexp(1.0, s);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u_inner = a6 * (b13[13] * a6 + b13[11] * a4 + b13[9] * a2) + b13[7] * a6 +
                           b13[5] * a4 + b13[3] * a2 + b13[1] * id;
    const Matrix u = as * u_inner;
    const Matrix v = a6 * (b13[12] * a6 + b13[10] * a4 + b13[8] * a2) + b13[6] * a6 + b13[4] * a4 +
                     b13[2] * a2 + b13[0] * id;
    Matrix r = solve(u, v);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

Matrix propagator(const Liouvillian& l, double t) {
    if (t < 0.0) throw InvalidArgument("propagator: t must be >= 0");
    if (t == 0.0) return Matrix::Identity(l.data.rows(), l.data.cols());
    return expm(l.data * t);
}

SpectralPropagator::SpectralPropagator(const Liouvillian& l) : size_(l.data.rows()) {
    const Eigen::Index n = size_;
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    const std::function<Eigen::Index(Eigen::Index)> root = [&](Eigen::Index i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j && l.data(i, j) != Complex(0.0)) parent[root(i)] = root(j);
        }
    }
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) members[root(i)].push_back(i);

    for (auto& index : members) {
        if (index.empty()) continue;
        const auto m = static_cast<Eigen::Index>(index.size());
        Matrix sub(m, m);
        for (Eigen::Index b = 0; b < m; ++b)
            for (Eigen::Index a = 0; a < m; ++a) sub(a, b) = l.data(index[a], index[b]);
        Eigen::ComplexEigenSolver<Matrix> es(sub, true);
        if (es.info() != Eigen::Success) throw NumericalFailure("SpectralPropagator: eigendecomposition failed");
        Block block{std::move(index), es.eigenvalues(), es.eigenvectors(), Matrix()};
        block.inverse = Eigen::PartialPivLU<Matrix>(block.vectors).inverse();
        const double cond = norm1(block.vectors) * norm1(block.inverse);
        if (!std::isfinite(cond) || cond > 1e12) {
            throw NumericalFailure("SpectralPropagator: Liouvillian is (nearly) defective");
        }
        condition_ = std::max(condition_, cond);
        blocks_.push_back(std::move(block));
    }
}

Vector SpectralPropagator::eigenvalues() const {
    Vector out(size_);
    Eigen::Index k = 0;
    for (const Block& b : blocks_) {
        out.segment(k, b.eigenvalues.size()) = b.eigenvalues;
        k += b.eigenvalues.size();
    }
    return out;
}

Matrix SpectralPropagator::at(double t) const {
    if (t < 0.0) throw InvalidArgument("SpectralPropagator: t must be >= 0");
    Matrix out = Matrix::Zero(size_, size_);
    for (const Block& b : blocks_) {
        const Vector e = (b.eigenvalues * t).array().exp();
        const Matrix sub = b.vectors * e.asDiagonal() * b.inverse;
        const auto m = static_cast<Eigen::Index>(b.index.size());
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index i = 0; i < m; ++i) out(b.index[i], b.index[j]) = sub(i, j);
    }
    return out;
}

Vector SpectralPropagator::apply(const Vector& v, double t) const {
    if (t < 0.0) throw InvalidArgument("SpectralPropagator: t must be >= 0");
    if (v.size() != size_) throw InvalidArgument("SpectralPropagator: vector size mismatch");
    Vector out(size_);
    for (const Block& b : blocks_) {
        const auto m = static_cast<Eigen::Index>(b.index.size());
        Vector x(m);
        for (Eigen::Index i = 0; i < m; ++i) x(i) = v(b.index[i]);
        const Vector c = b.inverse * x;
        const Vector e = (b.eigenvalues * t).array().exp();
        const Vector y = b.vectors * (e.array() * c.array()).matrix();
        for (Eigen::Index i = 0; i < m; ++i) out(b.index[i]) = y(i);
    }
    return out;
}

}  // namespace jqfsim
