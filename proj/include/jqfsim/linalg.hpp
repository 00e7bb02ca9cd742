#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace jqfsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex I{0.0, 1.0};

/// Dense operator on a tensor product of truncated ladders. Subsystem order is
/// the order of `dims` (qubit first, JQF second throughout the library).
class Operator {
public:
    Operator() = default;
    Operator(std::vector<int> dims, Matrix data);

    static Operator identity(std::vector<int> dims);
    static Operator zero(std::vector<int> dims);

    const std::vector<int>& dims() const noexcept { return dims_; }
    const Matrix& matrix() const noexcept { return data_; }
    Eigen::Index dimension() const noexcept { return data_.rows(); }

    Operator adjoint() const { return {dims_, data_.adjoint()}; }
    bool is_hermitian(double tol) const;

    Operator& operator+=(const Operator& rhs);
    Operator& operator-=(const Operator& rhs);
    Operator& operator*=(Complex s);

    friend Operator operator+(Operator lhs, const Operator& rhs) { return lhs += rhs; }
    friend Operator operator-(Operator lhs, const Operator& rhs) { return lhs -= rhs; }
    friend Operator operator*(Operator lhs, Complex s) { return lhs *= s; }
    friend Operator operator*(Complex s, Operator rhs) { return rhs *= s; }
    friend Operator operator*(const Operator& lhs, const Operator& rhs);

private:
    std::vector<int> dims_;
    Matrix data_;
};

/// Density matrix with the same layout as Operator. Construction does not
/// validate; call `check()` where the physical invariants must hold.
class DensityMatrix {
public:
    DensityMatrix() = default;
    DensityMatrix(std::vector<int> dims, Matrix data);

    /// |index><index| in the product basis.
    static DensityMatrix basis_state(std::vector<int> dims, Eigen::Index index);
    static DensityMatrix pure(std::vector<int> dims, const Vector& ket);

    const std::vector<int>& dims() const noexcept { return dims_; }
    const Matrix& matrix() const noexcept { return data_; }
    Matrix& matrix() noexcept { return data_; }
    Eigen::Index dimension() const noexcept { return data_.rows(); }

    Complex trace() const { return data_.trace(); }
    double hermiticity_error() const;
    double min_eigenvalue() const;

    /// Throws NumericalFailure when trace, hermiticity or positivity is off
    /// by more than the given tolerances.
    void check(double trace_tol = 1e-10, double herm_tol = 1e-10,
               double positivity_tol = -1e-8) const;

private:
    std::vector<int> dims_;
    Matrix data_;
};

/// Superoperator acting on column-stacked density matrices:
/// vec(rho)[i + j*D] = rho(i, j).
struct Liouvillian {
    Eigen::Index dim = 0;  // Hilbert-space dimension D; matrix is D^2 x D^2
    Matrix data;

    Liouvillian() = default;
    Liouvillian(Eigen::Index hilbert_dim, Matrix m);
    static Liouvillian zero(Eigen::Index hilbert_dim);

    Liouvillian& operator+=(const Liouvillian& rhs);
    Liouvillian& operator*=(Complex s);
    friend Liouvillian operator+(Liouvillian lhs, const Liouvillian& rhs) { return lhs += rhs; }
    friend Liouvillian operator*(Complex s, Liouvillian rhs) { return rhs *= s; }

    /// max |vec(I)^dagger L| relative to the largest entry of L.
    double trace_preservation_error() const;
    Vector apply(const Vector& v) const { return data * v; }
};

Matrix kron(const Matrix& a, const Matrix& b);
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index dim);
Vector vec(const DensityMatrix& rho);

/// Truncated bosonic lowering operator: sqrt(k) at (k-1, k).
Operator annihilation(int levels);

/// I (x) ... (x) op (x) ... (x) I with op at position `slot`.
Operator embed(const Operator& op, std::size_t slot, std::span<const int> dims);

/// Superoperator of D(A,B) rho = B rho A^dag - (A^dag B rho + rho A^dag B)/2.
Liouvillian dissipator_matrix(const Operator& a, const Operator& b);
inline Liouvillian dissipator(const Operator& a) { return dissipator_matrix(a, a); }

/// Superoperator of rho -> -i[H, rho]; H must be Hermitian.
Liouvillian commutator_superop(const Operator& h);

/// exp(A) by scaling and squaring with a diagonal Pade approximant.
Matrix expm(const Matrix& a);

/// exp(L t), t >= 0.
Matrix propagator(const Liouvillian& l, double t);

/// Eigendecomposition of a time-independent Liouvillian, for evaluating
/// exp(L t) at many (possibly widely spread) times. Uncoupled blocks of L
/// (for example coherence orders of a drive-free Liouvillian) are
/// diagonalized separately.
class SpectralPropagator {
public:
    explicit SpectralPropagator(const Liouvillian& l);

    Matrix at(double t) const;
    Vector apply(const Vector& v, double t) const;
    Vector eigenvalues() const;
    /// Largest condition number estimate over the eigenvector matrices.
    double condition() const noexcept { return condition_; }
    std::size_t block_count() const noexcept { return blocks_.size(); }

private:
    struct Block {
        std::vector<Eigen::Index> index;
        Vector eigenvalues;
        Matrix vectors;
        Matrix inverse;
    };
    Eigen::Index size_ = 0;
    std::vector<Block> blocks_;
    double condition_ = 0.0;
};

}  // namespace jqfsim
