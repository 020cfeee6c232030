#pragma once

// Dense complex linear algebra over small auxiliary Hilbert spaces:
// states, Hermitian operators, unitary propagators and orthogonal
// projectors, all with value semantics and invariants checked at
// construction.
//
// Inner-product convention (used everywhere in this library): conjugate
// linear in the FIRST argument, linear in the second.

#include <folia/errors.hpp>
#include <folia/rng.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <utility>

namespace folia {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTol = 1e-12;      // componentwise, on construction
inline constexpr double kUnitaryTol = 1e-10;        // componentwise, U†U vs I
inline constexpr double kProjectorTol = 1e-12;      // componentwise, P² vs P and P vs P†
inline constexpr double kProjectorTraceTol = 1e-10; // trace vs integer rank

namespace detail {

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidInput(msg);
}

} // namespace detail

// A vector in a d-dimensional auxiliary Hilbert space (one time slot).
class AuxState {
public:
    explicit AuxState(Vector entries) : entries_(std::move(entries)) {
        detail::require(entries_.size() >= 1, "AuxState: dimension must be positive");
    }

    static AuxState basis(int dim, int index) {
        detail::require(dim >= 1, "AuxState::basis: dim must be >= 1");
        detail::require(index >= 0 && index < dim, "AuxState::basis: index out of range");
        Vector v = Vector::Zero(dim);
        v(index) = 1.0;
        return AuxState(std::move(v));
    }

    int dim() const { return static_cast<int>(entries_.size()); }
    const Vector& entries() const { return entries_; }
    Complex operator[](int i) const { return entries_(i); }

    double norm_squared() const { return entries_.squaredNorm(); }
    double norm() const { return entries_.norm(); }

private:
    Vector entries_;
};

// ⟨x, y⟩, conjugate-linear in x.
inline Complex inner_product(const AuxState& x, const AuxState& y) {
    detail::require(x.dim() == y.dim(), "inner_product: dimension mismatch");
    return x.entries().dot(y.entries()); // Eigen's dot conjugates the left factor
}

// A Hermitian operator (a Hamiltonian, in units of inverse time with ħ = 1).
class HermitianOperator {
public:
    explicit HermitianOperator(Matrix entries) : entries_(std::move(entries)) {
        detail::require(entries_.rows() >= 1 && entries_.rows() == entries_.cols(),
                        "HermitianOperator: matrix must be square with positive dimension");
        const double dev = detail::max_abs(entries_ - entries_.adjoint().eval());
        if (dev > kHermitianTol) {
            std::ostringstream msg;
            msg << "HermitianOperator: matrix deviates from Hermitian by " << dev;
            throw InvalidInput(msg.str());
        }
    }

    static HermitianOperator zero(int dim) {
        detail::require(dim >= 1, "HermitianOperator::zero: dim must be >= 1");
        return HermitianOperator(Matrix::Zero(dim, dim));
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& entries() const { return entries_; }

private:
    Matrix entries_;
};

// A unitary operator; U†U = I is checked at construction.
class UnitaryOperator {
public:
    explicit UnitaryOperator(Matrix entries) : entries_(std::move(entries)) {
        detail::require(entries_.rows() >= 1 && entries_.rows() == entries_.cols(),
                        "UnitaryOperator: matrix must be square with positive dimension");
        const int d = static_cast<int>(entries_.rows());
        const double dev =
            detail::max_abs(entries_.adjoint() * entries_ - Matrix::Identity(d, d));
        if (dev > kUnitaryTol) {
            std::ostringstream msg;
            msg << "UnitaryOperator: U†U deviates from identity by " << dev;
            throw InvalidInput(msg.str());
        }
    }

    static UnitaryOperator identity(int dim) {
        detail::require(dim >= 1, "UnitaryOperator::identity: dim must be >= 1");
        return UnitaryOperator(Matrix::Identity(dim, dim));
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Matrix& entries() const { return entries_; }

    AuxState apply(const AuxState& h) const {
        detail::require(dim() == h.dim(), "UnitaryOperator::apply: dimension mismatch");
        return AuxState(entries_ * h.entries());
    }

private:
    Matrix entries_;
};

// An orthogonal projector: idempotent, Hermitian, integer rank = trace.
class Projector {
public:
    explicit Projector(Matrix entries) : entries_(std::move(entries)) {
        detail::require(entries_.rows() >= 1 && entries_.rows() == entries_.cols(),
                        "Projector: matrix must be square with positive dimension");
        const double herm_dev = detail::max_abs(entries_ - entries_.adjoint().eval());
        detail::require(herm_dev <= kProjectorTol, "Projector: matrix is not Hermitian");
        const double idem_dev = detail::max_abs(entries_ * entries_ - entries_);
        detail::require(idem_dev <= kProjectorTol, "Projector: matrix is not idempotent");
        const double tr = entries_.trace().real();
        rank_ = static_cast<int>(std::lround(tr));
        detail::require(std::abs(tr - rank_) <= kProjectorTraceTol,
                        "Projector: trace is not within tolerance of an integer rank");
    }

    // Rank-1 projector |v⟩⟨v| / ⟨v, v⟩ onto the span of v.
    static Projector onto(const AuxState& v) {
        const double n2 = v.norm_squared();
        detail::require(n2 > 0.0, "Projector::onto: zero vector");
        Matrix p = (v.entries() * v.entries().adjoint()) / n2;
        return Projector(std::move(p));
    }

    static Projector identity(int dim) {
        detail::require(dim >= 1, "Projector::identity: dim must be >= 1");
        return Projector(Matrix::Identity(dim, dim));
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    int rank() const { return rank_; }
    const Matrix& entries() const { return entries_; }

    AuxState apply(const AuxState& h) const {
        detail::require(dim() == h.dim(), "Projector::apply: dimension mismatch");
        return AuxState(entries_ * h.entries());
    }

private:
    Matrix entries_;
    int rank_ = 0;
};

// Dispersion ⟨h, H²h⟩/‖h‖² − ⟨h, Hh⟩²/‖h‖⁴. Real and nonnegative; values in
// [−1e-12, 0) are numerical noise and are clamped to zero, anything below
// that signals an internal error.
inline double variance(const HermitianOperator& H, const AuxState& h) {
    detail::require(H.dim() == h.dim(), "variance: dimension mismatch");
    const double n2 = h.norm_squared();
    detail::require(n2 > 0.0, "variance: state has zero norm");
    const Vector hh = H.entries() * h.entries();
    const double mean = std::real(h.entries().dot(hh)) / n2; // ⟨h, Hh⟩/‖h‖²
    const double second = hh.squaredNorm() / n2;             // ⟨h, H²h⟩/‖h‖²
    double var = second - mean * mean;
    if (var < 0.0) {
        detail::require(var >= -1e-12, "variance: negative beyond tolerance");
        var = 0.0;
    }
    return var;
}

// exp(−i·dt·H) via eigendecomposition of the Hermitian matrix; unitary up to
// eigensolver tolerance at the small dimensions in scope.
inline UnitaryOperator hermitian_exponential(const HermitianOperator& H, double dt) {
    if (dt == 0.0) return UnitaryOperator::identity(H.dim());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(H.entries());
    detail::require(solver.info() == Eigen::Success,
                    "hermitian_exponential: eigendecomposition failed");
    const auto& evals = solver.eigenvalues();
    const auto& evecs = solver.eigenvectors();
    Vector phases(H.dim());
    for (int i = 0; i < H.dim(); ++i) {
        phases(i) = std::exp(Complex(0.0, -dt * evals(i)));
    }
    Matrix u = evecs * phases.asDiagonal() * evecs.adjoint();
    return UnitaryOperator(std::move(u));
}

// I − i·dt·H − (dt²/2)·H², the propagator truncated after the quadratic
// term. Not unitary in general, so it is returned as a plain matrix.
inline Matrix truncated_propagator(const HermitianOperator& H, double dt) {
    const int d = H.dim();
    const Matrix& m = H.entries();
    return Matrix::Identity(d, d) - Complex(0.0, dt) * m - (dt * dt / 2.0) * (m * m);
}

// Deterministic random Hermitian matrix: (A + A†)/2 with independent
// standard complex Gaussian entries of A, drawn row-major (real part first).
inline HermitianOperator random_hermitian(int dim, std::uint64_t seed) {
    detail::require(dim >= 1, "random_hermitian: dim must be >= 1");
    GaussianStream g(seed);
    Matrix a(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            const double re = g.normal();
            const double im = g.normal();
            a(r, c) = Complex(re, im);
        }
    }
    Matrix h = (a + a.adjoint().eval()) / 2.0;
    return HermitianOperator(std::move(h));
}

// Deterministic random state with standard complex Gaussian entries.
inline AuxState random_state(int dim, std::uint64_t seed) {
    detail::require(dim >= 1, "random_state: dim must be >= 1");
    GaussianStream g(seed);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        const double re = g.normal();
        const double im = g.normal();
        v(i) = Complex(re, im);
    }
    return AuxState(std::move(v));
}

} // namespace folia
