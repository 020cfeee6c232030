#pragma once

// Shared test oracles. Everything in here is deliberately independent of
// the library's computation paths: plain power series, Kronecker products
// and closed forms only.

#include <folia/folia.hpp>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using folia::Complex;
using folia::Matrix;
using folia::Vector;

// exp(−i·dt·H) as a truncated power series, Σ_j (−i·dt·H)^j / j!.
inline Matrix series_exponential(const Matrix& h, double dt, int order = 12) {
    const int d = static_cast<int>(h.rows());
    Matrix result = Matrix::Identity(d, d);
    Matrix term = Matrix::Identity(d, d);
    for (int j = 1; j <= order; ++j) {
        term = (term * (Complex(0.0, -dt) * h) / static_cast<double>(j)).eval();
        result += term;
    }
    return result;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Product-space contraction tr(C_α ρ C†_ά) with C_α = ⊗_k P_{α_k} and
// ρ = Σ p_{α″} ⊗_k P_{α″_k}, built explicitly with Kronecker products.
inline Complex decoherence_product_space(const folia::HistoryDensity& rho,
                                         const folia::HistoryIndex& alpha,
                                         const folia::HistoryIndex& alpha_prime) {
    const auto& family = rho.family();
    const int n = family.slots();
    auto chain_matrix = [&](const folia::HistoryIndex& index) {
        Matrix m = family.projector(0, index.alpha[0]).entries();
        for (int k = 1; k < n; ++k) {
            m = kron(m, family.projector(k, index.alpha[k]).entries()).eval();
        }
        return m;
    };
    const int total = static_cast<int>(std::pow(family.dim(), n) + 0.5);
    Matrix rho_matrix = Matrix::Zero(total, total);
    for (const auto& [p, index] : rho.entries()) {
        rho_matrix += p * chain_matrix(index);
    }
    const Matrix c_alpha = chain_matrix(alpha);
    const Matrix c_prime = chain_matrix(alpha_prime);
    return (c_alpha * rho_matrix * c_prime.adjoint()).trace();
}

// dt² coefficient of the per-factor survival deficit
// 1 − |⟨h, V(dt)h⟩|²/‖h‖⁴, extracted by two Richardson levels over
// evaluations at dt, dt/2, dt/4 (the deficit is even in dt, so each level
// removes one even-power correction).
inline double richardson_deficit_coefficient(const folia::HermitianOperator& h,
                                             const folia::AuxState& state, double dt) {
    auto deficit_over_dt2 = [&](double step) {
        const Matrix v = folia::hermitian_exponential(h, step).entries();
        const Complex amplitude = state.entries().dot(v * state.entries());
        const double n2 = state.norm_squared();
        const double survival = std::norm(amplitude) / (n2 * n2);
        return (1.0 - survival) / (step * step);
    };
    const double f0 = deficit_over_dt2(dt);
    const double f1 = deficit_over_dt2(dt / 2.0);
    const double f2 = deficit_over_dt2(dt / 4.0);
    const double r0 = (4.0 * f1 - f0) / 3.0;
    const double r1 = (4.0 * f2 - f1) / 3.0;
    return (16.0 * r1 - r0) / 15.0;
}

// Closed-form static-Zeno survival for H = σ_x, h = (1, 0):
// S(n) = cos^{2n}(T/n), evaluated in extended precision.
inline double zeno_sigma_x_closed_form(double total_span, int n) {
    const long double theta = static_cast<long double>(total_span) / n;
    const long double c = std::cos(theta);
    return static_cast<double>(std::pow(c, static_cast<long double>(2 * n)));
}

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
    return m;
}

inline double max_slot_distance(const folia::DirectIntegralState& a,
                                const folia::DirectIntegralState& b) {
    double worst = 0.0;
    for (int k = 0; k < a.slots(); ++k) {
        worst = std::max(worst, (a.slot(k).entries() - b.slot(k).entries()).norm());
    }
    return worst;
}

} // namespace oracle
