#pragma once

// Consistent-histories machinery: per-slot projection families, history
// chains, branch resolution, history density operators, the decoherence
// functional and history observables.
//
// All history-space sums are brute-force enumerations behind a configurable
// cap (default 4096 branches). The "complete set" of basis histories is
// realized concretely as the product basis of rank-1 refinements of each
// slot family's eigenbasis, with eigenvectors taken in the ascending order
// returned by the eigensolver so the basis is deterministic.

#include <folia/direct_integral.hpp>

#include <cstdint>
#include <sstream>
#include <utility>
#include <vector>

namespace folia {

inline constexpr int kDefaultBranchCap = 4096;
inline constexpr double kFamilyTol = 1e-10; // Σ P = I and orthogonality, componentwise

// Per slot, an exhaustive set of mutually exclusive alternatives:
// Σ_α P^k_α = I and P^k_α P^k_ά = δ_{αά} P^k_α, both within kFamilyTol.
class ProjectionFamily {
public:
    explicit ProjectionFamily(std::vector<std::vector<Projector>> per_slot)
        : per_slot_(std::move(per_slot)) {
        detail::require(!per_slot_.empty(), "ProjectionFamily: needs at least one slot");
        for (const auto& family : per_slot_) {
            detail::require(!family.empty(), "ProjectionFamily: empty slot family");
            const int d = family.front().dim();
            Matrix sum = Matrix::Zero(d, d);
            for (std::size_t a = 0; a < family.size(); ++a) {
                detail::require(family[a].dim() == d,
                                "ProjectionFamily: mixed dimensions within a slot");
                sum += family[a].entries();
                for (std::size_t b = a + 1; b < family.size(); ++b) {
                    const double cross =
                        detail::max_abs(family[a].entries() * family[b].entries());
                    detail::require(cross <= kFamilyTol,
                                    "ProjectionFamily: slot projectors are not orthogonal");
                }
            }
            detail::require(detail::max_abs(sum - Matrix::Identity(d, d)) <= kFamilyTol,
                            "ProjectionFamily: slot projectors do not sum to identity");
            detail::require(per_slot_.front().front().dim() == d,
                            "ProjectionFamily: mixed dimensions across slots");
        }
    }

    // One identity projector per slot ("no measurement").
    static ProjectionFamily identity(int dim, int n) {
        std::vector<std::vector<Projector>> slots(
            n, std::vector<Projector>{Projector::identity(dim)});
        return ProjectionFamily(std::move(slots));
    }

    // Rank-1 computational-basis projectors at every slot.
    static ProjectionFamily computational_basis(int dim, int n) {
        std::vector<Projector> family;
        family.reserve(dim);
        for (int i = 0; i < dim; ++i) {
            family.push_back(Projector::onto(AuxState::basis(dim, i)));
        }
        return ProjectionFamily(std::vector<std::vector<Projector>>(n, family));
    }

    // Rank-1 projectors onto the columns of a unitary, at every slot.
    static ProjectionFamily from_basis_columns(const UnitaryOperator& u, int n) {
        std::vector<Projector> family;
        family.reserve(u.dim());
        for (int i = 0; i < u.dim(); ++i) {
            family.push_back(Projector::onto(AuxState(u.entries().col(i))));
        }
        return ProjectionFamily(std::vector<std::vector<Projector>>(n, family));
    }

    int slots() const { return static_cast<int>(per_slot_.size()); }
    int dim() const { return per_slot_.front().front().dim(); }
    int alternatives(int k) const { return static_cast<int>(per_slot_.at(k).size()); }
    const Projector& projector(int k, int alpha) const { return per_slot_.at(k).at(alpha); }
    const std::vector<Projector>& slot(int k) const { return per_slot_.at(k); }

    // Π_k m_k, saturating at cap+1 to keep the comparison cheap.
    long long history_count(long long cap = kDefaultBranchCap) const {
        long long count = 1;
        for (int k = 0; k < slots(); ++k) {
            count *= alternatives(k);
            if (count > cap) return cap + 1;
        }
        return count;
    }

private:
    std::vector<std::vector<Projector>> per_slot_;
};

// One alternative per slot, 0-based.
struct HistoryIndex {
    std::vector<int> alpha;

    bool operator==(const HistoryIndex& other) const { return alpha == other.alpha; }
    bool operator<(const HistoryIndex& other) const { return alpha < other.alpha; }

    std::string to_string() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (i) out << '-';
            out << alpha[i];
        }
        return out.str();
    }
};

namespace detail {

inline void require_index(const ProjectionFamily& family, const HistoryIndex& index) {
    require(static_cast<int>(index.alpha.size()) == family.slots(),
            "HistoryIndex: length must equal the number of slots");
    for (int k = 0; k < family.slots(); ++k) {
        require(index.alpha[k] >= 0 && index.alpha[k] < family.alternatives(k),
                "HistoryIndex: component out of the slot family range");
    }
}

// Lexicographic multi-index enumeration over per-slot radices.
inline bool next_index(std::vector<int>& idx, const std::vector<int>& radices) {
    for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
        if (++idx[k] < radices[k]) return true;
        idx[k] = 0;
    }
    return false;
}

} // namespace detail

// A time-ordered chain C_α: one selected projector per slot of a family.
class HistoryChain {
public:
    HistoryChain(ProjectionFamily family, HistoryIndex index)
        : family_(std::move(family)), index_(std::move(index)) {
        detail::require_index(family_, index_);
    }

    const ProjectionFamily& family() const { return family_; }
    const HistoryIndex& index() const { return index_; }
    const Projector& projector(int k) const { return family_.projector(k, index_.alpha[k]); }
    int slots() const { return family_.slots(); }
    int dim() const { return family_.dim(); }

private:
    ProjectionFamily family_;
    HistoryIndex index_;
};

// Density over histories of one family: Σ p_α = 1, p_α ≥ 0, indices distinct.
class HistoryDensity {
public:
    HistoryDensity(ProjectionFamily family,
                   std::vector<std::pair<double, HistoryIndex>> entries)
        : family_(std::move(family)), entries_(std::move(entries)) {
        detail::require(!entries_.empty(), "HistoryDensity: needs at least one entry");
        double total = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            detail::require(entries_[i].first >= 0.0,
                            "HistoryDensity: probabilities must be nonnegative");
            detail::require_index(family_, entries_[i].second);
            total += entries_[i].first;
            for (std::size_t j = i + 1; j < entries_.size(); ++j) {
                detail::require(!(entries_[i].second == entries_[j].second),
                                "HistoryDensity: history indices must be distinct");
            }
        }
        detail::require(std::abs(total - 1.0) <= 1e-12,
                        "HistoryDensity: probabilities must sum to 1");
    }

    const ProjectionFamily& family() const { return family_; }
    const std::vector<std::pair<double, HistoryIndex>>& entries() const { return entries_; }

private:
    ProjectionFamily family_;
    std::vector<std::pair<double, HistoryIndex>> entries_;
};

// Slotwise operator on the space of histories (need not be Hermitian).
class HistoryObservable {
public:
    explicit HistoryObservable(std::vector<Matrix> per_slot)
        : per_slot_(std::move(per_slot)) {
        detail::require(!per_slot_.empty(), "HistoryObservable: needs at least one slot");
        for (const auto& m : per_slot_) {
            detail::require(m.rows() == m.cols() && m.rows() == per_slot_.front().rows(),
                            "HistoryObservable: slot operators must be square of one dimension");
        }
    }

    static HistoryObservable constant(const Matrix& m, int n) {
        return HistoryObservable(std::vector<Matrix>(n, m));
    }

    int slots() const { return static_cast<int>(per_slot_.size()); }
    int dim() const { return static_cast<int>(per_slot_.front().rows()); }
    const Matrix& at(int k) const { return per_slot_.at(k); }

private:
    std::vector<Matrix> per_slot_;
};

// Slotwise C_α φ. Idempotent: applying the same chain twice equals once.
inline DirectIntegralState apply_chain(const HistoryChain& chain,
                                       const DirectIntegralState& phi) {
    detail::require(chain.slots() == phi.slots(), "apply_chain: slot count mismatch");
    detail::require(chain.dim() == phi.dim(), "apply_chain: dimension mismatch");
    std::vector<AuxState> out;
    out.reserve(phi.slots());
    for (int k = 0; k < phi.slots(); ++k) {
        out.push_back(chain.projector(k).apply(phi.slot(k)));
    }
    return DirectIntegralState(phi.grid(), std::move(out));
}

// Heisenberg-evolved projector P(t + m·dt) = W P W† with the slot's
// stepwise propagator W. Conjugation preserves idempotence, Hermiticity
// and rank, so the result is re-validated as a Projector.
inline Projector heisenberg_projector(const Projector& p, const GeneratorSpec& gen, int k,
                                      int m, double dt) {
    const Matrix w = detail::stepwise_propagator(gen, k, m, dt);
    Matrix conj = w * p.entries() * w.adjoint();
    // conjugation by a numerically unitary W can leave tiny Hermitian dirt
    conj = ((conj + conj.adjoint().eval()) / 2.0).eval();
    return Projector(std::move(conj));
}

// Evolve every projector of the chain's family by its slot propagator; the
// selected index is unchanged. The output family satisfies the same
// exhaustive/exclusive relations.
inline HistoryChain evolve_chain(const HistoryChain& chain, const GeneratorSpec& gen,
                                 int m, double dt) {
    detail::require(gen.slots() == chain.slots(), "evolve_chain: slot count mismatch");
    detail::require(gen.dim() == chain.dim(), "evolve_chain: dimension mismatch");
    detail::require(m >= 0, "evolve_chain: m must be >= 0");
    std::vector<std::vector<Projector>> evolved;
    evolved.reserve(chain.slots());
    for (int k = 0; k < chain.slots(); ++k) {
        std::vector<Projector> slot_family;
        slot_family.reserve(chain.family().alternatives(k));
        for (int a = 0; a < chain.family().alternatives(k); ++a) {
            slot_family.push_back(
                heisenberg_projector(chain.family().projector(k, a), gen, k, m, dt));
        }
        evolved.push_back(std::move(slot_family));
    }
    return HistoryChain(ProjectionFamily(std::move(evolved)), chain.index());
}

// Max slotwise norm of U(τ)(C_α φ) − C_α(τ)(U(τ)φ) in the relabel picture.
// An algebraic identity, so the residual stays at numerical noise.
inline double intertwining_check(const HistoryChain& chain, const DirectIntegralState& phi,
                                 const GeneratorSpec& gen, int m) {
    const double dt = phi.grid().dt();
    const DirectIntegralState lhs = evolve_step(apply_chain(chain, phi), gen, m,
                                                Boundary::Relabel);
    const HistoryChain evolved = evolve_chain(chain, gen, m, dt);
    const DirectIntegralState rhs =
        apply_chain(evolved, evolve_step(phi, gen, m, Boundary::Relabel));
    double worst = 0.0;
    for (int k = 0; k < phi.slots(); ++k) {
        worst = std::max(worst, (lhs.slot(k).entries() - rhs.slot(k).entries()).norm());
    }
    return worst;
}

struct BranchResolution {
    std::vector<std::pair<HistoryIndex, DirectIntegralState>> branches; // lexicographic
    double reconstruction_residual = 0.0; // max slotwise norm of the deficit below
};

// Enumerate all branches C_α φ of a family. Reconstruction counts each slot
// alternative once: at slot k every value of α_k recurs in Π_{j≠k} m_j
// branches with an identical slot vector, so the branches are summed with
// weight m_k / (Π_j m_j) per slot, which reduces to Σ_{α_k} P^k_{α_k} φ_k
// = φ_k by the family's completeness relation.
inline BranchResolution branch_resolution(const ProjectionFamily& family,
                                          const DirectIntegralState& phi,
                                          long long cap = kDefaultBranchCap) {
    detail::require(family.slots() == phi.slots(), "branch_resolution: slot count mismatch");
    detail::require(family.dim() == phi.dim(), "branch_resolution: dimension mismatch");
    const long long total = family.history_count(cap);
    if (total > cap) {
        std::ostringstream msg;
        msg << "branch_resolution: history count exceeds cap of " << cap << " branches";
        throw CapExceeded(msg.str());
    }
    std::vector<int> radices(phi.slots());
    for (int k = 0; k < phi.slots(); ++k) radices[k] = family.alternatives(k);

    BranchResolution result;
    std::vector<Vector> sum(phi.slots(), Vector::Zero(phi.dim()));
    std::vector<int> idx(phi.slots(), 0);
    do {
        HistoryIndex index{idx};
        DirectIntegralState branch = apply_chain(HistoryChain(family, index), phi);
        for (int k = 0; k < phi.slots(); ++k) sum[k] += branch.slot(k).entries();
        result.branches.emplace_back(std::move(index), std::move(branch));
    } while (detail::next_index(idx, radices));

    for (int k = 0; k < phi.slots(); ++k) {
        const double weight =
            static_cast<double>(family.alternatives(k)) / static_cast<double>(total);
        result.reconstruction_residual = std::max(
            result.reconstruction_residual, (weight * sum[k] - phi.slot(k).entries()).norm());
    }
    return result;
}

// The deterministic rank-1 refinement of a family: per slot, the unit
// eigenvectors spanning each projector's range, in family order and in the
// ascending order returned by the eigensolver. Their union is an
// orthonormal basis of the slot space.
inline std::vector<std::vector<AuxState>> rank_one_refinement(const ProjectionFamily& family) {
    std::vector<std::vector<AuxState>> basis;
    basis.reserve(family.slots());
    for (int k = 0; k < family.slots(); ++k) {
        std::vector<AuxState> vectors;
        vectors.reserve(family.dim());
        for (int a = 0; a < family.alternatives(k); ++a) {
            const Projector& p = family.projector(k, a);
            Eigen::SelfAdjointEigenSolver<Matrix> solver(p.entries());
            detail::require(solver.info() == Eigen::Success,
                            "rank_one_refinement: eigendecomposition failed");
            for (int i = 0; i < family.dim(); ++i) {
                if (solver.eigenvalues()(i) > 0.5) {
                    vectors.emplace_back(Vector(solver.eigenvectors().col(i)));
                }
            }
        }
        detail::require(static_cast<int>(vectors.size()) == family.dim(),
                        "rank_one_refinement: refinement does not span the slot space");
        basis.push_back(std::move(vectors));
    }
    return basis;
}

namespace detail {

inline void require_enumerable(const ProjectionFamily& family, long long cap,
                               const char* who) {
    // the product basis has dim^slots histories
    long long count = 1;
    for (int k = 0; k < family.slots(); ++k) {
        count *= family.dim();
        if (count > cap) {
            std::ostringstream msg;
            msg << who << ": product basis exceeds cap of " << cap << " histories";
            throw CapExceeded(msg.str());
        }
    }
}

} // namespace detail

// tr(ρ) = Σ_ά (φ^ά, ρ φ^ά) over the product basis, evaluated with the
// history scalar product slotwise. Equals Σ_α p_α for densities whose
// chains select rank-1 projectors.
inline double history_trace(const HistoryDensity& rho, long long cap = kDefaultBranchCap) {
    const ProjectionFamily& family = rho.family();
    detail::require_enumerable(family, cap, "history_trace");
    const auto basis = rank_one_refinement(family);
    const int n = family.slots();
    const std::vector<int> radices(n, family.dim());

    double trace = 0.0;
    std::vector<int> beta(n, 0);
    do {
        for (const auto& [p, index] : rho.entries()) {
            double factor = p;
            for (int k = 0; k < n && factor != 0.0; ++k) {
                const AuxState& e = basis[k][beta[k]];
                factor *= std::real(
                    e.entries().dot(family.projector(k, index.alpha[k]).entries() *
                                    e.entries()));
            }
            trace += factor;
        }
    } while (detail::next_index(beta, radices));
    return trace;
}

// The decoherence functional d(α, ά) = tr(C_α ρ C†_ά), evaluated literally
// as Σ_β Σ_{α″} p_{α″} Π_k ⟨φ^{β_k}, P_{α_k} P_{α″_k} P_{ά_k} φ^{β_k}⟩ with
// β running over the product basis.
inline Complex decoherence_functional(const HistoryDensity& rho, const HistoryIndex& alpha,
                                      const HistoryIndex& alpha_prime,
                                      long long cap = kDefaultBranchCap) {
    const ProjectionFamily& family = rho.family();
    detail::require_index(family, alpha);
    detail::require_index(family, alpha_prime);
    detail::require_enumerable(family, cap, "decoherence_functional");
    const auto basis = rank_one_refinement(family);
    const int n = family.slots();
    const std::vector<int> radices(n, family.dim());

    Complex value = 0.0;
    std::vector<int> beta(n, 0);
    do {
        for (const auto& [p, index] : rho.entries()) {
            Complex factor = p;
            for (int k = 0; k < n && factor != 0.0; ++k) {
                const Matrix triple = family.projector(k, alpha.alpha[k]).entries() *
                                      family.projector(k, index.alpha[k]).entries() *
                                      family.projector(k, alpha_prime.alpha[k]).entries();
                const AuxState& e = basis[k][beta[k]];
                factor *= e.entries().dot(triple * e.entries());
            }
            value += factor;
        }
    } while (detail::next_index(beta, radices));
    return value;
}

struct ConsistencyReport {
    bool consistent = true;
    double worst_off_diagonal = 0.0;
};

// True iff max over α ≠ ά of |d(α, ά)| ≤ tol, enumerating all pairs of
// histories in the family's product index set.
inline ConsistencyReport consistency_check(const HistoryDensity& rho, double tol,
                                           long long cap = kDefaultBranchCap) {
    const ProjectionFamily& family = rho.family();
    if (family.history_count(cap) > cap) {
        std::ostringstream msg;
        msg << "consistency_check: history count exceeds cap of " << cap;
        throw CapExceeded(msg.str());
    }
    std::vector<int> radices(family.slots());
    for (int k = 0; k < family.slots(); ++k) radices[k] = family.alternatives(k);

    ConsistencyReport report;
    std::vector<int> a(family.slots(), 0);
    do {
        std::vector<int> b(family.slots(), 0);
        do {
            if (a != b) {
                const Complex d =
                    decoherence_functional(rho, HistoryIndex{a}, HistoryIndex{b}, cap);
                report.worst_off_diagonal = std::max(report.worst_off_diagonal, std::abs(d));
            }
        } while (detail::next_index(b, radices));
    } while (detail::next_index(a, radices));
    report.consistent = report.worst_off_diagonal <= tol;
    return report;
}

// tr(Aρ) = Σ_α p_α Π_k ⟨φ^{α_k}, A_k φ^{α_k}⟩ with φ^{α_k} the unit vector
// of the selecting rank-1 projector. Chains through rank ≥ 2 projectors are
// rejected: the reduction needs vector-valued branches.
inline Complex history_expectation(const HistoryDensity& rho, const HistoryObservable& obs,
                                   long long cap = kDefaultBranchCap) {
    const ProjectionFamily& family = rho.family();
    detail::require(obs.slots() == family.slots(),
                    "history_expectation: observable slot count mismatch");
    detail::require(obs.dim() == family.dim(), "history_expectation: dimension mismatch");
    detail::require(static_cast<long long>(rho.entries().size()) <= cap,
                    "history_expectation: entry count exceeds cap");
    const auto basis = rank_one_refinement(family);

    // map (slot, alternative) -> refined unit vector, valid only for rank-1
    Complex value = 0.0;
    for (const auto& [p, index] : rho.entries()) {
        Complex factor = p;
        for (int k = 0; k < family.slots(); ++k) {
            const Projector& proj = family.projector(k, index.alpha[k]);
            if (proj.rank() != 1) {
                throw InvalidInput(
                    "history_expectation: chain selects a projector of rank > 1");
            }
            int offset = 0;
            for (int a = 0; a < index.alpha[k]; ++a) {
                offset += family.projector(k, a).rank();
            }
            const AuxState& v = basis[k][offset];
            factor *= v.entries().dot(obs.at(k) * v.entries());
        }
        value += factor;
    }
    return value;
}

} // namespace folia
