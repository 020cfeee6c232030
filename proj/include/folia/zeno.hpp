#pragma once

// Survival probabilities of histories under repeated stepping: exact and
// second-order amplitudes, Zeno convergence sweeps with log-log slope fits,
// and the per-slot stability residual that reproduces the Schrödinger
// relation.

#include <folia/histories.hpp>

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace folia {

// ---------------------------------------------------------------------------
// Survival amplitudes

// Π_k ⟨h_{t_k}, V_{t_k}(dt) h_{t_k}⟩ with the exact per-slot unitary,
// under the relabel identification of evolved content with its slot.
inline Complex survival_amplitude_exact(const DirectIntegralState& phi,
                                        const GeneratorSpec& gen, double dt) {
    detail::require_compatible(phi, gen);
    Complex amp = 1.0;
    for (int k = 0; k < phi.slots(); ++k) {
        const Matrix v = hermitian_exponential(gen.at(k), dt).entries();
        amp *= phi.slot(k).entries().dot(v * phi.slot(k).entries());
    }
    return amp;
}

// Same product with the propagator truncated after the quadratic term.
inline Complex survival_amplitude_truncated(const DirectIntegralState& phi,
                                            const GeneratorSpec& gen, double dt) {
    detail::require_compatible(phi, gen);
    Complex amp = 1.0;
    for (int k = 0; k < phi.slots(); ++k) {
        const Matrix v = truncated_propagator(gen.at(k), dt);
        amp *= phi.slot(k).entries().dot(v * phi.slot(k).entries());
    }
    return amp;
}

// Second-order prediction (Π_k ‖h_k‖⁴)·(1 − (T²/n²)·Σ_k ΔH²_k). The value
// is returned raw: it may leave [0, 1] for coarse n, which is exactly what
// the out-of-validity flag reports; clamping would corrupt slope fits.
inline double survival_probability_predicted(const DirectIntegralState& phi,
                                             const GeneratorSpec& gen, double total_span,
                                             int n) {
    detail::require_compatible(phi, gen);
    detail::require(n >= 1, "survival_probability_predicted: n must be >= 1");
    double norm_factor = 1.0;
    double variance_sum = 0.0;
    for (int k = 0; k < phi.slots(); ++k) {
        const double n2 = phi.slot(k).norm_squared();
        detail::require(n2 > 0.0, "survival_probability_predicted: zero-norm slot");
        norm_factor *= n2 * n2;
        variance_sum += variance(gen.at(k), phi.slot(k));
    }
    const double dt2 = (total_span / n) * (total_span / n);
    return norm_factor * (1.0 - dt2 * variance_sum);
}

// |T²/n²·ΣΔH²| beyond this marks the second-order formula out of validity.
inline constexpr double kValidityThreshold = 0.5;

inline bool prediction_out_of_validity(const DirectIntegralState& phi,
                                       const GeneratorSpec& gen, double total_span, int n) {
    double variance_sum = 0.0;
    for (int k = 0; k < phi.slots(); ++k) {
        variance_sum += variance(gen.at(k), phi.slot(k));
    }
    const double dt2 = (total_span / n) * (total_span / n);
    return std::abs(dt2 * variance_sum) > kValidityThreshold;
}

// ---------------------------------------------------------------------------
// Schrödinger paths and stability residuals

// h_{t_1} = h0, h_{t_{k+1}} = V_{t_k}(dt)·h_{t_k}.
inline DirectIntegralState make_schroedinger_path(const AuxState& h0,
                                                  const GeneratorSpec& gen,
                                                  const TimeGrid& grid) {
    detail::require(gen.slots() == grid.size(),
                    "make_schroedinger_path: generator must match the grid");
    detail::require(gen.dim() == h0.dim(), "make_schroedinger_path: dimension mismatch");
    std::vector<AuxState> slots;
    slots.reserve(grid.size());
    slots.push_back(h0);
    for (int k = 0; k + 1 < grid.size(); ++k) {
        slots.push_back(hermitian_exponential(gen.at(k), grid.dt()).apply(slots.back()));
    }
    return DirectIntegralState(grid, std::move(slots));
}

struct StabilityReport {
    std::vector<double> residuals; // r_k for k = 1..n−1 (forward difference)
    double max_residual = 0.0;
    double dt = 0.0;
};

// r_k = ‖H_{t_k} φ_k − i·(φ_{k+1} − φ_k)/dt‖: the discrete Schrödinger
// residual at the interior slots. A path generated by make_schroedinger_path
// has r_k = O(dt); an arbitrary path does not.
inline StabilityReport schroedinger_residual(const DirectIntegralState& phi,
                                             const GeneratorSpec& gen) {
    detail::require_compatible(phi, gen);
    detail::require(phi.slots() >= 2, "schroedinger_residual: needs at least 2 slots");
    StabilityReport report;
    report.dt = phi.grid().dt();
    report.residuals.reserve(phi.slots() - 1);
    for (int k = 0; k + 1 < phi.slots(); ++k) {
        const Vector diff =
            (phi.slot(k + 1).entries() - phi.slot(k).entries()) / report.dt;
        const Vector r = gen.at(k).entries() * phi.slot(k).entries() -
                         Complex(0.0, 1.0) * diff;
        report.residuals.push_back(r.norm());
        report.max_residual = std::max(report.max_residual, report.residuals.back());
    }
    return report;
}

struct StationarityResult {
    double strict_max = 0.0;            // max_k ‖V_k(dt)·P_k φ_k − P_k φ_k‖
    double phase_insensitive_max = 0.0; // max_k 1 − |⟨Pφ, VPφ⟩|/‖Pφ‖²
};

// Strict slot-stationarity of the projected state under one step, reported
// both as the plain norm (phase-sensitive: an eigenvector with eigenvalue λ
// drifts by O(dt·|λ|)) and as a phase-insensitive overlap deficit.
inline StationarityResult stationarity_check(const HistoryChain& chain,
                                             const DirectIntegralState& phi,
                                             const GeneratorSpec& gen, double dt) {
    detail::require_compatible(phi, gen);
    detail::require(chain.slots() == phi.slots(), "stationarity_check: slot count mismatch");
    detail::require(chain.dim() == phi.dim(), "stationarity_check: dimension mismatch");
    StationarityResult result;
    for (int k = 0; k < phi.slots(); ++k) {
        const Vector projected = chain.projector(k).entries() * phi.slot(k).entries();
        const Vector stepped = hermitian_exponential(gen.at(k), dt).entries() * projected;
        result.strict_max = std::max(result.strict_max, (stepped - projected).norm());
        const double n2 = projected.squaredNorm();
        if (n2 > 0.0) {
            const double overlap = std::abs(projected.dot(stepped)) / n2;
            result.phase_insensitive_max =
                std::max(result.phase_insensitive_max, 1.0 - overlap);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Zeno sweeps

struct ZenoRecord {
    int n = 0;
    double dt = 0.0;
    double s_exact = 0.0;          // |survival_amplitude_exact|²
    double s_pred = 0.0;           // second-order prediction, raw
    double deficit_exact = 0.0;    // 1 − s_exact
    double prediction_error = 0.0; // |s_exact − s_pred|
    bool out_of_validity = false;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares on (ln x, ln y), using only points with y > 0.
// Unavailable (nullopt) with fewer than 3 usable points.
inline std::optional<SlopeFit> fit_loglog(const std::vector<double>& xs,
                                          const std::vector<double>& ys) {
    detail::require(xs.size() == ys.size(), "fit_loglog: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] > 0.0 && xs[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    const std::size_t m = lx.size();
    if (m < 3) return std::nullopt;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    detail::require(sxx > 0.0, "fit_loglog: degenerate abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = syy - sxy * sxy / sxx;
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

// How the per-slot Hamiltonians of a sweep point are built.
struct ConstantHamiltonian {
    HermitianOperator op;
};
struct PerSlotHamiltonians {
    std::vector<HermitianOperator> ops; // usable only with a single matching n
};
struct RandomHamiltonian {
    int dim = 0;
    std::uint64_t seed = 0; // one draw, shared by all slots
};
using HamiltonianSpec = std::variant<ConstantHamiltonian, PerSlotHamiltonians, RandomHamiltonian>;

// How the slot states of a sweep point are built.
struct IdenticalSlots {
    AuxState h0; // the static-Zeno choice: every slot equals h0
};
struct ExplicitSlots {
    std::vector<AuxState> slots; // usable only with a single matching n
};
struct SchroedingerPath {
    AuxState h0; // dynamic Zeno: the path tracked by the same generator
};
using StateSpec = std::variant<IdenticalSlots, ExplicitSlots, SchroedingerPath>;

struct ZenoConfig {
    double t_start = 0.0;
    double total_span = 0.0; // T
    std::vector<int> n_list; // nonempty, strictly increasing
    HamiltonianSpec hamiltonian{ConstantHamiltonian{HermitianOperator::zero(1)}};
    StateSpec state{IdenticalSlots{AuxState::basis(1, 0)}};
};

inline void validate_zeno_config(const ZenoConfig& cfg) {
    detail::require(cfg.total_span > 0.0, "ZenoConfig: total span must be positive");
    detail::require(!cfg.n_list.empty(), "ZenoConfig: n_list must be nonempty");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        detail::require(cfg.n_list[i] >= 1, "ZenoConfig: repetition counts must be >= 1");
        detail::require(i == 0 || cfg.n_list[i] > cfg.n_list[i - 1],
                        "ZenoConfig: n_list must be strictly increasing");
    }
    if (const auto* per_slot = std::get_if<PerSlotHamiltonians>(&cfg.hamiltonian)) {
        detail::require(cfg.n_list.size() == 1 &&
                            static_cast<int>(per_slot->ops.size()) == cfg.n_list.front(),
                        "ZenoConfig: per-slot Hamiltonian list requires a single matching n");
    }
    if (const auto* explicit_slots = std::get_if<ExplicitSlots>(&cfg.state)) {
        detail::require(cfg.n_list.size() == 1 &&
                            static_cast<int>(explicit_slots->slots.size()) ==
                                cfg.n_list.front(),
                        "ZenoConfig: explicit slot list requires a single matching n");
    }
}

inline GeneratorSpec materialize_generator(const HamiltonianSpec& spec, int n) {
    if (const auto* constant = std::get_if<ConstantHamiltonian>(&spec)) {
        return GeneratorSpec::constant(constant->op, n);
    }
    if (const auto* per_slot = std::get_if<PerSlotHamiltonians>(&spec)) {
        detail::require(static_cast<int>(per_slot->ops.size()) == n,
                        "materialize_generator: per-slot list length mismatch");
        return GeneratorSpec(per_slot->ops);
    }
    const auto& random = std::get<RandomHamiltonian>(spec);
    return GeneratorSpec::constant(random_hermitian(random.dim, random.seed), n);
}

inline DirectIntegralState materialize_state(const StateSpec& spec, const GeneratorSpec& gen,
                                             const TimeGrid& grid) {
    if (const auto* identical = std::get_if<IdenticalSlots>(&spec)) {
        return DirectIntegralState::constant(grid, identical->h0);
    }
    if (const auto* explicit_slots = std::get_if<ExplicitSlots>(&spec)) {
        return DirectIntegralState(grid, explicit_slots->slots);
    }
    return make_schroedinger_path(std::get<SchroedingerPath>(spec).h0, gen, grid);
}

struct ZenoSweepResult {
    std::vector<ZenoRecord> records; // n-ascending
    std::optional<SlopeFit> deficit_fit;          // (log n, log 1−S_exact)
    std::optional<SlopeFit> prediction_error_fit; // (log n, log |S_exact−S_pred|)
};

// For each n: build the grid with dt = T/n, materialize states and
// Hamiltonians, and record exact vs predicted survival. Slopes are fitted
// on log-log points, excluding non-positive deficits (exact stability).
inline ZenoSweepResult zeno_sweep(const ZenoConfig& cfg) {
    validate_zeno_config(cfg);
    ZenoSweepResult result;
    std::vector<double> ns, deficits, errors;
    for (const int n : cfg.n_list) {
        const TimeGrid grid(cfg.t_start, n, cfg.total_span);
        const GeneratorSpec gen = materialize_generator(cfg.hamiltonian, n);
        const DirectIntegralState phi = materialize_state(cfg.state, gen, grid);

        ZenoRecord record;
        record.n = n;
        record.dt = grid.dt();
        record.s_exact = std::norm(survival_amplitude_exact(phi, gen, grid.dt()));
        record.s_pred = survival_probability_predicted(phi, gen, cfg.total_span, n);
        record.deficit_exact = 1.0 - record.s_exact;
        record.prediction_error = std::abs(record.s_exact - record.s_pred);
        record.out_of_validity =
            prediction_out_of_validity(phi, gen, cfg.total_span, n);
        result.records.push_back(record);

        ns.push_back(static_cast<double>(n));
        deficits.push_back(record.deficit_exact);
        errors.push_back(record.prediction_error);
    }
    result.deficit_fit = fit_loglog(ns, deficits);
    result.prediction_error_fit = fit_loglog(ns, errors);
    return result;
}

} // namespace folia
