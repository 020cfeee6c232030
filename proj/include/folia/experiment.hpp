#pragma once

// Config-driven experiment runner behind the command-line tool. Parses and
// validates a JSON experiment description, runs one of the four experiments
// (zeno-sweep, consistency, stability, evolve-check) and writes a CSV of
// records plus a JSON summary. Identical configs reproduce byte-identical
// CSV output.

#include <folia/version.hpp>
#include <folia/zeno.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace folia::experiment {

using nlohmann::json;

enum class ExperimentKind { ZenoSweep, Consistency, Stability, EvolveCheck };

inline const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::ZenoSweep: return "zeno-sweep";
        case ExperimentKind::Consistency: return "consistency";
        case ExperimentKind::Stability: return "stability";
        case ExperimentKind::EvolveCheck: return "evolve-check";
    }
    return "?";
}

struct BasisFamily {};
struct ExplicitRank1Family {
    std::vector<AuxState> vectors; // an orthonormal basis, reused at every slot
};
using FamilySpec = std::variant<BasisFamily, ExplicitRank1Family>;

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::ZenoSweep;
    int dimension = 0;
    double t_start = 0.0;
    double total_span = 0.0;
    std::vector<int> n_list;
    HamiltonianSpec hamiltonian{ConstantHamiltonian{HermitianOperator::zero(1)}};
    StateSpec state{IdenticalSlots{AuxState::basis(1, 0)}};
    std::optional<FamilySpec> family;
    std::vector<double> probabilities;
    double consistency_tol = 1e-10;
    long long branch_cap = kDefaultBranchCap;
    std::string records_name = "records.csv";
    std::string summary_name = "summary.json";
};

// ---------------------------------------------------------------------------
// Validation: every violation is reported, each naming the offending field.

namespace detail_cfg {

inline bool is_nonneg_int(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

inline bool is_complex_pair(const json& v) {
    return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
}

inline void check_simple_state(const json& state, int dim, const std::string& field,
                               std::vector<std::string>& out) {
    if (!state.is_object() || !state.contains("kind") || !state["kind"].is_string()) {
        out.push_back(field + ": must be an object with a string `kind`");
        return;
    }
    const std::string kind = state["kind"].get<std::string>();
    if (kind == "basis") {
        if (!state.contains("index") || !is_nonneg_int(state["index"])) {
            out.push_back(field + ".index: basis state needs a nonnegative integer index");
        } else if (dim > 0 && state["index"].get<long long>() >= dim) {
            out.push_back(field + ".index: must be smaller than `dimension`");
        }
    } else if (kind == "explicit") {
        if (!state.contains("amplitudes") || !state["amplitudes"].is_array()) {
            out.push_back(field + ".amplitudes: explicit state needs an array of [re, im]");
            return;
        }
        for (const auto& a : state["amplitudes"]) {
            if (!is_complex_pair(a)) {
                out.push_back(field + ".amplitudes: entries must be [re, im] number pairs");
                return;
            }
        }
        if (dim > 0 && static_cast<int>(state["amplitudes"].size()) != dim) {
            out.push_back(field + ".amplitudes: length must equal `dimension`");
        }
    } else if (kind == "random") {
        if (!state.contains("seed") || !is_nonneg_int(state["seed"])) {
            out.push_back(field + ".seed: random state needs a nonnegative integer seed");
        }
    } else {
        out.push_back(field + ".kind: unknown state kind `" + kind + "`");
    }
}

} // namespace detail_cfg

// Full schema plus cross-field validation without running; returns every
// violation found, not just the first. An empty result means the config is
// runnable.
inline std::vector<std::string> validate_config(const json& j) {
    using detail_cfg::is_nonneg_int;
    std::vector<std::string> out;
    if (!j.is_object()) {
        out.push_back("config: top level must be a JSON object");
        return out;
    }

    static const std::set<std::string> known = {
        "experiment", "dimension", "grid", "hamiltonian",  "state",
        "family",     "probabilities", "tolerances", "branch_cap", "output"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) out.push_back(key + ": unknown field");
    }

    std::string experiment;
    if (!j.contains("experiment") || !j["experiment"].is_string()) {
        out.push_back("experiment: required string, one of zeno-sweep | consistency | "
                      "stability | evolve-check");
    } else {
        experiment = j["experiment"].get<std::string>();
        if (experiment != "zeno-sweep" && experiment != "consistency" &&
            experiment != "stability" && experiment != "evolve-check") {
            out.push_back("experiment: unknown experiment `" + experiment + "`");
        }
    }

    int dim = 0;
    if (!j.contains("dimension") || !is_nonneg_int(j["dimension"]) ||
        j["dimension"].get<long long>() < 1) {
        out.push_back("dimension: required integer >= 1");
    } else {
        dim = j["dimension"].get<int>();
    }

    // grid
    long long n_single = 0;
    std::size_t n_count = 0;
    if (!j.contains("grid") || !j["grid"].is_object()) {
        out.push_back("grid: required object with total_span and n or n_list");
    } else {
        const json& grid = j["grid"];
        if (grid.contains("t_start") && !grid["t_start"].is_number()) {
            out.push_back("grid.t_start: must be a number");
        }
        if (!grid.contains("total_span") || !grid["total_span"].is_number() ||
            grid["total_span"].get<double>() <= 0.0) {
            out.push_back("grid.total_span: required number > 0");
        }
        const bool has_n = grid.contains("n");
        const bool has_list = grid.contains("n_list");
        if (has_n == has_list) {
            out.push_back("grid: exactly one of `n` or `n_list` is required");
        } else if (has_n) {
            if (!is_nonneg_int(grid["n"]) || grid["n"].get<long long>() < 1) {
                out.push_back("grid.n: must be an integer >= 1");
            } else {
                n_single = grid["n"].get<long long>();
                n_count = 1;
            }
        } else {
            if (!grid["n_list"].is_array() || grid["n_list"].empty()) {
                out.push_back("grid.n_list: must be a nonempty array of integers");
            } else {
                long long prev = 0;
                bool ok = true;
                for (const auto& v : grid["n_list"]) {
                    if (!is_nonneg_int(v) || v.get<long long>() < 1) {
                        out.push_back("grid.n_list: entries must be integers >= 1");
                        ok = false;
                        break;
                    }
                    const long long n = v.get<long long>();
                    if (n == prev) {
                        out.push_back("grid.n_list: duplicate entries are not allowed");
                        ok = false;
                        break;
                    }
                    if (n < prev) {
                        out.push_back("grid.n_list: must be strictly increasing");
                        ok = false;
                        break;
                    }
                    prev = n;
                }
                if (ok) {
                    n_count = grid["n_list"].size();
                    n_single = grid["n_list"][0].get<long long>();
                }
            }
        }
    }

    // hamiltonian
    if (!j.contains("hamiltonian") || !j["hamiltonian"].is_object() ||
        !j["hamiltonian"].contains("kind") || !j["hamiltonian"]["kind"].is_string()) {
        out.push_back("hamiltonian: required object with a string `kind`");
    } else {
        const json& ham = j["hamiltonian"];
        const std::string kind = ham["kind"].get<std::string>();
        if (kind == "pauli-combo") {
            if (dim != 0 && dim != 2) {
                out.push_back("hamiltonian: pauli-combo requires dimension 2");
            }
            for (const char* coeff : {"x", "y", "z", "i"}) {
                if (ham.contains(coeff) && !ham[coeff].is_number()) {
                    out.push_back(std::string("hamiltonian.") + coeff +
                                  ": coefficient must be a number");
                }
            }
        } else if (kind == "diagonal") {
            if (!ham.contains("entries") || !ham["entries"].is_array()) {
                out.push_back("hamiltonian.entries: diagonal kind needs an array of numbers");
            } else {
                for (const auto& e : ham["entries"]) {
                    if (!e.is_number()) {
                        out.push_back("hamiltonian.entries: entries must be real numbers");
                        break;
                    }
                }
                if (dim > 0 && static_cast<int>(ham["entries"].size()) != dim) {
                    out.push_back("hamiltonian.entries: length must equal `dimension`");
                }
            }
        } else if (kind == "random-hermitian") {
            if (!ham.contains("seed") || !is_nonneg_int(ham["seed"])) {
                out.push_back("hamiltonian.seed: random-hermitian needs a nonnegative "
                              "integer seed");
            }
        } else {
            out.push_back("hamiltonian.kind: unknown kind `" + kind + "`");
        }
    }

    // state
    if (!j.contains("state") || !j["state"].is_object()) {
        out.push_back("state: required object with a string `kind`");
    } else {
        const json& state = j["state"];
        const std::string kind =
            state.contains("kind") && state["kind"].is_string() ? state["kind"] : "";
        if (kind == "schroedinger-path") {
            if (!state.contains("h0")) {
                out.push_back("state.h0: schroedinger-path needs an initial state");
            } else {
                detail_cfg::check_simple_state(state["h0"], dim, "state.h0", out);
            }
        } else {
            detail_cfg::check_simple_state(state, dim, "state", out);
        }
    }

    // family (optional; required by consistency)
    long long family_histories = 0;
    if (j.contains("family")) {
        const json& family = j["family"];
        if (!family.is_object() || !family.contains("kind") || !family["kind"].is_string()) {
            out.push_back("family: must be an object with a string `kind`");
        } else {
            const std::string kind = family["kind"].get<std::string>();
            if (kind == "basis") {
                // nothing else to check
            } else if (kind == "explicit-rank1") {
                if (!family.contains("vectors") || !family["vectors"].is_array()) {
                    out.push_back("family.vectors: explicit-rank1 needs an array of vectors");
                } else {
                    if (dim > 0 && static_cast<int>(family["vectors"].size()) != dim) {
                        out.push_back("family.vectors: needs exactly `dimension` vectors");
                    }
                    for (const auto& vec : family["vectors"]) {
                        if (!vec.is_array() ||
                            (dim > 0 && static_cast<int>(vec.size()) != dim)) {
                            out.push_back("family.vectors: each vector needs `dimension` "
                                          "[re, im] pairs");
                            break;
                        }
                        bool pairs_ok = true;
                        for (const auto& c : vec) {
                            if (!detail_cfg::is_complex_pair(c)) pairs_ok = false;
                        }
                        if (!pairs_ok) {
                            out.push_back("family.vectors: entries must be [re, im] pairs");
                            break;
                        }
                    }
                }
            } else {
                out.push_back("family.kind: unknown kind `" + kind + "`");
            }
        }
        if (dim > 0 && n_count == 1) {
            family_histories = 1;
            for (long long k = 0; k < n_single && family_histories <= (1 << 20); ++k) {
                family_histories *= dim;
            }
        }
    } else if (experiment == "consistency") {
        out.push_back("family: required for the consistency experiment");
    }

    // probabilities (optional; required by consistency)
    if (j.contains("probabilities")) {
        const json& probs = j["probabilities"];
        if (!probs.is_array() || probs.empty()) {
            out.push_back("probabilities: must be a nonempty array of numbers");
        } else {
            double total = 0.0;
            bool numbers = true;
            for (const auto& p : probs) {
                if (!p.is_number() || p.get<double>() < 0.0) {
                    out.push_back("probabilities: entries must be numbers >= 0");
                    numbers = false;
                    break;
                }
                total += p.get<double>();
            }
            if (numbers && std::abs(total - 1.0) > 1e-12) {
                out.push_back("probabilities: must sum to 1 within 1e-12");
            }
            if (family_histories > 0 &&
                static_cast<long long>(probs.size()) > family_histories) {
                out.push_back("probabilities: more entries than family histories");
            }
        }
    } else if (experiment == "consistency") {
        out.push_back("probabilities: required for the consistency experiment");
    }

    if (j.contains("tolerances")) {
        const json& tol = j["tolerances"];
        if (!tol.is_object()) {
            out.push_back("tolerances: must be an object");
        } else if (tol.contains("consistency") &&
                   (!tol["consistency"].is_number() ||
                    tol["consistency"].get<double>() < 0.0)) {
            out.push_back("tolerances.consistency: must be a number >= 0");
        }
    }

    if (j.contains("branch_cap") &&
        (!is_nonneg_int(j["branch_cap"]) || j["branch_cap"].get<long long>() < 1)) {
        out.push_back("branch_cap: must be an integer >= 1");
    }

    if (j.contains("output")) {
        const json& output = j["output"];
        if (!output.is_object()) {
            out.push_back("output: must be an object");
        } else {
            for (const char* key : {"records", "summary"}) {
                if (output.contains(key) &&
                    (!output[key].is_string() || output[key].get<std::string>().empty())) {
                    out.push_back(std::string("output.") + key +
                                  ": must be a nonempty file name");
                }
            }
        }
    }

    // grid shape vs experiment
    if (out.empty()) {
        if (experiment != "zeno-sweep" && experiment != "stability" && n_count > 1) {
            out.push_back("grid.n_list: experiment `" + experiment +
                          "` uses a single n, not a sweep list");
        }
        if ((experiment == "stability" || experiment == "evolve-check") && n_count >= 1 &&
            n_single < 2) {
            out.push_back("grid: experiment `" + experiment +
                          "` needs at least 2 slots per grid");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing (assumes a validated document).

namespace detail_cfg {

inline Vector parse_amplitudes(const json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        v(static_cast<int>(i)) = Complex(arr[i][0].get<double>(), arr[i][1].get<double>());
    }
    return v;
}

inline AuxState parse_simple_state(const json& state, int dim) {
    const std::string kind = state["kind"].get<std::string>();
    if (kind == "basis") return AuxState::basis(dim, state["index"].get<int>());
    if (kind == "explicit") return AuxState(parse_amplitudes(state["amplitudes"]));
    // random: Gaussian entries, normalized
    AuxState raw = random_state(dim, state["seed"].get<std::uint64_t>());
    return AuxState(raw.entries() / raw.norm());
}

inline Matrix pauli_combo(double x, double y, double z, double i) {
    Matrix m(2, 2);
    m(0, 0) = Complex(z + i, 0.0);
    m(0, 1) = Complex(x, -y);
    m(1, 0) = Complex(x, y);
    m(1, 1) = Complex(i - z, 0.0);
    return m;
}

} // namespace detail_cfg

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    const std::string experiment = j["experiment"].get<std::string>();
    if (experiment == "zeno-sweep") cfg.experiment = ExperimentKind::ZenoSweep;
    else if (experiment == "consistency") cfg.experiment = ExperimentKind::Consistency;
    else if (experiment == "stability") cfg.experiment = ExperimentKind::Stability;
    else cfg.experiment = ExperimentKind::EvolveCheck;

    cfg.dimension = j["dimension"].get<int>();

    const json& grid = j["grid"];
    cfg.t_start = grid.value("t_start", 0.0);
    cfg.total_span = grid["total_span"].get<double>();
    if (grid.contains("n")) {
        cfg.n_list = {grid["n"].get<int>()};
    } else {
        for (const auto& v : grid["n_list"]) cfg.n_list.push_back(v.get<int>());
    }

    const json& ham = j["hamiltonian"];
    const std::string ham_kind = ham["kind"].get<std::string>();
    if (ham_kind == "pauli-combo") {
        cfg.hamiltonian = ConstantHamiltonian{HermitianOperator(detail_cfg::pauli_combo(
            ham.value("x", 0.0), ham.value("y", 0.0), ham.value("z", 0.0),
            ham.value("i", 0.0)))};
    } else if (ham_kind == "diagonal") {
        Matrix m = Matrix::Zero(cfg.dimension, cfg.dimension);
        for (int i = 0; i < cfg.dimension; ++i) {
            m(i, i) = ham["entries"][i].get<double>();
        }
        cfg.hamiltonian = ConstantHamiltonian{HermitianOperator(std::move(m))};
    } else {
        cfg.hamiltonian =
            RandomHamiltonian{cfg.dimension, ham["seed"].get<std::uint64_t>()};
    }

    const json& state = j["state"];
    const std::string state_kind = state["kind"].get<std::string>();
    if (state_kind == "schroedinger-path") {
        cfg.state =
            SchroedingerPath{detail_cfg::parse_simple_state(state["h0"], cfg.dimension)};
    } else {
        cfg.state = IdenticalSlots{detail_cfg::parse_simple_state(state, cfg.dimension)};
    }

    if (j.contains("family")) {
        const json& family = j["family"];
        if (family["kind"].get<std::string>() == "basis") {
            cfg.family = BasisFamily{};
        } else {
            ExplicitRank1Family explicit_family;
            for (const auto& vec : family["vectors"]) {
                explicit_family.vectors.emplace_back(detail_cfg::parse_amplitudes(vec));
            }
            cfg.family = std::move(explicit_family);
        }
    }

    if (j.contains("probabilities")) {
        for (const auto& p : j["probabilities"]) {
            cfg.probabilities.push_back(p.get<double>());
        }
    }

    if (j.contains("tolerances") && j["tolerances"].contains("consistency")) {
        cfg.consistency_tol = j["tolerances"]["consistency"].get<double>();
    }
    if (j.contains("branch_cap")) cfg.branch_cap = j["branch_cap"].get<long long>();
    if (j.contains("output")) {
        cfg.records_name = j["output"].value("records", cfg.records_name);
        cfg.summary_name = j["output"].value("summary", cfg.summary_name);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
    json summary;
    std::filesystem::path records_path;
    std::filesystem::path summary_path;
};

namespace detail_cfg {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open output file " + path.string());
    out << text;
}

inline ProjectionFamily build_family(const ExperimentConfig& cfg, int n) {
    if (!cfg.family) return ProjectionFamily::computational_basis(cfg.dimension, n);
    if (std::holds_alternative<BasisFamily>(*cfg.family)) {
        return ProjectionFamily::computational_basis(cfg.dimension, n);
    }
    const auto& explicit_family = std::get<ExplicitRank1Family>(*cfg.family);
    std::vector<Projector> slot;
    slot.reserve(explicit_family.vectors.size());
    for (const auto& v : explicit_family.vectors) slot.push_back(Projector::onto(v));
    return ProjectionFamily(std::vector<std::vector<Projector>>(n, slot));
}

// The first `count` product indices in lexicographic order.
inline std::vector<HistoryIndex> leading_indices(const ProjectionFamily& family,
                                                 std::size_t count) {
    std::vector<int> radices(family.slots());
    for (int k = 0; k < family.slots(); ++k) radices[k] = family.alternatives(k);
    std::vector<HistoryIndex> result;
    std::vector<int> idx(family.slots(), 0);
    do {
        result.push_back(HistoryIndex{idx});
    } while (result.size() < count && detail::next_index(idx, radices));
    detail::require(result.size() == count,
                    "probabilities: more entries than family histories");
    return result;
}

inline json seeds_of(const ExperimentConfig& cfg, const json& j) {
    json seeds = json::object();
    if (std::holds_alternative<RandomHamiltonian>(cfg.hamiltonian)) {
        seeds["hamiltonian"] = std::get<RandomHamiltonian>(cfg.hamiltonian).seed;
    }
    const json& state = j["state"];
    const json& simple =
        state["kind"] == "schroedinger-path" ? state["h0"] : state;
    if (simple["kind"] == "random") seeds["state"] = simple["seed"].get<std::uint64_t>();
    return seeds;
}

inline json fit_to_json(const std::optional<SlopeFit>& fit) {
    if (!fit) return json{{"available", false}};
    return json{{"available", true},
                {"slope", fit->slope},
                {"intercept", fit->intercept},
                {"r_squared", fit->r_squared}};
}

} // namespace detail_cfg

inline RunResult run_experiment(const ExperimentConfig& cfg, const json& config_echo,
                                const std::filesystem::path& outdir) {
    using detail_cfg::format_double;
    const auto started = std::chrono::steady_clock::now();
    std::filesystem::create_directories(outdir);

    std::string csv;
    json results = json::object();

    switch (cfg.experiment) {
        case ExperimentKind::ZenoSweep: {
            ZenoConfig zeno_cfg{cfg.t_start, cfg.total_span, cfg.n_list, cfg.hamiltonian,
                                cfg.state};
            const ZenoSweepResult sweep = zeno_sweep(zeno_cfg);
            csv = "n,dt,S_exact,S_pred,deficit_exact,prediction_error,"
                  "flag_out_of_validity\n";
            for (const auto& r : sweep.records) {
                csv += std::to_string(r.n) + ',' + format_double(r.dt) + ',' +
                       format_double(r.s_exact) + ',' + format_double(r.s_pred) + ',' +
                       format_double(r.deficit_exact) + ',' +
                       format_double(r.prediction_error) + ',' +
                       (r.out_of_validity ? "1" : "0") + '\n';
            }
            results["points"] = sweep.records.size();
            results["deficit_fit"] = detail_cfg::fit_to_json(sweep.deficit_fit);
            results["prediction_error_fit"] =
                detail_cfg::fit_to_json(sweep.prediction_error_fit);
            results["final_record"] = {
                {"n", sweep.records.back().n},
                {"S_exact", sweep.records.back().s_exact},
                {"S_pred", sweep.records.back().s_pred}};
            break;
        }
        case ExperimentKind::Consistency: {
            const int n = cfg.n_list.front();
            const ProjectionFamily family = detail_cfg::build_family(cfg, n);
            const auto indices =
                detail_cfg::leading_indices(family, cfg.probabilities.size());
            std::vector<std::pair<double, HistoryIndex>> entries;
            for (std::size_t i = 0; i < indices.size(); ++i) {
                entries.emplace_back(cfg.probabilities[i], indices[i]);
            }
            const HistoryDensity rho(family, std::move(entries));
            const ConsistencyReport report =
                consistency_check(rho, cfg.consistency_tol, cfg.branch_cap);

            csv = "alpha,alpha_prime,re_d,im_d,abs_d\n";
            std::vector<int> radices(family.slots());
            for (int k = 0; k < family.slots(); ++k) radices[k] = family.alternatives(k);
            json diagonal = json::array();
            std::vector<int> a(family.slots(), 0);
            do {
                std::vector<int> b(family.slots(), 0);
                do {
                    const HistoryIndex ia{a}, ib{b};
                    const Complex d =
                        decoherence_functional(rho, ia, ib, cfg.branch_cap);
                    csv += ia.to_string() + ',' + ib.to_string() + ',' +
                           format_double(d.real()) + ',' + format_double(d.imag()) + ',' +
                           format_double(std::abs(d)) + '\n';
                    if (a == b) diagonal.push_back(d.real());
                } while (detail::next_index(b, radices));
            } while (detail::next_index(a, radices));

            results["consistent"] = report.consistent;
            results["worst_off_diagonal"] = report.worst_off_diagonal;
            results["tolerance"] = cfg.consistency_tol;
            results["diagonal"] = diagonal;
            results["trace"] = history_trace(rho, cfg.branch_cap);
            break;
        }
        case ExperimentKind::Stability: {
            csv = "n,dt,max_residual,mean_residual\n";
            json per_n = json::array();
            for (const int n : cfg.n_list) {
                const TimeGrid grid(cfg.t_start, n, cfg.total_span);
                const GeneratorSpec gen = materialize_generator(cfg.hamiltonian, n);
                const DirectIntegralState phi = materialize_state(cfg.state, gen, grid);
                const StabilityReport report = schroedinger_residual(phi, gen);
                double mean = 0.0;
                for (const double r : report.residuals) mean += r;
                mean /= static_cast<double>(report.residuals.size());
                csv += std::to_string(n) + ',' + format_double(report.dt) + ',' +
                       format_double(report.max_residual) + ',' + format_double(mean) +
                       '\n';
                per_n.push_back({{"n", n},
                                 {"dt", report.dt},
                                 {"max_residual", report.max_residual}});
            }
            results["reports"] = per_n;
            if (per_n.size() >= 2) {
                json ratios = json::array();
                for (std::size_t i = 1; i < per_n.size(); ++i) {
                    const double prev = per_n[i - 1]["max_residual"].get<double>();
                    const double cur = per_n[i]["max_residual"].get<double>();
                    ratios.push_back(cur > 0.0 ? prev / cur : 0.0);
                }
                results["max_residual_ratios"] = ratios;
            }
            break;
        }
        case ExperimentKind::EvolveCheck: {
            const int n = cfg.n_list.front();
            const TimeGrid grid(cfg.t_start, n, cfg.total_span);
            const GeneratorSpec gen = materialize_generator(cfg.hamiltonian, n);
            const DirectIntegralState phi = materialize_state(cfg.state, gen, grid);
            const double dt = grid.dt();

            struct Row {
                std::string name;
                double value;
                double threshold;
                bool pass;
            };
            std::vector<Row> rows;
            auto push = [&rows](const std::string& name, double value, double threshold) {
                rows.push_back({name, value, threshold, value <= threshold});
            };

            { // group law, cyclic, m1 = 1 then m2 = 2 vs m = 3
                const auto once = evolve_step(evolve_step(phi, gen, 1, Boundary::Cyclic),
                                              gen, 2, Boundary::Cyclic);
                const auto direct = evolve_step(phi, gen, 3, Boundary::Cyclic);
                double worst = 0.0;
                for (int k = 0; k < n; ++k) {
                    worst = std::max(
                        worst, (once.slot(k).entries() - direct.slot(k).entries()).norm());
                }
                push("group_law", worst, 1e-9);
            }
            { // norm preservation under cyclic evolution
                const auto evolved = evolve_step(phi, gen, 1, Boundary::Cyclic);
                const double before = std::real(integral_inner_product(phi, phi));
                const double after =
                    std::real(integral_inner_product(evolved, evolved));
                push("unitarity", std::abs(after - before), 1e-9);
            }
            { // relabel m = 1 equals per-slot exponential application
                const auto evolved = evolve_step(phi, gen, 1, Boundary::Relabel);
                double worst = 0.0;
                for (int k = 0; k < n; ++k) {
                    const Vector direct =
                        hermitian_exponential(gen.at(k), dt).entries() *
                        phi.slot(k).entries();
                    worst = std::max(worst, (evolved.slot(k).entries() - direct).norm());
                }
                push("relabel_wiring", worst, 1e-12);
            }
            { // intertwining with the computational-basis chain
                const ProjectionFamily family =
                    ProjectionFamily::computational_basis(cfg.dimension, n);
                const HistoryChain chain(family,
                                         HistoryIndex{std::vector<int>(n, 0)});
                push("intertwining", intertwining_check(chain, phi, gen, 2), 1e-10);
            }
            { // generator relation residual, halving dtau three times
                double dtau = dt;
                double previous = 0.0;
                for (int level = 0; level < 4; ++level) {
                    const double residual = generator_relation_check(phi, gen, dtau);
                    rows.push_back({"generator_relation_dtau_" + std::to_string(level),
                                    residual, std::numeric_limits<double>::infinity(),
                                    true});
                    if (level > 0) {
                        const double ratio = residual > 0.0 ? previous / residual : 2.0;
                        rows.push_back({"generator_relation_ratio_" + std::to_string(level),
                                        ratio, std::numeric_limits<double>::infinity(),
                                        ratio >= 1.6});
                    }
                    previous = residual;
                    dtau /= 2.0;
                }
            }

            csv = "check,value,threshold,pass\n";
            bool all_pass = true;
            for (const auto& row : rows) {
                csv += row.name + ',' + format_double(row.value) + ',' +
                       format_double(row.threshold) + ',' + (row.pass ? "1" : "0") + '\n';
                all_pass = all_pass && row.pass;
            }
            results["all_pass"] = all_pass;
            break;
        }
    }

    RunResult run;
    run.records_path = outdir / cfg.records_name;
    run.summary_path = outdir / cfg.summary_name;
    detail_cfg::write_text(run.records_path, csv);

    const auto finished = std::chrono::steady_clock::now();
    run.summary = json{
        {"artifact", {{"name", "folia"}, {"version", kVersion}}},
        {"experiment", to_string(cfg.experiment)},
        {"config", config_echo},
        {"results", results},
        {"seeds", detail_cfg::seeds_of(cfg, config_echo)},
        {"duration_seconds",
         std::chrono::duration<double>(finished - started).count()}};
    detail_cfg::write_text(run.summary_path, run.summary.dump(2) + "\n");
    return run;
}

} // namespace folia::experiment
