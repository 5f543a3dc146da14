#include "oblique/measures.hpp"

#include "oblique/error.hpp"
#include "oblique/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace oblique::measures {

using channels::TargetSplit;
using qmat::ComplexMatrix;

void OptimizerConfig::validate() const {
    if (restarts < 1) throw Error("restarts must be at least 1");
    if (max_iterations < 1 || inner_max_iterations < 1) throw Error("iteration caps must be at least 1");
    if (!(tolerance > 0.0) || !(inner_tolerance > 0.0) || !(simplex_scale > 0.0))
        throw Error("tolerances and simplex scale must be positive");
    if (!(condition_cap >= 1.0)) throw Error("condition cap must be at least 1");
}

optimize::MultiStartOptions OptimizerConfig::multistart() const {
    validate();
    optimize::MultiStartOptions o;
    o.restarts = restarts;
    o.local.max_iterations = max_iterations;
    o.local.tolerance = tolerance;
    o.local.initial_scale = simplex_scale;
    o.seed = seed;
    o.threads = threads;
    return o;
}

json to_json(const OptimizerConfig& c) {
    return json{{"restarts", c.restarts},
                {"max_iterations", c.max_iterations},
                {"tolerance", c.tolerance},
                {"simplex_scale", c.simplex_scale},
                {"seed", c.seed},
                {"condition_cap", c.condition_cap},
                {"orthonormal_only", c.orthonormal_only},
                {"inner_max_iterations", c.inner_max_iterations},
                {"inner_tolerance", c.inner_tolerance}};
}

OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig c) {
    static const std::set<std::string> known{"restarts",        "max_iterations",       "tolerance",
                                             "simplex_scale",   "seed",                 "condition_cap",
                                             "orthonormal_only", "inner_max_iterations", "inner_tolerance", "v"};
    if (!j.is_object()) throw FormatError("optimizer config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw FormatError("unknown optimizer config key '" + key + "'");
    try {
        if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
        if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<int>();
        if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
        if (j.contains("simplex_scale")) c.simplex_scale = j.at("simplex_scale").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<Seed>();
        if (j.contains("condition_cap")) c.condition_cap = j.at("condition_cap").get<double>();
        if (j.contains("orthonormal_only")) c.orthonormal_only = j.at("orthonormal_only").get<bool>();
        if (j.contains("inner_max_iterations")) c.inner_max_iterations = j.at("inner_max_iterations").get<int>();
        if (j.contains("inner_tolerance")) c.inner_tolerance = j.at("inner_tolerance").get<double>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("optimizer config: ") + e.what());
    }
    return c;
}

json to_json(const MeasureResult& r) {
    return json{{"v", 1},
                {"measure", r.measure},
                {"value", r.value},
                {"converged", r.converged},
                {"restarts", r.restarts_used},
                {"best_basis", r.best_basis},
                {"best_parameters", r.best_parameters},
                {"per_restart", r.per_restart_values},
                {"evaluations", r.evaluations},
                {"counterexample_candidate", r.counterexample_candidate},
                {"seed", r.seed}};
}

double hs_distance(const DensityMatrix& rho, const DensityMatrix& chi) {
    if (rho.dims() != chi.dims()) throw DimensionError("hs_distance: states have different dims");
    return qmat::hs_distance_sq(rho.matrix(), chi.matrix());
}

namespace {

enum class Chart { Orthonormal, Oblique };

// One measured subsystem and the slice of the parameter vector charting its basis.
struct Party {
    TargetSplit split;
    std::size_t offset;
    int dim() const { return split.target_dim(); }
    std::size_t size() const { return 2 * static_cast<std::size_t>(dim()) * static_cast<std::size_t>(dim()); }
};

std::vector<Party> parties_for(const DensityMatrix& rho, bool all) {
    std::vector<Party> ps;
    std::size_t offset = 0;
    const int count = all ? rho.subsystems() : 1;
    for (int k = 0; k < count; ++k) {
        Party p{TargetSplit(rho.dims(), k), offset};
        offset += p.size();
        ps.push_back(std::move(p));
    }
    return ps;
}

int parameter_count(const std::vector<Party>& ps) {
    return static_cast<int>(ps.back().offset + ps.back().size());
}

std::optional<ObliqueBasis> chart_basis(std::span<const double> x, const Party& p, Chart chart, double cap) {
    const auto slice = x.subspan(p.offset, p.size());
    if (chart == Chart::Orthonormal) return ObliqueBasis::orthonormal_from_parameters(slice, p.dim());
    return ObliqueBasis::try_from_parameters(slice, p.dim(), cap);
}

// Applies every party's map in order; nullopt when a basis breaches the cap or
// a denominator vanishes.
std::optional<ComplexMatrix> apply_parties(std::span<const double> x, const std::vector<Party>& ps, Chart chart,
                                           double cap, const ComplexMatrix& m) {
    ComplexMatrix out = m;
    for (const auto& p : ps) {
        auto basis = chart_basis(x, p, chart, cap);
        if (!basis) return std::nullopt;
        try {
            out = channels::oblique_map(p.split, basis->vectors(), basis->duals(), out).matrix;
        } catch (const VanishingDenominator&) {
            return std::nullopt;
        }
    }
    return out;
}

void check_arity(const DensityMatrix& rho, const char* name) {
    if (rho.subsystems() < 2) throw DimensionError(std::string(name) + " needs at least two subsystems");
}

json basis_json(std::span<const double> x, const std::vector<Party>& ps, Chart chart, double cap, bool global) {
    json parties = json::array();
    for (const auto& p : ps) {
        auto b = chart_basis(x, p, chart, cap);
        json j = b ? io::basis_to_json(*b) : json{{"dim", p.dim()}, {"vectors", nullptr}};
        if (b) j["condition"] = b->condition();
        j["target"] = p.split.target();
        j["chart"] = chart == Chart::Orthonormal ? "orthonormal" : "oblique";
        parties.push_back(std::move(j));
    }
    if (global) return json{{"parties", parties}};
    return parties.front();
}

MeasureResult finish(std::string name, const optimize::MultiStartResult& ms, const OptimizerConfig& cfg,
                     const std::vector<Party>& ps, Chart chart, bool global) {
    MeasureResult r;
    r.measure = std::move(name);
    r.value = ms.best_value;
    r.best_parameters = ms.best_x;
    r.best_basis = basis_json(ms.best_x, ps, chart, cfg.condition_cap, global);
    r.converged = ms.converged;
    r.restarts_used = static_cast<int>(ms.per_restart.size());
    r.per_restart_values = ms.per_restart;
    r.seed = cfg.seed;
    r.evaluations = ms.evaluations;
    return r;
}

using Seeds = std::vector<std::vector<double>>;

MeasureResult info_measure(std::string name, const DensityMatrix& rho, const OptimizerConfig& cfg, bool global,
                           Chart chart) {
    check_arity(rho, name.c_str());
    const auto ps = parties_for(rho, global);
    const qmat::Partition parts = global ? qmat::singletons(rho.subsystems()) : qmat::split_first(rho.subsystems());
    const double info0 = qmat::mutual_information(rho.matrix(), rho.dims(), parts);
    const auto f = [&](std::span<const double> x) {
        auto out = apply_parties(x, ps, chart, cfg.condition_cap, rho.matrix());
        if (!out) return kPenalty;
        return info0 - qmat::mutual_information(*out, rho.dims(), parts);
    };
    const auto ms = optimize::multistart(f, parameter_count(ps), cfg.multistart());
    return finish(std::move(name), ms, cfg, ps, chart, global);
}

MeasureResult distance_measure(std::string name, const DensityMatrix& rho, const OptimizerConfig& cfg, bool global,
                               Chart chart, const Seeds& seeds = {}) {
    check_arity(rho, name.c_str());
    const auto ps = parties_for(rho, global);
    const auto f = [&](std::span<const double> x) {
        auto out = apply_parties(x, ps, chart, cfg.condition_cap, rho.matrix());
        if (!out) return kPenalty;
        return qmat::hs_distance_sq(rho.matrix(), *out);
    };
    const auto ms = optimize::multistart(f, parameter_count(ps), cfg.multistart(), seeds);
    return finish(std::move(name), ms, cfg, ps, chart, global);
}

}  // namespace

MeasureResult discord_info(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    return info_measure("discord", rho, cfg, false, Chart::Orthonormal);
}

// For a fixed orthonormal basis the closest sum_a |a><a| (x) M_a has
// M_a = <a|rho|a>, which is exactly the measured state.
MeasureResult discord_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    return distance_measure("discord_geo", rho, cfg, false, Chart::Orthonormal);
}

MeasureResult discord_global(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    return info_measure("discord_global", rho, cfg, true, Chart::Orthonormal);
}

// With every party measured the closest classical state keeps the diagonal of
// rho in the product basis, again the measured state.
MeasureResult discord_global_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    return distance_measure("discord_global_geo", rho, cfg, true, Chart::Orthonormal);
}

MeasureResult oblique_geometric_phi(const DensityMatrix& rho, const OptimizerConfig& cfg, const Seeds& extra_seeds) {
    return distance_measure("d_go1", rho, cfg, false, Chart::Oblique, extra_seeds);
}

MeasureResult oblique_info(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    MeasureResult r = info_measure("d_o", rho, cfg, false, cfg.orthonormal_only ? Chart::Orthonormal : Chart::Oblique);
    r.counterexample_candidate = r.converged && r.value < kCandidateThreshold;
    return r;
}

MeasureResult oblique_global_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    return distance_measure("d_go_global", rho, cfg, true, cfg.orthonormal_only ? Chart::Orthonormal : Chart::Oblique);
}

MeasureResult oblique_global_info(const DensityMatrix& rho, const OptimizerConfig& cfg) {
    MeasureResult r =
        info_measure("d_o_global", rho, cfg, true, cfg.orthonormal_only ? Chart::Orthonormal : Chart::Oblique);
    r.counterexample_candidate = r.converged && r.value < kCandidateThreshold;
    return r;
}

MeasureResult fixed_point_search(const DensityMatrix& rho, const OptimizerConfig& cfg, const Seeds& extra_seeds) {
    check_arity(rho, "fixed_point_search");
    const auto ps = parties_for(rho, false);
    const auto f = [&](std::span<const double> x) {
        auto out = apply_parties(x, ps, Chart::Oblique, cfg.condition_cap, rho.matrix());
        if (!out) return kPenalty;
        return qmat::max_abs_diff(*out, rho.matrix());
    };
    const auto ms = optimize::multistart(f, parameter_count(ps), cfg.multistart(), extra_seeds);
    return finish("fixed_point_residual", ms, cfg, ps, Chart::Oblique, false);
}

std::vector<double> project_to_simplex(std::vector<double> v) {
    if (v.empty()) return v;
    std::vector<double> s = v;
    std::sort(s.begin(), s.end(), std::greater<>());
    double cumulative = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        cumulative += s[k];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (s[k] - t > 0.0) tau = t;
    }
    for (double& x : v) x = std::max(0.0, x - tau);
    return v;
}

namespace {

// Projection of Hermitian blocks onto {M_i >= 0, sum_i tr M_i = 1}: the
// eigenvalues of all blocks jointly go onto the simplex, eigenvectors stay.
void project_blocks(std::vector<ComplexMatrix>& blocks) {
    std::vector<Eigen::SelfAdjointEigenSolver<ComplexMatrix>> es;
    es.reserve(blocks.size());
    std::vector<double> all;
    for (auto& b : blocks) {
        es.emplace_back(0.5 * (b + b.adjoint()));
        for (double l : es.back().eigenvalues()) all.push_back(l);
    }
    const std::vector<double> p = project_to_simplex(std::move(all));
    std::size_t k = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto r = es[i].eigenvalues().size();
        Eigen::VectorXd lam(r);
        for (Eigen::Index j = 0; j < r; ++j) lam(j) = p[k++];
        const ComplexMatrix& u = es[i].eigenvectors();
        blocks[i] = u * lam.asDiagonal() * u.adjoint();
    }
}

double re_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    // Re tr(a b) for Hermitian a, b
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

}  // namespace

InnerSolution closest_zod_for_basis(const DensityMatrix& rho, const ObliqueBasis& basis, int max_iterations,
                                    double tolerance) {
    const TargetSplit split(rho.dims(), 0);
    if (split.target_dim() != basis.dim()) throw DimensionError("basis dimension does not match subsystem A");
    const int n = basis.dim();
    const auto un = static_cast<std::size_t>(n);
    const std::vector<ComplexMatrix> sandwich = split.contract(rho.matrix(), basis.vectors());
    const Eigen::MatrixXd gram = basis.gram().cwiseAbs2();
    const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double rho_sq = rho.matrix().squaredNorm();

    auto objective = [&](const std::vector<ComplexMatrix>& m) {
        double f = rho_sq;
        for (std::size_t i = 0; i < un; ++i) {
            f -= 2.0 * re_trace_product(sandwich[i], m[i]);
            for (std::size_t j = 0; j < un; ++j) f += gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * re_trace_product(m[i], m[j]);
        }
        return f;
    };

    InnerSolution sol;
    std::vector<ComplexMatrix> m = split.contract(rho.matrix(), basis.duals());
    double denom = 0.0;
    for (const auto& b : m) denom += b.trace().real();
    if (denom > channels::kDenominatorFloor) {
        for (auto& b : m) b /= denom;
    } else {
        for (auto& b : m) b = ComplexMatrix::Identity(split.rest_dim(), split.rest_dim()) / double(n * split.rest_dim());
    }
    double f = objective(m);
    sol.start_objective = f;

    std::vector<ComplexMatrix> next(un);
    for (int it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < un; ++i) {
            ComplexMatrix grad = -sandwich[i];
            for (std::size_t j = 0; j < un; ++j) grad += gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * m[j];
            next[i] = m[i] - (2.0 / lipschitz) * grad;
        }
        project_blocks(next);
        const double fn = objective(next);
        sol.iterations = it + 1;
        if (!(fn < f)) break;
        const double gain = f - fn;
        m.swap(next);
        f = fn;
        if (gain <= tolerance) break;
    }
    sol.objective = std::max(0.0, f);
    sol.blocks = std::move(m);
    return sol;
}

MeasureResult oblique_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg, const GeometricSeeds& seeds) {
    check_arity(rho, "d_go");
    const MeasureResult dg = seeds.discord_geometric ? *seeds.discord_geometric : discord_geometric(rho, cfg);
    const MeasureResult dgo1 = seeds.oblique_phi ? *seeds.oblique_phi : oblique_geometric_phi(rho, cfg);

    const auto ps = parties_for(rho, false);
    const int n = ps.front().dim();
    Seeds starts;
    starts.push_back(channels::parameters_of(ObliqueBasis::orthonormal_from_parameters(dg.best_parameters, n).vectors()));
    starts.push_back(dgo1.best_parameters);
    for (const auto& e : seeds.extra) starts.push_back(e);

    const auto f = [&](std::span<const double> x) {
        auto basis = ObliqueBasis::try_from_parameters(x, n, cfg.condition_cap);
        if (!basis) return kPenalty;
        return closest_zod_for_basis(rho, *basis, cfg.inner_max_iterations, cfg.inner_tolerance).objective;
    };
    const auto ms = optimize::multistart(f, parameter_count(ps), cfg.multistart(), starts);
    return finish("d_go", ms, cfg, ps, Chart::Oblique, false);
}

const std::vector<std::string>& measure_names() {
    static const std::vector<std::string> names{"discord", "discord_geo", "discord_global", "discord_global_geo", "d_go",
                                                "d_go1",   "d_o",         "d_go_global",    "d_o_global"};
    return names;
}

bool is_global_measure(const std::string& name) {
    return name == "discord_global" || name == "discord_global_geo" || name == "d_go_global" || name == "d_o_global";
}

MeasureResult measure_by_name(const std::string& name, const DensityMatrix& rho, const OptimizerConfig& cfg) {
    if (name == "discord") return discord_info(rho, cfg);
    if (name == "discord_geo") return discord_geometric(rho, cfg);
    if (name == "discord_global") return discord_global(rho, cfg);
    if (name == "discord_global_geo") return discord_global_geometric(rho, cfg);
    if (name == "d_go") return oblique_geometric(rho, cfg);
    if (name == "d_go1") return oblique_geometric_phi(rho, cfg);
    if (name == "d_o") return oblique_info(rho, cfg);
    if (name == "d_go_global") return oblique_global_geometric(rho, cfg);
    if (name == "d_o_global") return oblique_global_info(rho, cfg);
    throw Error("unknown measure '" + name + "'");
}

}  // namespace oblique::measures
