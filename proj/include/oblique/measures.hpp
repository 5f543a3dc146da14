#pragma once

// Discord-like quantities, each defined as an infimum and realized by
// seeded multi-start Nelder-Mead. Reported values are the best feasible
// objective found, i.e. upper bounds on the infima.
//
// Bipartite measures act on subsystem 0 (A) against the rest (B). Global
// measures act on every subsystem. Geometric values are squared
// Hilbert-Schmidt distances; information values are in bits.

#include "oblique/channels.hpp"
#include "oblique/optimize.hpp"
#include "oblique/qmat.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace oblique::measures {

using channels::ObliqueBasis;
using nlohmann::json;
using qmat::DensityMatrix;

inline constexpr double kPenalty = 1e6;
inline constexpr double kCandidateThreshold = -1e-6;

struct OptimizerConfig {
    int restarts = 32;
    int max_iterations = 2000;
    double tolerance = 1e-9;
    double simplex_scale = 0.1;
    Seed seed = 0;
    double condition_cap = channels::kDefaultConditionCap;
    /// Restrict oblique-channel searches to orthonormal bases (unitary chart).
    bool orthonormal_only = false;
    int inner_max_iterations = 500;
    double inner_tolerance = 1e-10;
    int threads = 1;

    /// Throws Error unless restarts >= 1 and every tolerance is positive.
    void validate() const;
    optimize::MultiStartOptions multistart() const;
};

json to_json(const OptimizerConfig& c);

/// Keys as written by to_json; missing keys keep the values in `base`,
/// unknown keys throw FormatError.
OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig base = {});

struct MeasureResult {
    std::string measure;
    double value = 0.0;
    std::vector<double> best_parameters;
    json best_basis;
    bool converged = false;
    int restarts_used = 0;
    std::vector<double> per_restart_values;
    Seed seed = 0;
    long long evaluations = 0;
    /// Set by the information-theoretic oblique measures when a converged
    /// value falls below -1e-6, i.e. I(rho) < I(Phi rho) for the best channel.
    bool counterexample_candidate = false;
};

json to_json(const MeasureResult& r);

/// tr[(rho - chi)^2]
double hs_distance(const DensityMatrix& rho, const DensityMatrix& chi);

MeasureResult discord_info(const DensityMatrix& rho, const OptimizerConfig& cfg);
MeasureResult discord_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg);
MeasureResult discord_global(const DensityMatrix& rho, const OptimizerConfig& cfg);
MeasureResult discord_global_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg);

/// Optional starting points for the geometric oblique search. Missing
/// results are computed with the same config.
struct GeometricSeeds {
    std::optional<MeasureResult> discord_geometric;
    std::optional<MeasureResult> oblique_phi;
    std::vector<std::vector<double>> extra;  // oblique-chart parameter vectors
};

/// Distance to the closest zero-oblique-discord state. Restart 0 starts at the
/// best orthonormal basis of discord_geometric, restart 1 at the best basis of
/// oblique_geometric_phi, so the value never exceeds either.
MeasureResult oblique_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg, const GeometricSeeds& seeds = {});

/// min over channels of tr[(rho - Phi rho)^2]
MeasureResult oblique_geometric_phi(const DensityMatrix& rho, const OptimizerConfig& cfg,
                                    const std::vector<std::vector<double>>& extra_seeds = {});

/// min over channels of I(rho) - I(Phi rho); no sign guarantee.
MeasureResult oblique_info(const DensityMatrix& rho, const OptimizerConfig& cfg);

MeasureResult oblique_global_geometric(const DensityMatrix& rho, const OptimizerConfig& cfg);
MeasureResult oblique_global_info(const DensityMatrix& rho, const OptimizerConfig& cfg);

/// Smallest max-norm residual |Phi rho - rho| found over oblique bases on A.
MeasureResult fixed_point_search(const DensityMatrix& rho, const OptimizerConfig& cfg,
                                 const std::vector<std::vector<double>>& extra_seeds = {});

/// Inner problem of the geometric oblique measure for a fixed basis:
///   min || rho - sum_i |i><i| (x) M_i ||^2   s.t.  M_i >= 0, sum_i tr M_i = 1
/// solved by projected gradient with step 1/L, L = 2 lambda_max(G),
/// G_ij = |<i|j>|^2, starting from the blocks of Phi(rho).
struct InnerSolution {
    double objective = 0.0;
    double start_objective = 0.0;
    std::vector<qmat::ComplexMatrix> blocks;
    int iterations = 0;
};

InnerSolution closest_zod_for_basis(const DensityMatrix& rho, const ObliqueBasis& basis, int max_iterations = 500,
                                    double tolerance = 1e-10);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

/// Names accepted by measure_by_name: discord, discord_geo, discord_global,
/// discord_global_geo, d_go, d_go1, d_o, d_go_global, d_o_global.
const std::vector<std::string>& measure_names();
bool is_global_measure(const std::string& name);
MeasureResult measure_by_name(const std::string& name, const DensityMatrix& rho, const OptimizerConfig& cfg);

}  // namespace oblique::measures
