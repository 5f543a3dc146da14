// oblique: batch front end. Every command prints one JSON document (schema
// version "v":1) that echoes its resolved configuration.
//
// Exit codes: 0 success, 1 usage or input error, 2 certified conjecture
// counterexample, 3 invariant regression.

#include "oblique/channels.hpp"
#include "oblique/conjecture.hpp"
#include "oblique/error.hpp"
#include "oblique/io.hpp"
#include "oblique/measures.hpp"
#include "oblique/optimize.hpp"
#include "oblique/states.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace oblique;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRegression = 3;

// Optimizer flags shared by measure, check-zod and hierarchy-demo. Unset
// flags leave the config-file (or default) value alone.
struct OptimizerFlags {
    std::optional<Seed> seed;
    std::optional<int> restarts;
    std::optional<int> max_iterations;
    std::optional<double> tolerance;
    std::optional<double> simplex_scale;
    std::optional<double> condition_cap;
    std::optional<int> inner_max_iterations;
    std::optional<double> inner_tolerance;
    bool orthonormal_only = false;
    std::optional<int> threads;
    std::string config;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON file with optimizer settings (flags take precedence)");
        app->add_option("--seed", seed, "Master seed");
        app->add_option("--restarts", restarts, "Multi-start restarts");
        app->add_option("--max-iterations", max_iterations, "Nelder-Mead iterations per restart");
        app->add_option("--tolerance", tolerance, "Objective spread tolerance");
        app->add_option("--simplex-scale", simplex_scale, "Initial simplex edge");
        app->add_option("--condition-cap", condition_cap, "Largest admissible basis condition number");
        app->add_option("--inner-max-iterations", inner_max_iterations, "Projected-gradient iteration cap");
        app->add_option("--inner-tolerance", inner_tolerance, "Projected-gradient tolerance");
        app->add_flag("--orthonormal-only", orthonormal_only, "Restrict channel searches to orthonormal bases");
        app->add_option("--threads", threads, "Worker threads (default from OBLIQUE_THREADS)");
    }

    measures::OptimizerConfig resolve(measures::OptimizerConfig base = {}) const {
        if (!config.empty()) base = measures::optimizer_config_from_json(io::read_json_file(config), base);
        if (seed) base.seed = *seed;
        if (restarts) base.restarts = *restarts;
        if (max_iterations) base.max_iterations = *max_iterations;
        if (tolerance) base.tolerance = *tolerance;
        if (simplex_scale) base.simplex_scale = *simplex_scale;
        if (condition_cap) base.condition_cap = *condition_cap;
        if (inner_max_iterations) base.inner_max_iterations = *inner_max_iterations;
        if (inner_tolerance) base.inner_tolerance = *inner_tolerance;
        if (orthonormal_only) base.orthonormal_only = true;
        base.threads = threads ? *threads : optimize::default_threads();
        base.validate();
        return base;
    }
};

void emit(const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw Error("write to " + path + " failed");
}

json matrix_rows(const qmat::ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(io::complex_array(m.row(r).transpose()));
    return rows;
}

std::string measure_key(std::string name) {
    std::replace(name.begin(), name.end(), '-', '_');
    return name;
}

// ---- dual-basis ------------------------------------------------------------

struct DualBasisArgs {
    std::string basis;
    double condition_cap = channels::kDefaultConditionCap;
    std::string output;
};

int run_dual_basis(const DualBasisArgs& a) {
    const auto basis = io::basis_from_json(io::read_json_file(a.basis), a.condition_cap);
    json out{{"v", 1},
             {"command", "dual-basis"},
             {"config", {{"basis", a.basis}, {"condition_cap", a.condition_cap}}},
             {"dim", basis.dim()},
             {"vectors", io::basis_vectors_json(basis.vectors())},
             {"duals", io::basis_vectors_json(basis.duals())},
             {"gram", matrix_rows(basis.gram())},
             {"condition", basis.condition()},
             {"biorthogonality_residual", basis.biorthogonality_residual()}};
    emit(out, a.output);
    return kExitOk;
}

// ---- check-zod -------------------------------------------------------------

struct CheckZodArgs {
    std::string state;
    std::string basis;
    std::optional<int> search;
    double tolerance = channels::kDefaultFixedPointTol;
    int target = 0;
    OptimizerFlags opt;
    std::string output;
};

json decomposition_json(const channels::ObliqueChannel& phi, const qmat::DensityMatrix& rho, double tol) {
    json parts = json::array();
    for (const auto& c : channels::decompose_fixed_point(phi, rho, tol))
        parts.push_back({{"index", c.index}, {"weight", c.weight}, {"state", io::state_to_json(c.state)}});
    return parts;
}

int run_check_zod(const CheckZodArgs& a) {
    if (a.basis.empty() == !a.search) throw Error("check-zod needs exactly one of --basis or --search");
    const auto rho = io::state_from_json(io::read_json_file(a.state));
    if (a.target < 0 || a.target >= rho.subsystems()) throw DimensionError("target subsystem out of range");
    json config{{"state", a.state}, {"tolerance", a.tolerance}, {"target", a.target}};
    json out{{"v", 1}, {"command", "check-zod"}, {"dims", rho.dims()}};

    if (!a.basis.empty()) {
        config["basis"] = a.basis;
        const auto basis = io::basis_from_json(io::read_json_file(a.basis));
        const channels::ObliqueChannel phi(a.target, basis);
        const auto check = channels::is_fixed_point(phi, rho, a.tolerance);
        out["mode"] = "basis";
        out["fixed"] = check.fixed;
        out["residual"] = check.residual;
        out["basis"] = io::basis_to_json(basis);
        if (check.fixed) out["decomposition"] = decomposition_json(phi, rho, a.tolerance);
    } else {
        if (a.target != 0) throw Error("--search acts on subsystem 0");
        measures::OptimizerConfig cfg = a.opt.resolve();
        cfg.restarts = *a.search;
        cfg.validate();
        config["search"] = *a.search;
        config["optimizer"] = measures::to_json(cfg);
        const auto r = measures::fixed_point_search(rho, cfg);
        const auto basis = channels::ObliqueBasis::from_parameters(r.best_parameters, rho.dim(0),
                                                                    std::numeric_limits<double>::infinity());
        const channels::ObliqueChannel phi(0, basis);
        const bool fixed = r.value <= a.tolerance;
        out["mode"] = "search";
        out["fixed"] = fixed;
        out["residual"] = r.value;
        out["basis"] = r.best_basis;
        out["restarts"] = r.restarts_used;
        out["converged"] = r.converged;
        if (fixed) out["decomposition"] = decomposition_json(phi, rho, a.tolerance);
    }
    out["config"] = config;
    emit(out, a.output);
    return kExitOk;
}

// ---- measure ---------------------------------------------------------------

struct MeasureArgs {
    std::string name;
    std::string state;
    OptimizerFlags opt;
    std::string output;
};

int run_measure(const MeasureArgs& a) {
    const std::string key = measure_key(a.name);
    const auto& names = measures::measure_names();
    if (std::find(names.begin(), names.end(), key) == names.end()) throw Error("unknown measure '" + a.name + "'");
    const auto rho = io::state_from_json(io::read_json_file(a.state));
    const auto cfg = a.opt.resolve();
    const auto r = measures::measure_by_name(key, rho, cfg);
    json out = measures::to_json(r);
    out["command"] = "measure";
    json config = measures::to_json(cfg);
    config["state"] = a.state;
    config["measure"] = key;
    out["config"] = config;
    emit(out, a.output);
    return kExitOk;
}

// ---- hierarchy-demo --------------------------------------------------------

struct HierarchyArgs {
    double zero_tol = 1e-6;
    int basis_starts = 10000;
    int basis_iterations = 200;
    OptimizerFlags opt;
    std::string output;
};

constexpr double kPositiveDiscord = 0.01;
constexpr double kPositiveOblique = 1e-3;

std::string classify_discord(double d, double zero_tol) {
    if (std::abs(d) <= zero_tol) return "zero";
    if (d > kPositiveDiscord) return "positive";
    return "ambiguous";
}

int run_hierarchy(const HierarchyArgs& a) {
    if (!(a.zero_tol > 0.0)) throw Error("--zero-tol must be positive");
    if (a.basis_starts < 1 || a.basis_iterations < 1) throw Error("basis search budget must be positive");
    measures::OptimizerConfig base;
    base.restarts = 64;
    const auto cfg = a.opt.resolve(base);
    const double residual_tol = std::min(a.zero_tol, 1e-10);

    measures::OptimizerConfig search = cfg;
    search.restarts = a.basis_starts;
    search.max_iterations = a.basis_iterations;
    search.seed = derive_seed(cfg.seed, 1);

    static const std::map<std::string, std::pair<std::string, std::string>> expected{
        {"w1", {"zero", "zero"}}, {"w2", {"positive", "zero"}}, {"w3", {"positive", "positive"}}};

    json witnesses = json::array();
    bool ok = true;
    std::string pattern;
    for (const auto& w : states::hierarchy_witnesses()) {
        const auto da = measures::discord_info(w.state, cfg);
        measures::GeometricSeeds seeds;
        std::optional<double> own_residual;
        if (w.basis) {
            seeds.extra.push_back(w.basis->to_parameters());
            own_residual = channels::is_fixed_point(channels::ObliqueChannel(0, *w.basis), w.state).residual;
        }
        const auto dgo = measures::oblique_geometric(w.state, cfg, seeds);
        const auto fp = measures::fixed_point_search(w.state, search, seeds.extra);

        const std::string discord = classify_discord(da.value, a.zero_tol);
        std::string oblique = "ambiguous";
        if (own_residual && *own_residual <= residual_tol && dgo.value <= a.zero_tol) oblique = "zero";
        else if (fp.value > kPositiveOblique && dgo.value > kPositiveOblique) oblique = "positive";

        const auto& want = expected.at(w.label);
        const bool pass = discord == want.first && oblique == want.second;
        ok = ok && pass;
        auto sym = [](const std::string& s) { return s == "zero" ? "0" : (s == "positive" ? "+" : "?"); };
        if (!pattern.empty()) pattern += " ";
        pattern += w.label + ":(" + sym(discord) + "," + sym(oblique) + ")";

        witnesses.push_back({{"label", w.label},
                             {"state", io::state_to_json(w.state)},
                             {"discord", da.value},
                             {"d_go", dgo.value},
                             {"own_basis_residual", own_residual ? json(*own_residual) : json(nullptr)},
                             {"search_residual", fp.value},
                             {"search_basis", fp.best_basis},
                             {"observed", {{"discord", discord}, {"oblique", oblique}}},
                             {"expected", {{"discord", want.first}, {"oblique", want.second}}},
                             {"pass", pass}});
    }
    json config{{"optimizer", measures::to_json(cfg)},
                {"zero_tol", a.zero_tol},
                {"residual_tol", residual_tol},
                {"basis_starts", a.basis_starts},
                {"basis_iterations", a.basis_iterations}};
    json out{{"v", 1},
             {"command", "hierarchy-demo"},
             {"config", config},
             {"witnesses", witnesses},
             {"pattern", pattern},
             {"pattern_ok", ok}};
    emit(out, a.output);
    if (!ok) {
        std::cerr << "hierarchy-demo: witness pattern regressed: " << pattern << "\n";
        return kExitRegression;
    }
    return kExitOk;
}

// ---- conjecture ------------------------------------------------------------

struct ConjectureArgs {
    std::string config;
    std::optional<std::string> dims;
    std::optional<int> samples;
    std::optional<std::string> ranks;
    std::optional<std::string> log;
    std::optional<Seed> master_seed;
    std::optional<int> local_iterations;
    std::optional<double> condition_cap;
    std::optional<double> threshold;
    std::optional<double> certification_tolerance;
    std::optional<std::string> shard;
    bool orthonormal_only = false;
    bool quiet = false;
    std::string output;
};

std::vector<qmat::Dims> parse_dims_list(const std::string& text) {
    std::vector<qmat::Dims> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        qmat::Dims d;
        std::stringstream is(item);
        std::string part;
        while (std::getline(is, part, 'x')) {
            try {
                d.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw Error("cannot parse dims '" + item + "' (expected e.g. 2x3)");
            }
        }
        out.push_back(std::move(d));
    }
    if (out.empty()) throw Error("empty dims list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error("cannot parse integer list '" + text + "'");
        }
    }
    return out;
}

int run_conjecture(const ConjectureArgs& a) {
    conjecture::SearchConfig c;
    if (!a.config.empty()) c = conjecture::search_config_from_json(io::read_json_file(a.config), c);
    if (a.dims) c.dims = parse_dims_list(*a.dims);
    if (a.samples) c.samples_per_dim = *a.samples;
    if (a.ranks) c.ranks = parse_int_list(*a.ranks);
    if (a.log) c.output = *a.log;
    if (a.master_seed) c.master_seed = *a.master_seed;
    if (a.local_iterations) c.local_iterations = *a.local_iterations;
    if (a.condition_cap) c.condition_cap = *a.condition_cap;
    if (a.threshold) c.threshold = *a.threshold;
    if (a.certification_tolerance) c.certification_tolerance = *a.certification_tolerance;
    if (a.orthonormal_only) c.orthonormal_only = true;
    if (a.shard) {
        const auto slash = a.shard->find('/');
        if (slash == std::string::npos) throw Error("--shard expects k/M");
        try {
            c.shard_index = std::stoi(a.shard->substr(0, slash));
            c.shard_count = std::stoi(a.shard->substr(slash + 1));
        } catch (const std::exception&) {
            throw Error("--shard expects k/M");
        }
    }
    c.validate();

    long long last_percent = -1;
    conjecture::Progress progress;
    if (!a.quiet)
        progress = [&](long long done, long long total) {
            const long long pct = total > 0 ? 100 * done / total : 100;
            if (pct != last_percent) {
                last_percent = pct;
                std::cerr << "\rconjecture: " << done << "/" << total << " samples (" << pct << "%)" << std::flush;
            }
        };
    const auto summary = conjecture::run_search(c, progress);
    if (!a.quiet && last_percent >= 0) std::cerr << "\n";
    json out = conjecture::to_json(summary, c);
    out["command"] = "conjecture";
    out["new_samples"] = summary.new_samples;
    out["skipped_samples"] = summary.skipped_samples;
    emit(out, a.output);
    return summary.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oblique discord toolkit: dual bases, oblique channels, discord measures, conjecture search"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "oblique 1.0.0");

    DualBasisArgs dual;
    auto* dual_cmd = app.add_subcommand("dual-basis", "Dual basis, Gram matrix and conditioning of a basis file");
    dual_cmd->add_option("basis", dual.basis, "Basis JSON file")->required();
    dual_cmd->add_option("--condition-cap", dual.condition_cap, "Largest admissible condition number");
    dual_cmd->add_option("-o,--output", dual.output, "Write JSON here instead of stdout");

    CheckZodArgs zod;
    auto* zod_cmd = app.add_subcommand("check-zod", "Fixed-point (zero oblique discord) test for a state");
    zod_cmd->add_option("state", zod.state, "State JSON file")->required();
    zod_cmd->add_option("--basis", zod.basis, "Basis JSON file for the channel");
    zod_cmd->add_option("--search", zod.search, "Search over bases with this many restarts instead of --basis");
    zod_cmd->add_option("--tol", zod.tolerance, "Max-norm fixed-point tolerance");
    zod_cmd->add_option("--target", zod.target, "Subsystem the channel acts on");
    zod.opt.attach(zod_cmd);
    zod_cmd->add_option("-o,--output", zod.output, "Write JSON here instead of stdout");

    MeasureArgs meas;
    auto* meas_cmd = app.add_subcommand("measure", "Evaluate one discord-like measure");
    std::string measure_help = "One of:";
    for (const auto& n : measures::measure_names()) {
        std::string h = n;
        std::replace(h.begin(), h.end(), '_', '-');
        measure_help += " " + h;
    }
    meas_cmd->add_option("name", meas.name, measure_help)->required();
    meas_cmd->add_option("state", meas.state, "State JSON file")->required();
    meas.opt.attach(meas_cmd);
    meas_cmd->add_option("-o,--output", meas.output, "Write JSON here instead of stdout");

    HierarchyArgs hier;
    auto* hier_cmd = app.add_subcommand("hierarchy-demo", "Witnesses of the strict inclusions between state families");
    hier_cmd->add_option("--zero-tol", hier.zero_tol, "Values at or below this count as zero");
    hier_cmd->add_option("--basis-starts", hier.basis_starts, "Random basis starts for the fixed-point search");
    hier_cmd->add_option("--basis-iterations", hier.basis_iterations, "Nelder-Mead iterations per basis start");
    hier.opt.attach(hier_cmd);
    hier_cmd->add_option("-o,--output", hier.output, "Write JSON here instead of stdout");

    ConjectureArgs conj;
    auto* conj_cmd = app.add_subcommand("conjecture", "Seeded search for I(rho) < I(Phi rho)");
    conj_cmd->add_option("--config", conj.config, "Search config JSON (flags take precedence)");
    conj_cmd->add_option("--dims", conj.dims, "Comma-separated dims, e.g. 2x2,2x3");
    conj_cmd->add_option("--samples", conj.samples, "Samples per dims entry");
    conj_cmd->add_option("--ranks", conj.ranks, "Comma-separated state ranks cycled over samples");
    conj_cmd->add_option("--log", conj.log, "JSONL log path (appended, resumable)");
    conj_cmd->add_option("--master-seed", conj.master_seed, "Master seed");
    conj_cmd->add_option("--local-iterations", conj.local_iterations, "Nelder-Mead iterations per sample");
    conj_cmd->add_option("--condition-cap", conj.condition_cap, "Largest admissible basis condition number");
    conj_cmd->add_option("--threshold", conj.threshold, "Negativity threshold");
    conj_cmd->add_option("--certification-tolerance", conj.certification_tolerance, "Validity tolerance for certificates");
    conj_cmd->add_option("--shard", conj.shard, "Run shard k of M, written k/M");
    conj_cmd->add_flag("--orthonormal-only", conj.orthonormal_only, "Restrict to orthonormal bases");
    conj_cmd->add_flag("-q,--quiet", conj.quiet, "No progress on stderr");
    conj_cmd->add_option("-o,--output", conj.output, "Write the summary here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*dual_cmd) return run_dual_basis(dual);
        if (*zod_cmd) return run_check_zod(zod);
        if (*meas_cmd) return run_measure(meas);
        if (*hier_cmd) return run_hierarchy(hier);
        if (*conj_cmd) return run_conjecture(conj);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
