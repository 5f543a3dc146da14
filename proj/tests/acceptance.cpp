// Acceptance suite: one PASS/FAIL line per criterion.

#include "oblique/channels.hpp"
#include "oblique/conjecture.hpp"
#include "oblique/error.hpp"
#include "oblique/io.hpp"
#include "oblique/measures.hpp"
#include "oblique/states.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace oblique;
using channels::ObliqueBasis;
using channels::ObliqueChannel;
using nlohmann::json;
using qmat::Complex;
using qmat::ComplexMatrix;
using qmat::ComplexVector;
using qmat::DensityMatrix;
using qmat::Dims;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Report {
    int failed = 0;
    void line(const std::string& id, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << " " << detail << std::endl;
        if (!ok) ++failed;
    }
};

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << x;
    return s.str();
}

std::string fixed(double x, int digits = 1) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << x;
    return s.str();
}

// Test-side linear algebra, dense and independent of the library routes.

double entropy(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (double l : es.eigenvalues())
        if (l > 1e-12) s -= l * std::log2(l);
    return s;
}

ComplexMatrix reduce(const ComplexMatrix& m, int da, int db, bool keep_a) {
    const int d = keep_a ? da : db;
    ComplexMatrix r = ComplexMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < (keep_a ? db : da); ++k)
                r(i, j) += keep_a ? m(i * db + k, j * db + k) : m(k * db + i, k * db + j);
    return r;
}

double mutual_info(const ComplexMatrix& m, int da, int db) {
    return entropy(reduce(m, da, db, true)) + entropy(reduce(m, da, db, false)) - entropy(m);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

// Oblique map on subsystem 0 of a dA x dB operator, duals from an LU inverse.
ComplexMatrix oracle_map(const ComplexMatrix& vectors, int db, const ComplexMatrix& m) {
    const ComplexMatrix duals = vectors.adjoint().inverse();
    const ComplexMatrix id = ComplexMatrix::Identity(db, db);
    ComplexMatrix num = ComplexMatrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < vectors.cols(); ++i) {
        const ComplexMatrix k = kron(vectors.col(i) * duals.col(i).adjoint(), id);
        num += k * m * k.adjoint();
    }
    return num / num.trace().real();
}

ComplexMatrix projective_map(const ComplexMatrix& onb, int db, const ComplexMatrix& m) {
    const ComplexMatrix id = ComplexMatrix::Identity(db, db);
    ComplexMatrix out = ComplexMatrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < onb.cols(); ++i) {
        const ComplexMatrix p = kron(onb.col(i) * onb.col(i).adjoint(), id);
        out += p * m * p;
    }
    return out;
}

double max_abs(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ComplexMatrix gaussian(int rows, int cols, Rng& rng) {
    ComplexMatrix g(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double re = rng.normal();
            g(i, j) = Complex(re, rng.normal());
        }
    return g;
}

ComplexMatrix random_unitary(int n, Rng& rng) {
    return Eigen::HouseholderQR<ComplexMatrix>(gaussian(n, n, rng)).householderQ();
}

ObliqueBasis random_basis(int dim, Seed seed) {
    return states::random_oblique_basis(dim, 1e4, seed);
}

DensityMatrix random_state(const Dims& dims, Seed seed) {
    const int order = qmat::order_of(dims);
    return states::random_density(dims, 1 + static_cast<int>(seed % static_cast<Seed>(order)), seed);
}

// Closed form for two qubits: 1/4 (|x|^2 + |T|^2 - k_max), Pauli expansion of rho.
double geometric_discord_closed_form(const ComplexMatrix& rho) {
    ComplexMatrix s[3];
    s[0] = ComplexMatrix(2, 2);
    s[0] << 0, 1, 1, 0;
    s[1] = ComplexMatrix(2, 2);
    s[1] << 0, Complex(0, -1), Complex(0, 1), 0;
    s[2] = ComplexMatrix(2, 2);
    s[2] << 1, 0, 0, -1;
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    Eigen::Vector3d x;
    Eigen::Matrix3d t;
    for (int i = 0; i < 3; ++i) {
        x(i) = (rho * kron(s[i], id)).trace().real();
        for (int j = 0; j < 3; ++j) t(i, j) = (rho * kron(s[i], s[j])).trace().real();
    }
    const Eigen::Matrix3d k = x * x.transpose() + t * t.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(k);
    return 0.25 * (x.squaredNorm() + t.squaredNorm() - es.eigenvalues().maxCoeff());
}

// min over a theta x phi grid of I(rho) - I(Pi rho) for two qubits, then a
// shrinking pattern search around the best grid point.
double discord_grid(const ComplexMatrix& rho) {
    const double pi = std::numbers::pi;
    const double i0 = mutual_info(rho, 2, 2);
    auto f = [&](double th, double ph) {
        ComplexMatrix onb(2, 2);
        onb(0, 0) = std::cos(th / 2);
        onb(1, 0) = std::polar(std::sin(th / 2), ph);
        onb(0, 1) = -std::polar(std::sin(th / 2), -ph);
        onb(1, 1) = std::cos(th / 2);
        return i0 - mutual_info(projective_map(onb, 2, rho), 2, 2);
    };
    double best = std::numeric_limits<double>::infinity(), bt = 0, bp = 0;
    const int n = 60;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double th = pi * (a + 0.5) / n, ph = 2 * pi * (b + 0.5) / n;
            const double v = f(th, ph);
            if (v < best) best = v, bt = th, bp = ph;
        }
    for (double h = pi / n; h > 1e-7; h /= 2)
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
                const double v = f(bt + a * h, bp + b * h);
                if (v < best) best = v, bt += a * h, bp += b * h;
            }
    return best;
}

// CLI driver.

struct Run {
    int code = -1;
    std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run_cli(const std::string& cli, const std::string& args, const fs::path& out_file) {
    const std::string cmd = quote(cli) + " " + args + " > " + quote(out_file.string()) + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

json strip_timestamps(json j) {
    if (j.is_object()) {
        j.erase("t");
        for (auto& [k, v] : j.items()) v = strip_timestamps(v);
    } else if (j.is_array()) {
        for (auto& v : j) v = strip_timestamps(v);
    }
    return j;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Stripped canonical text of a JSON document or JSONL log.
std::string canonical(const std::string& text, bool lines) {
    if (!lines) return strip_timestamps(json::parse(text)).dump();
    std::string out, line;
    std::istringstream in(text);
    while (std::getline(in, line))
        if (!line.empty()) out += strip_timestamps(json::parse(line)).dump() + "\n";
    return out;
}

// Criteria.

void ac1(Report& rep) {
    const auto t0 = Clock::now();
    double worst_bi = 0.0, worst_ray = 0.0;
    int count = 0;
    for (Seed s = 0; s < 1000; ++s) {
        const int dim = 2 + static_cast<int>(s % 3);
        const auto b = states::random_oblique_basis(dim, channels::kDefaultConditionCap, derive_seed(101, s));
        const ComplexMatrix overlap = b.vectors().adjoint() * b.duals();
        worst_bi = std::max(worst_bi, (overlap - ComplexMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff());
        ComplexMatrix nd = b.duals();
        for (int i = 0; i < dim; ++i) nd.col(i).normalize();
        const auto dd = ObliqueBasis::from_vectors(nd, 1e12);
        for (int i = 0; i < dim; ++i) {
            ComplexVector w = dd.dual(i).normalized();
            const Complex ph = b.vector(i).dot(w);
            w *= std::conj(ph) / std::abs(ph);
            worst_ray = std::max(worst_ray, (w - b.vector(i)).cwiseAbs().maxCoeff());
        }
        ++count;
    }
    const double t = seconds_since(t0);
    rep.line("AC1", worst_bi <= 1e-9 && worst_ray <= 1e-8 && t < 10.0,
             std::to_string(count) + " bases dims 2-4: biorthogonality " + fmt(worst_bi) + " (<=1e-9), double dual " +
                 fmt(worst_ray) + " (<=1e-8), " + fixed(t, 2) + " s (<10 s)");
}

void ac2(Report& rep) {
    const auto t0 = Clock::now();
    double worst_fp = 0.0, worst_rec = 0.0;
    int decomposed = 0;
    for (Seed s = 0; s < 500; ++s) {
        Rng rng(derive_seed(202, s));
        const int da = 2 + static_cast<int>(s % 3);
        const int db = 2 + static_cast<int>((s / 3) % 2);
        states::ZodSpec spec{random_basis(da, derive_seed(203, s)), states::random_weights(da, rng), {}};
        for (int i = 0; i < da; ++i) spec.b_states.push_back(random_state({db}, derive_seed(204, s * 8 + i)));
        const auto rho = states::build_zod(spec);
        const ObliqueChannel phi(0, spec.basis);
        const auto fp = channels::is_fixed_point(phi, rho, 1e-10);
        worst_fp = std::max(worst_fp, fp.residual);
        // independent check of the same residual
        worst_fp = std::max(worst_fp, max_abs(oracle_map(spec.basis.vectors(), db, rho.matrix()), rho.matrix()));
        const auto parts = channels::decompose_fixed_point(phi, rho, 1e-10);
        const auto back = channels::reconstruct(phi, rho.dims(), parts);
        worst_rec = std::max(worst_rec, max_abs(back, rho.matrix()));
        ++decomposed;
    }
    const double t = seconds_since(t0);
    rep.line("AC2", worst_fp <= 1e-10 && worst_rec <= 1e-8 && decomposed == 500 && t < 30.0,
             "500 ZOD states: fixed-point residual " + fmt(worst_fp) + " (<=1e-10), reconstruction " + fmt(worst_rec) +
                 " (<=1e-8), " + fixed(t, 2) + " s (<30 s)");
}

void ac3(Report& rep) {
    const auto t0 = Clock::now();
    const Dims dims{2, 2, 2};
    double idem = 0.0, scale = 0.0, valid = 0.0, comm = 0.0, oracle = 0.0;
    for (Seed s = 0; s < 200; ++s) {
        const auto rho = random_state(dims, derive_seed(301, s));
        std::vector<ObliqueChannel> ch;
        for (int k = 0; k < 3; ++k) ch.emplace_back(k, random_basis(2, derive_seed(302, s * 3 + k)));
        for (int k = 0; k < 3; ++k) {
            const auto out = channels::apply_channel(ch[k], rho);
            idem = std::max(idem, max_abs(channels::apply_channel(ch[k], out).matrix(), out.matrix()));
            for (double c : {0.5, 2.0})
                scale = std::max(scale, max_abs(channels::apply_channel(ch[k], dims, c * rho.matrix()), out.matrix()));
            const auto d = qmat::diagnose(out.matrix());
            valid = std::max({valid, d.hermiticity, d.trace_error, std::max(0.0, -d.min_eigenvalue)});
            const int l = (k + 1) % 3;
            const auto kl = channels::apply_channel(ch[l], out);
            const auto lk = channels::apply_channel(ch[k], channels::apply_channel(ch[l], rho));
            comm = std::max(comm, max_abs(kl.matrix(), lk.matrix()));
            const auto composite = channels::apply_composite(channels::CompositeChannel({ch[k], ch[l]}), rho);
            comm = std::max(comm, max_abs(composite.matrix(), kl.matrix()));
        }
        // subsystem 0 against an independent dense map
        oracle = std::max(oracle, max_abs(channels::apply_channel(ch[0], rho).matrix(),
                                          oracle_map(ch[0].basis().vectors(), 4, rho.matrix())));
    }
    const double t = seconds_since(t0);
    const double worst = std::max({idem, scale, valid, comm, oracle});
    rep.line("AC3", worst <= 1e-9 && t < 60.0,
             "200 states 2x2x2: idempotence " + fmt(idem) + ", scale " + fmt(scale) + ", validity " + fmt(valid) +
                 ", commutativity " + fmt(comm) + ", dense oracle " + fmt(oracle) + " (all <=1e-9), " + fixed(t, 2) +
                 " s (<60 s)");
}

void ac4(Report& rep) {
    double worst = 0.0, min_di = std::numeric_limits<double>::infinity(), min_oracle = min_di;
    for (Seed s = 0; s < 200; ++s) {
        Rng rng(derive_seed(401, s));
        const int da = 2 + static_cast<int>(s % 2);
        const int db = 2 + static_cast<int>((s / 2) % 2);
        const auto rho = random_state({da, db}, derive_seed(402, s));
        const ComplexMatrix u = random_unitary(da, rng);
        const ObliqueChannel phi(0, ObliqueBasis::from_vectors(u));
        const auto out = channels::apply_channel(phi, rho);
        const ComplexMatrix proj = projective_map(u, db, rho.matrix());
        worst = std::max(worst, max_abs(out.matrix(), proj));
        min_di = std::min(min_di, conjecture::delta_i(rho, phi));
        min_oracle = std::min(min_oracle, mutual_info(rho.matrix(), da, db) - mutual_info(proj, da, db));
    }
    rep.line("AC4", worst <= 1e-10 && min_di >= -1e-7 && min_oracle >= -1e-7,
             "200 states: projective-map agreement " + fmt(worst) + " (<=1e-10), min dI " + fmt(min_di) +
                 " (oracle " + fmt(min_oracle) + ", >=-1e-7)");
}

void ac5(Report& rep) {
    measures::OptimizerConfig cfg;
    cfg.seed = 5;
    const auto bell = states::bell_state();
    const double grid = discord_grid(bell.matrix());
    const double opt = measures::discord_info(bell, cfg).value;
    const double dg = measures::discord_geometric(bell, cfg).value;
    const double closed = geometric_discord_closed_form(bell.matrix());
    double zero = 0.0, closed_err = 0.0;
    for (Seed s = 0; s < 10; ++s) {
        Rng rng(derive_seed(501, s));
        const ComplexMatrix u = random_unitary(2, rng);
        const int db = 2 + static_cast<int>(s % 2);
        states::ZodSpec spec{ObliqueBasis::from_vectors(u), states::random_weights(2, rng),
                             {random_state({db}, derive_seed(502, s)), random_state({db}, derive_seed(503, s))}};
        const auto lab = states::build_zod_labeled(spec, "classical-quantum");
        zero = std::max({zero, std::abs(measures::discord_info(lab.state, cfg).value),
                         std::abs(measures::discord_geometric(lab.state, cfg).value)});
        if (db == 2) {
            const auto r = random_state({2, 2}, derive_seed(504, s));
            closed_err = std::max(closed_err,
                                  std::abs(measures::discord_geometric(r, cfg).value - geometric_discord_closed_form(r.matrix())));
        }
    }
    const bool ok = std::abs(grid - 1.0) <= 1e-3 && std::abs(opt - 1.0) <= 1e-3 && std::abs(dg - 0.5) <= 1e-6 &&
                    std::abs(closed - 0.5) <= 1e-12 && zero <= 1e-6 && closed_err <= 1e-6;
    rep.line("AC5", ok,
             "Bell D^A grid " + fixed(grid, 9) + " optimizer " + fixed(opt, 9) + " (1+-1e-3); D_G " + fixed(dg, 9) +
                 " closed form " + fixed(closed, 9) + " (0.5+-1e-6); random two-qubit D_G vs closed form " +
                 fmt(closed_err) + "; classical-quantum states max |D| " + fmt(zero) + " (<=1e-6)");
}

void ac6(Report& rep, int threads) {
    const auto t0 = Clock::now();
    measures::OptimizerConfig cfg;
    cfg.restarts = 32;
    cfg.threads = threads;
    double worst = 0.0;
    int states_done = 0;
    for (const Dims& dims : {Dims{2, 2}, Dims{2, 3}})
        for (Seed s = 0; s < 100; ++s) {
            const auto rho = random_state(dims, derive_seed(601 + static_cast<Seed>(dims[1]), s));
            cfg.seed = derive_seed(602, s);
            measures::GeometricSeeds seeds;
            seeds.discord_geometric = measures::discord_geometric(rho, cfg);
            seeds.oblique_phi = measures::oblique_geometric_phi(rho, cfg);
            const double dg = seeds.discord_geometric->value;
            const double dgo1 = seeds.oblique_phi->value;
            const double dgo = measures::oblique_geometric(rho, cfg, seeds).value;
            worst = std::max({worst, -dgo, dgo - dgo1, dgo - dg});
            ++states_done;
        }
    const double t = seconds_since(t0);
    rep.line("AC6", worst <= 1e-9 && t < 1200.0,
             std::to_string(states_done) + " states 2x2/2x3, 32 restarts: worst violation of 0<=D_GO<=D_GO1, D_GO<=D_G " +
                 fmt(std::max(worst, 0.0)) + " (<=1e-9), " + fixed(t) + " s (<1200 s)");
}

void ac7(Report& rep, const std::string& cli, const fs::path& work) {
    const auto t0 = Clock::now();
    std::set<std::string> patterns;
    bool ok = true;
    std::string detail;
    double w2_res = 0.0, w3_search = std::numeric_limits<double>::infinity(), w3_dgo = w3_search;
    double w2_disc = w3_search, w3_disc = w3_search, w1_max = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        const auto r = run_cli(cli, "hierarchy-demo --seed " + std::to_string(seed), work / "ac7.json");
        if (r.code != 0) {
            ok = false;
            detail += " seed " + std::to_string(seed) + " exit " + std::to_string(r.code) + ";";
            continue;
        }
        const json j = json::parse(r.out);
        patterns.insert(j.at("pattern").get<std::string>());
        ok = ok && j.at("pattern_ok").get<bool>() && j.at("config").at("basis_starts").get<int>() == 10000 &&
             j.at("config").at("optimizer").at("restarts").get<int>() == 64;
        for (const auto& w : j.at("witnesses")) {
            const std::string label = w.at("label");
            const double disc = w.at("discord"), dgo = w.at("d_go");
            if (label == "w1") {
                w1_max = std::max({w1_max, std::abs(disc), std::abs(dgo)});
            } else if (label == "w2") {
                w2_disc = std::min(w2_disc, disc);
                w2_res = std::max(w2_res, w.at("own_basis_residual").get<double>());
                w1_max = std::max(w1_max, std::abs(dgo));
            } else {
                w3_disc = std::min(w3_disc, disc);
                w3_search = std::min(w3_search, w.at("search_residual").get<double>());
                w3_dgo = std::min(w3_dgo, dgo);
            }
        }
    }
    ok = ok && patterns.size() == 1 && w1_max <= 1e-6 && w2_disc > 0.01 && w2_res <= 1e-10 && w3_disc > 0.01 &&
         w3_search > 1e-3 && w3_dgo > 1e-3;
    const std::string pattern = patterns.size() == 1 ? *patterns.begin() : std::to_string(patterns.size()) + " patterns";
    rep.line("AC7", ok,
             "10 seeds, pattern '" + pattern + "'; w1 max|D^A|,|D_GO| and w2 D_GO " + fmt(w1_max) + "; w2 D^A " +
                 fixed(w2_disc, 4) + " residual " + fmt(w2_res) + " (<=1e-10); w3 D^A " + fixed(w3_disc, 4) +
                 ", search residual over 1e4 starts " + fmt(w3_search) + " (>1e-3), D_GO over 64 restarts " +
                 fmt(w3_dgo) + " (>1e-3); " + fixed(seconds_since(t0)) + " s" + detail);
}

// dI of a certified candidate straight from the dense oracle.
double oracle_delta_i(const json& cert) {
    const Dims dims = cert.at("dims").get<Dims>();
    const ComplexMatrix basis = io::basis_columns_from_json(json{{"dim", dims[0]}, {"vectors", cert.at("basis")}});
    const int n = qmat::order_of(dims);
    ComplexMatrix rho(n, n);
    const auto& data = cert.at("state");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const auto& z = data.at(static_cast<std::size_t>(i * n + j));
            rho(i, j) = Complex(z.at(0).get<double>(), z.at(1).get<double>());
        }
    const int da = dims[0], db = n / da;
    return mutual_info(rho, da, db) - mutual_info(oracle_map(basis, db, rho), da, db);
}

void ac8(Report& rep, const std::string& cli, const fs::path& work) {
    const auto t0 = Clock::now();
    const fs::path log = work / "ac8.jsonl", olog = work / "ac8_orthonormal.jsonl";
    fs::remove(log);
    fs::remove(olog);
    const std::string common = "conjecture --dims 2x2,2x3,3x3 --samples 10000 -q";
    const auto r = run_cli(cli, common + " --log " + quote(log.string()), work / "ac8.json");
    const auto ro = run_cli(cli, common + " --orthonormal-only --log " + quote(olog.string()), work / "ac8_orthonormal.json");
    const double t = seconds_since(t0);
    if ((r.code != 0 && r.code != 2) || (ro.code != 0 && ro.code != 2)) {
        rep.line("AC8", false, "search exit codes " + std::to_string(r.code) + ", " + std::to_string(ro.code));
        return;
    }
    const json sum = json::parse(r.out), osum = json::parse(ro.out);

    const auto records = conjecture::read_log(log);
    double replay = 0.0;
    std::set<std::pair<long long, std::string>> keys;
    for (const auto& rec : records) {
        replay = std::max(replay, std::abs(conjecture::replay(rec) - rec.delta_i));
        keys.emplace(rec.index, rec.stage);
    }
    const bool complete = keys.size() == records.size() && records.size() == 2u * 30000u;
    const double ortho_floor = osum.at("global_min_delta_i").get<double>();
    const double gmin = sum.at("global_min_delta_i").get<double>();
    const json& gr = sum.at("global_min_record");

    std::string per_dim;
    for (const auto& d : sum.at("per_dim"))
        per_dim += " " + std::to_string(d.at("dims")[0].get<int>()) + "x" + std::to_string(d.at("dims")[1].get<int>()) +
                   ":" + fixed(d.at("min_delta_i").get<double>(), 6) + "(" +
                   std::to_string(d.at("below_threshold").get<long long>()) + " below)";

    bool outcome_ok = false;
    std::string outcome;
    if (r.code == 0) {
        outcome_ok = sum.at("certified").get<long long>() == 0;
        outcome = "exit 0, no certified counterexample";
    } else {
        const json& c = sum.at("best_certificate");
        const auto clamps = c.at("clamp_values").get<std::vector<double>>();
        const double spread = *std::max_element(clamps.begin(), clamps.end()) - *std::min_element(clamps.begin(), clamps.end());
        const bool clamp_ok = clamps.size() == 3 && spread <= 1e-9 &&
                              *std::max_element(clamps.begin(), clamps.end()) < -1e-7;
        const bool cond_ok = c.at("condition").get<double>() <= channels::kDefaultConditionCap &&
                             c.at("biorthogonality_residual").get<double>() <= 1e-9;
        const double dense = oracle_delta_i(c);
        const bool oracle_ok = std::abs(dense - c.at("delta_i").get<double>()) <= 1e-9 &&
                               std::abs(c.at("delta_i_extended").get<double>() - c.at("delta_i").get<double>()) <= 1e-9;
        outcome_ok = clamp_ok && cond_ok && oracle_ok;
        outcome = "exit 2, " + std::to_string(sum.at("certified").get<long long>()) +
                  " certified counterexamples; best certificate dI " + fixed(c.at("delta_i").get<double>(), 12) +
                  " (dense oracle " + fixed(dense, 12) + ", extended " +
                  fixed(c.at("delta_i_extended").get<double>(), 12) + "), clamp spread " + fmt(spread) +
                  ", condition " + fixed(c.at("condition").get<double>(), 3) +
                  (clamp_ok && cond_ok && oracle_ok ? "" : " CERTIFICATE CHECK FAILED");
    }
    const bool ok = complete && replay <= 1e-12 && ortho_floor >= -1e-7 && outcome_ok && t < 1800.0;
    rep.line("AC8", ok,
             std::to_string(records.size()) + " records for 3x10^4 samples, replay " + fmt(replay) +
                 " (<=1e-12), orthonormal floor " + fmt(ortho_floor) + " (>=-1e-7); global min dI " + fixed(gmin, 12) +
                 " at sample " + std::to_string(gr.at("i").get<long long>()) + " dims " + gr.at("dims").dump() +
                 " rank " + std::to_string(gr.at("rank").get<int>()) + " stage " + gr.at("stage").get<std::string>() +
                 " seed " + std::to_string(gr.at("seed").get<Seed>()) + ";" + per_dim + "; " + outcome + "; " +
                 fixed(t) + " s (<1800 s)");
}

void ac9(Report& rep, const std::string& cli, const fs::path& work) {
    const fs::path bell = work / "bell.json", zp = work / "zero_plus.json";
    {
        std::ofstream(bell) << io::state_to_json(states::bell_state()).dump();
        const double s = 1.0 / std::sqrt(2.0);
        ComplexMatrix v(2, 2);
        v << 1, s, 0, s;
        std::ofstream(zp) << io::basis_to_json(ObliqueBasis::from_vectors(v)).dump();
    }
    const fs::path log = work / "ac9.jsonl";
    struct Cmd {
        std::string name, args;
        bool search = false;
    };
    const std::vector<Cmd> cmds{
        {"dual-basis", "dual-basis " + quote(zp.string())},
        {"check-zod", "check-zod " + quote(bell.string()) + " --search 8 --seed 3"},
        {"measure d-go", "measure d-go " + quote(bell.string()) + " --restarts 8 --seed 4"},
        {"measure d-o", "measure d-o " + quote(bell.string()) + " --restarts 8 --seed 4 --threads 3"},
        {"measure discord-global", "measure discord-global " + quote(bell.string()) + " --restarts 4"},
        {"hierarchy-demo", "hierarchy-demo --seed 6 --basis-starts 500"},
        {"conjecture", "conjecture --dims 2x2,2x3 --samples 200 -q --master-seed 9 --log " + quote(log.string()), true},
    };
    std::vector<std::string> bad;
    for (const auto& c : cmds) {
        std::string first, first_log;
        bool same = true;
        for (int rep_i = 0; rep_i < 2; ++rep_i) {
            if (c.search) fs::remove(log);
            const auto r = run_cli(cli, c.args, work / "ac9.json");
            if (r.code != 0 && r.code != 2) same = false;
            std::string text;
            try {
                text = canonical(r.out, false) + (c.search ? canonical(read_file(log), true) : "");
            } catch (const std::exception&) {
                same = false;
            }
            if (rep_i == 0)
                first = text;
            else
                same = same && text == first && !text.empty();
        }
        if (!same) bad.push_back(c.name);
    }
    std::string detail = std::to_string(cmds.size()) + " commands rerun with identical flags, JSON identical after removing timestamps";
    for (const auto& b : bad) detail += "; differs: " + b;
    rep.line("AC9", bad.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria AC1-AC9"};
    std::string workdir = "acceptance_work", cli;
    std::vector<int> only;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--workdir", workdir, "Scratch directory");
    app.add_option("--cli", cli, "Path of the oblique executable (AC7-AC9)")->required();
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--threads", threads, "Optimizer threads for AC6");
    CLI11_PARSE(app, argc, argv);
    const fs::path work = fs::absolute(workdir);
    fs::create_directories(work);

    Report rep;
    auto want = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
    const std::vector<std::function<void()>> criteria{
        [&] { ac1(rep); },          [&] { ac2(rep); },
        [&] { ac3(rep); },          [&] { ac4(rep); },
        [&] { ac5(rep); },          [&] { ac6(rep, threads); },
        [&] { ac7(rep, cli, work); }, [&] { ac8(rep, cli, work); },
        [&] { ac9(rep, cli, work); },
    };
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!want(static_cast<int>(k + 1))) continue;
        try {
            criteria[k]();
        } catch (const std::exception& e) {
            rep.line("AC" + std::to_string(k + 1), false, std::string("threw: ") + e.what());
        }
    }
    std::cout << rep.failed << " criteria failed" << std::endl;
    return rep.failed == 0 ? 0 : 1;
}
