#include "oblique/optimize.hpp"

#include "oblique/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

namespace oblique::optimize {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

// NaN compares as +inf so a broken evaluation never wins.
double sanitize(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

double diameter(const std::vector<std::vector<double>>& simplex, std::size_t best) {
    double d = 0.0;
    for (const auto& v : simplex)
        for (std::size_t k = 0; k < v.size(); ++k) d = std::max(d, std::abs(v[k] - simplex[best][k]));
    return d;
}

}  // namespace

LocalResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    LocalResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return sanitize(f(x));
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fx(n + 1);
    fx[0] = eval(simplex[0]);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += options.initial_scale;
        fx[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> idx(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto order = [&] {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    };

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        order();
        const std::size_t best = idx[0], worst = idx[n], second = idx[n - 1];
        if (fx[worst] - fx[best] <= options.tolerance && diameter(simplex, best) <= options.x_tolerance) {
            result.converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[idx[k]][d];
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + kReflect * (centroid[d] - simplex[worst][d]);
        const double fr = eval(xr);
        if (fr < fx[best]) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + kExpand * (xr[d] - centroid[d]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fx[worst] = fe;
            } else {
                simplex[worst] = xr;
                fx[worst] = fr;
            }
            continue;
        }
        if (fr < fx[second]) {
            simplex[worst] = xr;
            fx[worst] = fr;
            continue;
        }
        const bool outside = fr < fx[worst];
        const std::vector<double>& toward = outside ? xr : simplex[worst];
        for (std::size_t d = 0; d < n; ++d) xc[d] = centroid[d] + kContract * (toward[d] - centroid[d]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fx[worst])) {
            simplex[worst] = xc;
            fx[worst] = fc;
            continue;
        }
        for (std::size_t k = 1; k <= n; ++k) {
            auto& v = simplex[idx[k]];
            for (std::size_t d = 0; d < n; ++d) v[d] = simplex[best][d] + kShrink * (v[d] - simplex[best][d]);
            fx[idx[k]] = eval(v);
        }
    }
    order();
    result.x = simplex[idx[0]];
    result.value = fx[idx[0]];
    result.iterations = iter;
    return result;
}

MultiStartResult multistart(const Objective& f, int dimension, const MultiStartOptions& options,
                            std::span<const std::vector<double>> seeded_starts) {
    if (options.restarts < 1) throw Error("restarts must be at least 1");
    if (!(options.local.tolerance > 0.0) || !(options.local.initial_scale > 0.0))
        throw Error("optimizer tolerances must be positive");
    const std::size_t total = std::max<std::size_t>(static_cast<std::size_t>(options.restarts), seeded_starts.size());

    std::vector<LocalResult> runs(total);
    auto run_one = [&](std::size_t k) {
        std::vector<double> x0;
        if (k < seeded_starts.size()) {
            x0 = seeded_starts[k];
            if (x0.size() != static_cast<std::size_t>(dimension)) throw Error("seeded start has the wrong dimension");
        } else {
            Rng rng(derive_seed(options.seed, k));
            x0.resize(static_cast<std::size_t>(dimension));
            for (double& x : x0) x = rng.normal();
        }
        runs[k] = nelder_mead(f, std::move(x0), options.local);
    };

    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(total)));
    if (threads == 1) {
        for (std::size_t k = 0; k < total; ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t k = next++; k < total; k = next++) run_one(k);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    MultiStartResult out;
    out.per_restart.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        out.per_restart.push_back(runs[k].value);
        out.evaluations += runs[k].evaluations;
        if (k == 0 || runs[k].value < out.best_value) {
            out.best_value = runs[k].value;
            out.best_x = runs[k].x;
            out.converged = runs[k].converged;
            out.best_restart = static_cast<int>(k);
        }
    }
    return out;
}

int default_threads() {
    if (const char* env = std::getenv("OBLIQUE_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

}  // namespace oblique::optimize
