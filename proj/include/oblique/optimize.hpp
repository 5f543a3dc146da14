#pragma once

// Derivative-free minimization: Nelder-Mead with seeded multi-start.

#include "oblique/rng.hpp"

#include <functional>
#include <span>
#include <vector>

namespace oblique::optimize {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
    int max_iterations = 2000;
    double tolerance = 1e-9;     // stop when f(worst) - f(best) <= tolerance
    double initial_scale = 0.1;  // axis-aligned initial simplex edge
    double x_tolerance = 1e-7;   // and every vertex lies within this of the best (max norm)
};

struct LocalResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Never returns a point worse than x0.
LocalResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options);

struct MultiStartOptions {
    int restarts = 32;
    NelderMeadOptions local;
    Seed seed = 0;
    int threads = 1;
};

struct MultiStartResult {
    std::vector<double> best_x;
    double best_value = 0.0;
    bool converged = false;  // the best restart met the tolerance
    int best_restart = 0;
    std::vector<double> per_restart;
    long long evaluations = 0;
};

/// Restart k starts from seeded_starts[k] while those last, otherwise from
/// `dimension` standard normals drawn from Rng(derive_seed(seed, k)). The
/// number of restarts is max(options.restarts, seeded_starts.size()).
/// Restarts may run on `threads` workers; the result does not depend on it.
MultiStartResult multistart(const Objective& f, int dimension, const MultiStartOptions& options,
                            std::span<const std::vector<double>> seeded_starts = {});

/// Thread count from the OBLIQUE_THREADS environment variable, default 1.
int default_threads();

}  // namespace oblique::optimize
