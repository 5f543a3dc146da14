#include "oblique/states.hpp"

#include "oblique/error.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace oblique::states {

using qmat::Complex;
using qmat::ComplexMatrix;
using qmat::ComplexVector;
using qmat::Dims;

namespace {

void check_weights(const std::vector<double>& w) {
    if (w.empty()) throw InvalidStateError("weights must not be empty");
    double sum = 0.0;
    for (double p : w) {
        if (!(p >= 0.0)) throw InvalidStateError("weights must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "weights sum to " << sum << ", expected 1";
        throw InvalidStateError(os.str());
    }
}

const Dims& common_dims(const std::vector<DensityMatrix>& states, const char* what) {
    if (states.empty()) throw DimensionError(std::string("no ") + what + " states given");
    for (const auto& s : states)
        if (s.dims() != states.front().dims()) throw DimensionError(std::string(what) + " states have mismatched dims");
    return states.front().dims();
}

Dims concat(const Dims& a, const Dims& b) {
    Dims out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

double params_condition(const std::vector<double>& params, int dim) {
    ComplexMatrix cols(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int t = 0; t < dim; ++t) {
            const auto k = 2 * static_cast<std::size_t>(i * dim + t);
            cols(t, i) = Complex(params[k], params[k + 1]);
        }
    for (int i = 0; i < dim; ++i) cols.col(i).normalize();
    return channels::condition_number(cols);
}

bool is_orthonormal(const ObliqueBasis& b) {
    return qmat::max_abs_diff(b.gram(), ComplexMatrix::Identity(b.dim(), b.dim())) <= 1e-12;
}

}  // namespace

DensityMatrix build_separable(const SeparableSpec& spec) {
    check_weights(spec.weights);
    if (spec.a_states.size() != spec.weights.size() || spec.b_states.size() != spec.weights.size())
        throw DimensionError("separable spec needs one A and one B state per weight");
    const Dims& da = common_dims(spec.a_states, "A");
    const Dims& db = common_dims(spec.b_states, "B");
    const Dims dims = concat(da, db);
    const int n = qmat::order_of(dims);
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (std::size_t i = 0; i < spec.weights.size(); ++i)
        m += spec.weights[i] * qmat::tensor(spec.a_states[i].matrix(), spec.b_states[i].matrix());
    return DensityMatrix::assume_valid(dims, std::move(m));
}

DensityMatrix build_zod(const ZodSpec& spec) {
    check_weights(spec.weights);
    const int n = spec.basis.dim();
    if (spec.weights.size() > static_cast<std::size_t>(n)) {
        std::ostringstream os;
        os << "zero-oblique-discord spec has " << spec.weights.size() << " terms but the basis has only " << n
           << " vectors";
        throw DimensionError(os.str());
    }
    if (spec.b_states.size() != spec.weights.size()) throw DimensionError("one B state per weight is required");
    const Dims& db = common_dims(spec.b_states, "B");
    const Dims dims = concat(Dims{n}, db);
    const channels::TargetSplit split(dims, 0);
    std::vector<ComplexMatrix> blocks(static_cast<std::size_t>(n), ComplexMatrix::Zero(split.rest_dim(), split.rest_dim()));
    for (std::size_t i = 0; i < spec.weights.size(); ++i) blocks[i] = spec.weights[i] * spec.b_states[i].matrix();
    return DensityMatrix::assume_valid(dims, split.embed(spec.basis.vectors(), blocks));
}

DensityMatrix build_global_zod(const GlobalZodSpec& spec) {
    check_weights(spec.weights);
    if (spec.bases.size() < 2) throw DimensionError("a global spec needs at least two subsystems");
    Dims dims;
    for (const auto& b : spec.bases) dims.push_back(b.dim());
    const int n = qmat::order_of(dims);
    if (spec.weights.size() != static_cast<std::size_t>(n)) {
        std::ostringstream os;
        os << "global spec has " << spec.weights.size() << " weights, expected " << n;
        throw DimensionError(os.str());
    }
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    std::vector<int> digit(dims.size(), 0);
    for (int flat = 0; flat < n; ++flat) {
        int rem = flat;
        for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
            digit[static_cast<std::size_t>(k)] = rem % dims[static_cast<std::size_t>(k)];
            rem /= dims[static_cast<std::size_t>(k)];
        }
        const double p = spec.weights[static_cast<std::size_t>(flat)];
        if (p == 0.0) continue;
        ComplexVector v = spec.bases[0].vector(digit[0]);
        for (std::size_t k = 1; k < dims.size(); ++k) {
            const ComplexVector next = spec.bases[k].vector(digit[k]);
            ComplexVector prod(v.size() * next.size());
            for (Eigen::Index a = 0; a < v.size(); ++a) prod.segment(a * next.size(), next.size()) = v(a) * next;
            v = std::move(prod);
        }
        m += p * qmat::projector(v);
    }
    return DensityMatrix::assume_valid(dims, std::move(m));
}

Labeled build_zod_labeled(const ZodSpec& spec, std::string label) {
    return {std::move(label), build_zod(spec), true, true, is_orthonormal(spec.basis), spec.basis};
}

Labeled build_global_zod_labeled(const GlobalZodSpec& spec, std::string label) {
    bool orthonormal = true;
    for (const auto& b : spec.bases) orthonormal = orthonormal && is_orthonormal(b);
    // Zero global oblique discord implies zero oblique discord with respect to the first party.
    return {std::move(label), build_global_zod(spec), true, true, orthonormal, spec.bases.front()};
}

SeparableSpec as_separable(const ZodSpec& spec) {
    SeparableSpec out;
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
        out.weights.push_back(spec.weights[i]);
        out.a_states.push_back(DensityMatrix::pure({spec.basis.dim()}, spec.basis.vector(static_cast<int>(i))));
        out.b_states.push_back(spec.b_states[i]);
    }
    return out;
}

DensityMatrix random_density(const Dims& dims, int rank, Seed seed) {
    const int n = qmat::order_of(dims);
    if (rank < 1 || rank > n) throw DimensionError("rank must lie in [1, " + std::to_string(n) + "]");
    Rng rng(seed);
    ComplexMatrix g(n, rank);
    for (int c = 0; c < rank; ++c)
        for (int r = 0; r < n; ++r) {
            const double re = rng.normal();
            const double im = rng.normal();
            g(r, c) = Complex(re, im);
        }
    ComplexMatrix m = g * g.adjoint();
    m /= m.trace().real();
    m = 0.5 * (m + m.adjoint());
    return DensityMatrix::assume_valid(dims, std::move(m));
}

std::vector<double> random_basis_parameters(int dim, double cap, Seed seed, int budget) {
    if (dim < 2) throw DimensionError("basis dimension must be at least 2");
    Rng rng(seed);
    std::vector<double> params(2 * static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    double last_cond = 0.0;
    for (int attempt = 0; attempt < budget; ++attempt) {
        for (double& x : params) x = rng.normal();
        if (ObliqueBasis::try_from_parameters(params, dim, cap)) return params;
        last_cond = params_condition(params, dim);
    }
    std::ostringstream os;
    os << "no basis with condition number <= " << cap << " after " << budget << " samples";
    throw IllConditionedBasis(os.str(), last_cond);
}

ObliqueBasis random_oblique_basis(int dim, double cap, Seed seed, int budget) {
    return ObliqueBasis::from_parameters(random_basis_parameters(dim, cap, seed, budget), dim, cap);
}

std::vector<double> random_weights(int count, Rng& rng) {
    std::vector<double> w(static_cast<std::size_t>(count));
    for (double& x : w) {
        double u = 0.0;
        while (u == 0.0) u = rng.uniform();
        x = -std::log(u);
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= sum;
    return w;
}

ComplexVector ket(int dim, int index) {
    ComplexVector v = ComplexVector::Zero(dim);
    v(index) = 1.0;
    return v;
}

ComplexVector plus_ket() {
    ComplexVector v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return v;
}

DensityMatrix bell_state() {
    ComplexVector psi = ComplexVector::Zero(4);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    return DensityMatrix::pure({2, 2}, psi);
}

std::vector<Labeled> hierarchy_witnesses() {
    const ComplexMatrix p0 = qmat::projector(ket(2, 0));
    const ComplexMatrix p1 = qmat::projector(ket(2, 1));
    const ComplexMatrix pp = qmat::projector(plus_ket());
    const Dims dims{2, 2};
    using qmat::tensor;

    ComplexMatrix zo(2, 2);
    zo.col(0) = ket(2, 0);
    zo.col(1) = plus_ket();

    std::vector<Labeled> out;
    out.push_back({"w1", DensityMatrix::assume_valid(dims, 0.5 * (tensor(p0, p0) + tensor(p1, p1))), true, true,
                   true, ObliqueBasis::computational(2)});
    out.push_back({"w2", DensityMatrix::assume_valid(dims, 0.5 * (tensor(p0, p0) + tensor(pp, p1))), true, true,
                   false, ObliqueBasis::from_vectors(zo)});
    out.push_back({"w3", DensityMatrix::assume_valid(dims, (tensor(p0, p0) + tensor(p1, p1) + tensor(pp, pp)) / 3.0),
                   true, false, false, std::nullopt});
    return out;
}

}  // namespace oblique::states
