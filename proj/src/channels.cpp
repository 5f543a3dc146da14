#include "oblique/channels.hpp"

#include "oblique/error.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace oblique::channels {

using qmat::Complex;

double condition_number(const ComplexMatrix& m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

std::optional<ObliqueBasis> ObliqueBasis::build(ComplexMatrix columns, double cap, double* condition_out) {
    Eigen::JacobiSVD<ComplexMatrix> svd(columns, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    const double cond = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    if (condition_out) *condition_out = cond;
    if (!std::isfinite(cond) || cond > cap) return std::nullopt;

    // S = U diag(s) V^dagger, so (S^dagger)^{-1} = U diag(1/s) V^dagger.
    ObliqueBasis b;
    b.duals_ = svd.matrixU() * s.cwiseInverse().asDiagonal() * svd.matrixV().adjoint();
    b.vectors_ = std::move(columns);
    b.condition_ = cond;
    return b;
}

ObliqueBasis ObliqueBasis::from_vectors(const ComplexMatrix& columns, double cap) {
    if (columns.rows() != columns.cols() || columns.rows() < 2)
        throw DimensionError("a basis of C^n needs n vectors of length n, n >= 2");
    ComplexMatrix cols = columns;
    for (Eigen::Index i = 0; i < cols.cols(); ++i) {
        const double norm = cols.col(i).norm();
        if (std::abs(norm - 1.0) > 1e-6) {
            std::ostringstream os;
            os << "basis vector " << i << " has norm " << norm << ", expected 1";
            throw InvalidStateError(os.str());
        }
        cols.col(i) /= norm;
    }
    double cond = 0.0;
    auto b = build(std::move(cols), cap, &cond);
    if (!b) {
        std::ostringstream os;
        os << "basis vectors are linearly dependent or ill-conditioned (condition number " << cond
           << ", cap " << cap << ")";
        throw IllConditionedBasis(os.str(), cond);
    }
    return *std::move(b);
}

namespace {

ComplexMatrix columns_from_parameters(std::span<const double> params, int dim) {
    const auto n = static_cast<std::size_t>(dim);
    if (dim < 2 || params.size() != 2 * n * n)
        throw DimensionError("expected " + std::to_string(2 * n * n) + " basis parameters for dimension " +
                             std::to_string(dim) + ", got " + std::to_string(params.size()));
    ComplexMatrix cols(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int t = 0; t < dim; ++t) {
            const auto k = 2 * (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(t));
            cols(t, i) = Complex(params[k], params[k + 1]);
        }
    return cols;
}

}  // namespace

std::optional<ObliqueBasis> ObliqueBasis::try_from_parameters(std::span<const double> params, int dim,
                                                              double cap) {
    ComplexMatrix cols = columns_from_parameters(params, dim);
    for (int i = 0; i < dim; ++i) {
        const double norm = cols.col(i).norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) return std::nullopt;
        cols.col(i) /= norm;
    }
    return build(std::move(cols), cap, nullptr);
}

ObliqueBasis ObliqueBasis::from_parameters(std::span<const double> params, int dim, double cap) {
    ComplexMatrix cols = columns_from_parameters(params, dim);
    for (int i = 0; i < dim; ++i) {
        const double norm = cols.col(i).norm();
        if (!(norm > 0.0)) throw IllConditionedBasis("basis parameters contain a zero vector", std::numeric_limits<double>::infinity());
        cols.col(i) /= norm;
    }
    double cond = 0.0;
    auto b = build(std::move(cols), cap, &cond);
    if (!b) {
        std::ostringstream os;
        os << "parameterized basis is ill-conditioned (condition number " << cond << ", cap " << cap << ")";
        throw IllConditionedBasis(os.str(), cond);
    }
    return *std::move(b);
}

ObliqueBasis ObliqueBasis::orthonormal_from_parameters(std::span<const double> params, int dim) {
    const ComplexMatrix a = columns_from_parameters(params, dim);
    Eigen::HouseholderQR<ComplexMatrix> qr(a);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& r = qr.matrixQR();
    for (int j = 0; j < dim; ++j) {
        const double mag = std::abs(r(j, j));
        if (mag > 0.0) q.col(j) *= r(j, j) / mag;
    }
    ObliqueBasis b;
    b.duals_ = q;
    b.vectors_ = std::move(q);
    b.condition_ = 1.0;
    return b;
}

ObliqueBasis ObliqueBasis::computational(int dim) {
    if (dim < 2) throw DimensionError("basis dimension must be at least 2");
    ObliqueBasis b;
    b.vectors_ = ComplexMatrix::Identity(dim, dim);
    b.duals_ = b.vectors_;
    b.condition_ = 1.0;
    return b;
}

double ObliqueBasis::biorthogonality_residual() const {
    const ComplexMatrix overlap = vectors_.adjoint() * duals_;
    return qmat::max_abs_diff(overlap, ComplexMatrix::Identity(dim(), dim()));
}

std::vector<double> ObliqueBasis::to_parameters() const { return parameters_of(vectors_); }

std::vector<double> parameters_of(const ComplexMatrix& columns) {
    const auto n = static_cast<std::size_t>(columns.rows());
    std::vector<double> p(2 * n * static_cast<std::size_t>(columns.cols()));
    for (Eigen::Index i = 0; i < columns.cols(); ++i)
        for (Eigen::Index t = 0; t < columns.rows(); ++t) {
            const auto k = 2 * (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(t));
            p[k] = columns(t, i).real();
            p[k + 1] = columns(t, i).imag();
        }
    return p;
}

TargetSplit::TargetSplit(const Dims& dims, int target) : target_(target) {
    const int n = static_cast<int>(dims.size());
    const int order = qmat::order_of(dims);
    if (target < 0 || target >= n)
        throw DimensionError("target subsystem " + std::to_string(target) + " out of range");
    target_dim_ = dims[static_cast<std::size_t>(target)];
    rest_dim_ = order / target_dim_;
    int after = 1;
    for (int k = target + 1; k < n; ++k) after *= dims[static_cast<std::size_t>(k)];
    const int before = rest_dim_ / after;
    perm_.resize(static_cast<std::size_t>(order));
    for (int t = 0; t < target_dim_; ++t)
        for (int a = 0; a < before; ++a)
            for (int c = 0; c < after; ++c)
                perm_[static_cast<std::size_t>(t * rest_dim_ + a * after + c)] = (a * target_dim_ + t) * after + c;
}

ComplexMatrix TargetSplit::to_target_major(const ComplexMatrix& m) const {
    const int n = order();
    ComplexMatrix out(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(a, b) = m(perm_[static_cast<std::size_t>(a)], perm_[static_cast<std::size_t>(b)]);
    return out;
}

ComplexMatrix TargetSplit::from_target_major(const ComplexMatrix& m) const {
    const int n = order();
    ComplexMatrix out(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(perm_[static_cast<std::size_t>(a)], perm_[static_cast<std::size_t>(b)]) = m(a, b);
    return out;
}

std::vector<ComplexMatrix> TargetSplit::contract(const ComplexMatrix& m, const ComplexMatrix& columns) const {
    if (columns.rows() != target_dim_) throw DimensionError("vector length does not match the target subsystem");
    const ComplexMatrix tm = to_target_major(m);
    const int r = rest_dim_;
    std::vector<ComplexMatrix> blocks;
    blocks.reserve(static_cast<std::size_t>(columns.cols()));
    ComplexMatrix half(r, order());
    for (Eigen::Index k = 0; k < columns.cols(); ++k) {
        // half = (<v| (x) I) tm, then block = half (|v> (x) I)
        half.setZero();
        for (int t = 0; t < target_dim_; ++t) half += std::conj(columns(t, k)) * tm.middleRows(t * r, r);
        ComplexMatrix block = ComplexMatrix::Zero(r, r);
        for (int t = 0; t < target_dim_; ++t) block += columns(t, k) * half.middleCols(t * r, r);
        blocks.push_back(std::move(block));
    }
    return blocks;
}

ComplexMatrix TargetSplit::embed(const ComplexMatrix& columns, std::span<const ComplexMatrix> blocks) const {
    if (columns.rows() != target_dim_ || static_cast<std::size_t>(columns.cols()) != blocks.size())
        throw DimensionError("embed: vectors and blocks disagree");
    const int r = rest_dim_;
    ComplexMatrix tm = ComplexMatrix::Zero(order(), order());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        for (int t = 0; t < target_dim_; ++t)
            for (int u = 0; u < target_dim_; ++u)
                tm.block(t * r, u * r, r, r) += (columns(t, kk) * std::conj(columns(u, kk))) * blocks[k];
    }
    return from_target_major(tm);
}

MapOutput oblique_map(const TargetSplit& split, const ComplexMatrix& vectors, const ComplexMatrix& duals,
                      const ComplexMatrix& m) {
    std::vector<ComplexMatrix> blocks = split.contract(m, duals);
    double denom = 0.0;
    for (const auto& b : blocks) denom += b.trace().real();
    if (!(denom > kDenominatorFloor)) {
        std::ostringstream os;
        os << "oblique map denominator " << denom << " is not above " << kDenominatorFloor;
        throw VanishingDenominator(os.str());
    }
    ComplexMatrix out = split.embed(vectors, blocks);
    out /= denom;
    return {std::move(out), denom};
}

ObliqueChannel::ObliqueChannel(int target, ObliqueBasis basis) : target_(target), basis_(std::move(basis)) {
    if (target < 0) throw DimensionError("channel target must be nonnegative");
}

CompositeChannel::CompositeChannel(std::vector<ObliqueChannel> channels) : channels_(std::move(channels)) {
    std::set<int> targets;
    for (const auto& c : channels_)
        if (!targets.insert(c.target()).second)
            throw DimensionError("composite channel targets subsystem " + std::to_string(c.target()) + " twice");
}

ComplexMatrix apply_channel(const ObliqueChannel& phi, const Dims& dims, const ComplexMatrix& m) {
    const TargetSplit split(dims, phi.target());
    if (split.target_dim() != phi.basis().dim())
        throw DimensionError("basis dimension " + std::to_string(phi.basis().dim()) + " does not match subsystem " +
                             std::to_string(phi.target()) + " of dimension " + std::to_string(split.target_dim()));
    return oblique_map(split, phi.basis().vectors(), phi.basis().duals(), m).matrix;
}

DensityMatrix apply_channel(const ObliqueChannel& phi, const DensityMatrix& rho) {
    return DensityMatrix::assume_valid(rho.dims(), apply_channel(phi, rho.dims(), rho.matrix()));
}

namespace {

double residual_norm(const ComplexMatrix& a, const ComplexMatrix& b, Norm norm) {
    return norm == Norm::Max ? qmat::max_abs_diff(a, b) : (a - b).norm();
}

}  // namespace

FixedPointCheck is_fixed_point(const ObliqueChannel& phi, const DensityMatrix& rho, double tol, Norm norm) {
    const ComplexMatrix out = apply_channel(phi, rho.dims(), rho.matrix());
    const double r = residual_norm(out, rho.matrix(), norm);
    return {r <= tol, r};
}

std::vector<Component> decompose_fixed_point(const ObliqueChannel& phi, const DensityMatrix& rho, double tol) {
    const FixedPointCheck check = is_fixed_point(phi, rho, tol);
    if (!check.fixed) {
        std::ostringstream os;
        os << "state is not a fixed point of the channel (residual " << check.residual << ", tolerance " << tol << ")";
        throw NotFixedPoint(os.str(), check.residual);
    }
    const TargetSplit split(rho.dims(), phi.target());
    const std::vector<ComplexMatrix> blocks = split.contract(rho.matrix(), phi.basis().duals());
    double denom = 0.0;
    for (const auto& b : blocks) denom += b.trace().real();

    Dims rest_dims;
    for (int k = 0; k < rho.subsystems(); ++k)
        if (k != phi.target()) rest_dims.push_back(rho.dim(k));

    std::vector<Component> parts;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const double tr = blocks[i].trace().real();
        const double p = tr / denom;
        if (p < 1e-12) continue;
        ComplexMatrix sigma = blocks[i] / tr;
        sigma = 0.5 * (sigma + sigma.adjoint());
        parts.push_back({static_cast<int>(i), p, DensityMatrix::assume_valid(rest_dims, std::move(sigma))});
    }
    return parts;
}

ComplexMatrix reconstruct(const ObliqueChannel& phi, const Dims& dims, std::span<const Component> parts) {
    const TargetSplit split(dims, phi.target());
    const int n = phi.basis().dim();
    std::vector<ComplexMatrix> blocks(static_cast<std::size_t>(n),
                                      ComplexMatrix::Zero(split.rest_dim(), split.rest_dim()));
    for (const auto& c : parts) blocks.at(static_cast<std::size_t>(c.index)) += c.weight * c.state.matrix();
    return split.embed(phi.basis().vectors(), blocks);
}

DensityMatrix apply_composite(const CompositeChannel& c, const DensityMatrix& rho) {
    ComplexMatrix m = rho.matrix();
    for (const auto& phi : c.channels()) m = apply_channel(phi, rho.dims(), m);
    return DensityMatrix::assume_valid(rho.dims(), std::move(m));
}

FixedPointCheck is_fixed_point(const CompositeChannel& c, const DensityMatrix& rho, double tol, Norm norm) {
    const DensityMatrix out = apply_composite(c, rho);
    const double r = residual_norm(out.matrix(), rho.matrix(), norm);
    return {r <= tol, r};
}

}  // namespace oblique::channels
