#pragma once

// Dual bases and the oblique channel
//
//   Phi(rho) = sum_i |i><~i| rho |~i><i| / tr[sum_i <~i|rho|~i>]
//
// where {|i>} is a normalized, linearly independent basis of one subsystem and
// {|~i>} is its dual basis, <i|~j> = delta_ij. States of the form
// sum_i p_i |i><i| (x) rho_i are exactly the fixed points of such a map.

#include "oblique/qmat.hpp"

#include <optional>
#include <span>
#include <vector>

namespace oblique::channels {

using qmat::ComplexMatrix;
using qmat::ComplexVector;
using qmat::DensityMatrix;
using qmat::Dims;

inline constexpr double kDefaultConditionCap = 1e8;
inline constexpr double kDenominatorFloor = 1e-12;
inline constexpr double kDefaultFixedPointTol = 1e-8;

/// A normalized, linearly independent basis of C^n together with its dual.
/// Vectors and duals are stored as matrix columns.
class ObliqueBasis {
public:
    /// Columns must be unit vectors within 1e-6 (they are renormalized
    /// exactly). Throws IllConditionedBasis if the condition number of the
    /// stacked matrix exceeds `cap`.
    static ObliqueBasis from_vectors(const ComplexMatrix& columns, double cap = kDefaultConditionCap);

    /// Real parameter chart: 2n^2 reals, vector i component t has real part
    /// params[2(i n + t)] and imaginary part params[2(i n + t) + 1]. Each raw
    /// vector is normalized; a zero vector or a breach of the cap throws.
    static ObliqueBasis from_parameters(std::span<const double> params, int dim,
                                        double cap = kDefaultConditionCap);

    /// Same chart as from_parameters, returning nullopt instead of throwing.
    static std::optional<ObliqueBasis> try_from_parameters(std::span<const double> params, int dim,
                                                           double cap = kDefaultConditionCap);

    /// Orthonormal chart: the 2n^2 reals form a complex square matrix whose QR
    /// factor Q (phase-fixed so diag R > 0) supplies the basis columns.
    static ObliqueBasis orthonormal_from_parameters(std::span<const double> params, int dim);

    static ObliqueBasis computational(int dim);

    int dim() const noexcept { return static_cast<int>(vectors_.cols()); }
    const ComplexMatrix& vectors() const noexcept { return vectors_; }
    const ComplexMatrix& duals() const noexcept { return duals_; }
    ComplexVector vector(int i) const { return vectors_.col(i); }
    ComplexVector dual(int i) const { return duals_.col(i); }
    double condition() const noexcept { return condition_; }

    /// Matrix of overlaps <i|j>.
    ComplexMatrix gram() const { return vectors_.adjoint() * vectors_; }

    /// max_ij |<i|~j> - delta_ij|.
    double biorthogonality_residual() const;

    /// Parameters in the from_parameters chart that reproduce this basis.
    std::vector<double> to_parameters() const;

private:
    ObliqueBasis() = default;
    static std::optional<ObliqueBasis> build(ComplexMatrix columns, double cap, double* condition_out);

    ComplexMatrix vectors_;
    ComplexMatrix duals_;
    double condition_ = 1.0;
};

/// 2n^2 parameters from unit vectors given as columns (exact inverse of the chart up to scale).
std::vector<double> parameters_of(const ComplexMatrix& columns);

/// Condition number sigma_max / sigma_min (infinite when singular).
double condition_number(const ComplexMatrix& m);

/// Index bookkeeping for one target subsystem against the rest. Position
/// t * rest + r of the target-major ordering maps to row perm[t * rest + r]
/// of the natural ordering.
class TargetSplit {
public:
    TargetSplit(const Dims& dims, int target);

    int target() const noexcept { return target_; }
    int target_dim() const noexcept { return target_dim_; }
    int rest_dim() const noexcept { return rest_dim_; }
    int order() const noexcept { return target_dim_ * rest_dim_; }

    ComplexMatrix to_target_major(const ComplexMatrix& m) const;
    ComplexMatrix from_target_major(const ComplexMatrix& m) const;

    /// Blocks (<v_k| (x) I) m (|v_k> (x) I) for each column v_k, computed by
    /// contraction over the target index.
    std::vector<ComplexMatrix> contract(const ComplexMatrix& m, const ComplexMatrix& columns) const;

    /// sum_k |v_k><v_k| (x) blocks[k] in the natural ordering.
    ComplexMatrix embed(const ComplexMatrix& columns, std::span<const ComplexMatrix> blocks) const;

private:
    int target_;
    int target_dim_;
    int rest_dim_;
    std::vector<int> perm_;
};

/// The oblique map applied to an arbitrary (not necessarily normalized) operator.
/// Throws VanishingDenominator when the denominator is at or below 1e-12.
struct MapOutput {
    ComplexMatrix matrix;
    double denominator;
};

MapOutput oblique_map(const TargetSplit& split, const ComplexMatrix& vectors, const ComplexMatrix& duals,
                      const ComplexMatrix& m);

/// The map determined by a basis acting on one subsystem.
class ObliqueChannel {
public:
    ObliqueChannel(int target, ObliqueBasis basis);

    int target() const noexcept { return target_; }
    const ObliqueBasis& basis() const noexcept { return basis_; }

private:
    int target_;
    ObliqueBasis basis_;
};

/// Channels on pairwise-distinct subsystems, applied in list order.
class CompositeChannel {
public:
    explicit CompositeChannel(std::vector<ObliqueChannel> channels);

    const std::vector<ObliqueChannel>& channels() const noexcept { return channels_; }

private:
    std::vector<ObliqueChannel> channels_;
};

/// Operator-level form used for the homogeneity property: `m` need not have unit trace.
ComplexMatrix apply_channel(const ObliqueChannel& phi, const Dims& dims, const ComplexMatrix& m);

DensityMatrix apply_channel(const ObliqueChannel& phi, const DensityMatrix& rho);

enum class Norm { Max, Frobenius };

struct FixedPointCheck {
    bool fixed = false;
    double residual = 0.0;
};

FixedPointCheck is_fixed_point(const ObliqueChannel& phi, const DensityMatrix& rho,
                               double tol = kDefaultFixedPointTol, Norm norm = Norm::Max);

struct Component {
    int index;       // basis label i
    double weight;   // p_i
    DensityMatrix state;  // sigma_i on the remaining subsystems
};

/// Weights and conditional states of a fixed point, zero-weight labels
/// (p_i < 1e-12) dropped. Throws NotFixedPoint when the residual exceeds `tol`.
std::vector<Component> decompose_fixed_point(const ObliqueChannel& phi, const DensityMatrix& rho,
                                             double tol = kDefaultFixedPointTol);

/// sum_i p_i |i><i| (x) sigma_i on the target/rest split, back in natural ordering.
ComplexMatrix reconstruct(const ObliqueChannel& phi, const Dims& dims, std::span<const Component> parts);

DensityMatrix apply_composite(const CompositeChannel& c, const DensityMatrix& rho);

FixedPointCheck is_fixed_point(const CompositeChannel& c, const DensityMatrix& rho,
                               double tol = kDefaultFixedPointTol, Norm norm = Norm::Max);

}  // namespace oblique::channels
