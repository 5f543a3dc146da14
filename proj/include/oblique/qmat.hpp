#pragma once

// Dense complex linear algebra for multipartite density matrices.
//
// Storage is Eigen's dense complex matrix. Subsystem index 0 is the most
// significant factor of the tensor product, so for dims [nA, nB] the basis
// state |a>|b> sits at row a*nB + b.

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace oblique::qmat {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Dims = std::vector<int>;

inline constexpr int kMaxOrder = 4096;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kEntropyClamp = 1e-12;

/// Product of the subsystem dimensions; throws DimensionError for an empty
/// list, a factor below 2, or an order above kMaxOrder.
int order_of(const Dims& dims);

/// Kronecker product: entry (i*rows_b + k, j*cols_b + l) = a(i,j) * b(k,l).
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);

/// Numerical health of a candidate density matrix.
struct StateDiagnostics {
    double hermiticity = 0.0;     // max |M - M^dagger|
    double trace_error = 0.0;     // |tr M - 1|
    double min_eigenvalue = 0.0;  // smallest eigenvalue of the Hermitian part

    bool valid(double herm_tol = kHermitianTol, double trace_tol = kTraceTol,
               double psd_tol = kPsdTol) const {
        return hermiticity <= herm_tol && trace_error <= trace_tol && min_eigenvalue >= -psd_tol;
    }
};

StateDiagnostics diagnose(const ComplexMatrix& m);

/// Hermitian, PSD, unit-trace matrix together with its subsystem dimensions.
class DensityMatrix {
public:
    /// Validates every invariant and throws InvalidStateError on failure.
    static DensityMatrix from_matrix(Dims dims, ComplexMatrix m);

    /// For matrices that are valid by construction. Checks shape only.
    static DensityMatrix assume_valid(Dims dims, ComplexMatrix m);

    static DensityMatrix pure(Dims dims, const ComplexVector& psi);

    const Dims& dims() const noexcept { return dims_; }
    const ComplexMatrix& matrix() const noexcept { return m_; }
    int order() const noexcept { return static_cast<int>(m_.rows()); }
    int subsystems() const noexcept { return static_cast<int>(dims_.size()); }
    int dim(int subsystem) const { return dims_.at(static_cast<std::size_t>(subsystem)); }

private:
    DensityMatrix(Dims dims, ComplexMatrix m) : dims_(std::move(dims)), m_(std::move(m)) {}

    Dims dims_;
    ComplexMatrix m_;
};

/// Partial trace of an arbitrary square operator; `keep` lists subsystem indices
/// in any order, the result follows ascending subsystem order.
ComplexMatrix partial_trace(const ComplexMatrix& m, const Dims& dims, std::span<const int> keep);

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
struct Eigensystem {
    RealVector values;
    ComplexMatrix vectors;
};

Eigensystem hermitian_eigensystem(const ComplexMatrix& m);

/// -sum p log2 p over the given spectrum; entries <= clamp contribute zero.
double spectrum_entropy(const RealVector& eigenvalues, double clamp = kEntropyClamp);

/// Von Neumann entropy in bits of a Hermitian operator (no trace check).
double entropy_bits(const ComplexMatrix& m, double clamp = kEntropyClamp);

double von_neumann_entropy(const DensityMatrix& rho, double clamp = kEntropyClamp);

/// A partition of the subsystems into disjoint groups covering all of them.
using Partition = std::vector<std::vector<int>>;

/// Throws DimensionError unless `parts` is a disjoint cover of [0, n).
void check_partition(const Partition& parts, int n);

/// Sum of the group entropies minus the joint entropy. For two groups this is
/// the bipartite mutual information, for singleton groups the N-partite
/// total correlation.
double mutual_information(const ComplexMatrix& m, const Dims& dims, const Partition& parts,
                          double clamp = kEntropyClamp);

double mutual_information(const DensityMatrix& rho, const Partition& parts,
                          double clamp = kEntropyClamp);

/// Bipartition {0} | {1, ..., N-1}.
Partition split_first(int n);

/// Singletons {0} | {1} | ... | {N-1}.
Partition singletons(int n);

ComplexMatrix projector(const ComplexVector& v);

/// max |a - b| over entries.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// tr[(a - b)^2] for Hermitian a, b: the squared Frobenius norm of the difference.
double hs_distance_sq(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace oblique::qmat
