#include "oblique/qmat.hpp"

#include "oblique/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oblique::qmat {

int order_of(const Dims& dims) {
    if (dims.empty()) throw DimensionError("dims must list at least one subsystem");
    long long order = 1;
    for (int d : dims) {
        if (d < 2) throw DimensionError("subsystem dimension " + std::to_string(d) + " is below 2");
        order *= d;
        if (order > kMaxOrder)
            throw DimensionError("matrix order exceeds the cap of " + std::to_string(kMaxOrder));
    }
    return static_cast<int>(order);
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Eigen::Index rb = b.rows(), cb = b.cols();
    ComplexMatrix out(a.rows() * rb, a.cols() * cb);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
    return out;
}

StateDiagnostics diagnose(const ComplexMatrix& m) {
    StateDiagnostics d;
    d.hermiticity = max_abs_diff(m, m.adjoint());
    d.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
    const ComplexMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues()(0);
    return d;
}

DensityMatrix DensityMatrix::from_matrix(Dims dims, ComplexMatrix m) {
    DensityMatrix out = assume_valid(std::move(dims), std::move(m));
    const StateDiagnostics d = diagnose(out.m_);
    if (!d.valid()) {
        std::ostringstream os;
        os << "not a density matrix: hermiticity " << d.hermiticity << ", trace error "
           << d.trace_error << ", min eigenvalue " << d.min_eigenvalue;
        throw InvalidStateError(os.str());
    }
    return out;
}

DensityMatrix DensityMatrix::assume_valid(Dims dims, ComplexMatrix m) {
    const int n = order_of(dims);
    if (m.rows() != n || m.cols() != n) {
        std::ostringstream os;
        os << "matrix is " << m.rows() << "x" << m.cols() << " but dims imply order " << n;
        throw DimensionError(os.str());
    }
    return DensityMatrix(std::move(dims), std::move(m));
}

DensityMatrix DensityMatrix::pure(Dims dims, const ComplexVector& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw InvalidStateError("zero state vector");
    return assume_valid(std::move(dims), projector(psi / norm));
}

namespace {

// Row-major strides of the subsystem digits.
std::vector<int> strides_of(const Dims& dims) {
    std::vector<int> s(dims.size(), 1);
    for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
        s[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k) + 1] * dims[static_cast<std::size_t>(k) + 1];
    return s;
}

}  // namespace

ComplexMatrix partial_trace(const ComplexMatrix& m, const Dims& dims, std::span<const int> keep) {
    const int n = static_cast<int>(dims.size());
    const int order = order_of(dims);
    if (m.rows() != order || m.cols() != order) throw DimensionError("operator order does not match dims");
    if (keep.empty()) throw DimensionError("partial trace must keep at least one subsystem");
    std::vector<bool> kept(static_cast<std::size_t>(n), false);
    for (int k : keep) {
        if (k < 0 || k >= n) throw DimensionError("subsystem index " + std::to_string(k) + " out of range");
        if (kept[static_cast<std::size_t>(k)]) throw DimensionError("subsystem index " + std::to_string(k) + " repeated");
        kept[static_cast<std::size_t>(k)] = true;
    }

    const std::vector<int> stride = strides_of(dims);
    Dims kdims, tdims;
    std::vector<int> kstride, tstride;
    for (int k = 0; k < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        (kept[uk] ? kdims : tdims).push_back(dims[uk]);
        (kept[uk] ? kstride : tstride).push_back(stride[uk]);
    }
    auto offsets = [](const Dims& ds, const std::vector<int>& st) {
        std::vector<int> off{0};
        for (std::size_t a = 0; a < ds.size(); ++a) {
            std::vector<int> next;
            next.reserve(off.size() * static_cast<std::size_t>(ds[a]));
            for (int o : off)
                for (int v = 0; v < ds[a]; ++v) next.push_back(o + v * st[a]);
            off.swap(next);
        }
        return off;
    };
    const std::vector<int> koff = offsets(kdims, kstride);
    const std::vector<int> toff = offsets(tdims, tstride);

    const auto kn = static_cast<Eigen::Index>(koff.size());
    ComplexMatrix out = ComplexMatrix::Zero(kn, kn);
    for (Eigen::Index a = 0; a < kn; ++a)
        for (Eigen::Index b = 0; b < kn; ++b) {
            Complex acc = 0.0;
            for (int e : toff) acc += m(koff[static_cast<std::size_t>(a)] + e, koff[static_cast<std::size_t>(b)] + e);
            out(a, b) = acc;
        }
    return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
    ComplexMatrix r = partial_trace(rho.matrix(), rho.dims(), keep);
    std::vector<int> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    Dims kdims;
    for (int k : sorted) kdims.push_back(rho.dim(k));
    return DensityMatrix::assume_valid(std::move(kdims), std::move(r));
}

Eigensystem hermitian_eigensystem(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("eigensystem of a non-square matrix");
    const double herm = max_abs_diff(m, m.adjoint());
    if (herm > 1e-8) {
        std::ostringstream os;
        os << "matrix is not Hermitian (max |M - M^dagger| = " << herm << ")";
        throw InvalidStateError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    return {es.eigenvalues(), es.eigenvectors()};
}

double spectrum_entropy(const RealVector& eigenvalues, double clamp) {
    double s = 0.0;
    for (double l : eigenvalues)
        if (l > clamp) s -= l * std::log2(l);
    return s;
}

double entropy_bits(const ComplexMatrix& m, double clamp) {
    if (m.rows() == 1) return spectrum_entropy(RealVector::Constant(1, m(0, 0).real()), clamp);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    return spectrum_entropy(es.eigenvalues(), clamp);
}

double von_neumann_entropy(const DensityMatrix& rho, double clamp) {
    return entropy_bits(rho.matrix(), clamp);
}

void check_partition(const Partition& parts, int n) {
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const auto& group : parts) {
        if (group.empty()) throw DimensionError("partition contains an empty group");
        for (int k : group) {
            if (k < 0 || k >= n) throw DimensionError("partition index " + std::to_string(k) + " out of range");
            if (seen[static_cast<std::size_t>(k)]++) throw DimensionError("partition groups overlap at subsystem " + std::to_string(k));
        }
    }
    for (int k = 0; k < n; ++k)
        if (!seen[static_cast<std::size_t>(k)]) throw DimensionError("partition misses subsystem " + std::to_string(k));
}

double mutual_information(const ComplexMatrix& m, const Dims& dims, const Partition& parts, double clamp) {
    check_partition(parts, static_cast<int>(dims.size()));
    double info = -entropy_bits(m, clamp);
    for (const auto& group : parts) info += entropy_bits(partial_trace(m, dims, group), clamp);
    return info;
}

double mutual_information(const DensityMatrix& rho, const Partition& parts, double clamp) {
    return mutual_information(rho.matrix(), rho.dims(), parts, clamp);
}

Partition split_first(int n) {
    Partition p(2);
    p[0].push_back(0);
    for (int k = 1; k < n; ++k) p[1].push_back(k);
    return p;
}

Partition singletons(int n) {
    Partition p;
    for (int k = 0; k < n; ++k) p.push_back({k});
    return p;
}

ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

double hs_distance_sq(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("shape mismatch");
    return (a - b).squaredNorm();
}

}  // namespace oblique::qmat
