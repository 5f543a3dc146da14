#include "oblique/io.hpp"

#include "oblique/error.hpp"

#include <fstream>
#include <sstream>

namespace oblique::io {

using qmat::Complex;
using qmat::ComplexMatrix;

namespace {

Complex complex_from(const json& e) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw FormatError("complex entries must be [re, im] number pairs");
    return {e[0].get<double>(), e[1].get<double>()};
}

ComplexMatrix matrix_from(const json& j) {
    if (!j.is_object() || !j.contains("dims") || !j.contains("data"))
        throw FormatError("state JSON needs \"dims\" and \"data\"");
    const auto dims = j.at("dims").get<qmat::Dims>();
    const int n = qmat::order_of(dims);
    const json& data = j.at("data");
    const std::size_t expected = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (!data.is_array() || data.size() != expected) {
        std::ostringstream os;
        os << "state data has " << (data.is_array() ? data.size() : 0) << " entries, expected " << expected
           << " (order " << n << " squared)";
        throw FormatError(os.str());
    }
    ComplexMatrix m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = complex_from(data[static_cast<std::size_t>(r * n + c)]);
    return m;
}

}  // namespace

json complex_array(const qmat::ComplexVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
    return a;
}

json matrix_data(const ComplexMatrix& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back({m(r, c).real(), m(r, c).imag()});
    return a;
}

json state_to_json(const qmat::DensityMatrix& rho) {
    return json{{"dims", rho.dims()}, {"data", matrix_data(rho.matrix())}};
}

json basis_vectors_json(const ComplexMatrix& columns) {
    json vs = json::array();
    for (Eigen::Index i = 0; i < columns.cols(); ++i) vs.push_back(complex_array(columns.col(i)));
    return vs;
}

json basis_to_json(const channels::ObliqueBasis& basis) {
    return json{{"dim", basis.dim()}, {"vectors", basis_vectors_json(basis.vectors())}};
}

qmat::DensityMatrix state_from_json(const json& j) {
    ComplexMatrix m = matrix_from(j);
    return qmat::DensityMatrix::from_matrix(j.at("dims").get<qmat::Dims>(), std::move(m));
}

qmat::DensityMatrix state_from_json_unchecked(const json& j) {
    ComplexMatrix m = matrix_from(j);
    return qmat::DensityMatrix::assume_valid(j.at("dims").get<qmat::Dims>(), std::move(m));
}

ComplexMatrix basis_columns_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("vectors"))
        throw FormatError("basis JSON needs \"dim\" and \"vectors\"");
    const int n = j.at("dim").get<int>();
    if (n < 2) throw FormatError("basis dim must be at least 2");
    const json& vs = j.at("vectors");
    if (!vs.is_array() || vs.size() != static_cast<std::size_t>(n))
        throw FormatError("basis needs exactly " + std::to_string(n) + " vectors, got " +
                          std::to_string(vs.is_array() ? vs.size() : 0));
    ComplexMatrix cols(n, n);
    for (int i = 0; i < n; ++i) {
        const json& v = vs[static_cast<std::size_t>(i)];
        if (!v.is_array() || v.size() != static_cast<std::size_t>(n))
            throw FormatError("basis vector " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
        for (int t = 0; t < n; ++t) cols(t, i) = complex_from(v[static_cast<std::size_t>(t)]);
    }
    return cols;
}

channels::ObliqueBasis basis_from_json(const json& j, double cap) {
    return channels::ObliqueBasis::from_vectors(basis_columns_from_json(j), cap);
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace oblique::io
