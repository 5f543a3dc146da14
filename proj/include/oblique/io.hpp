#pragma once

// JSON encodings.
//
//   state: {"dims":[2,2], "data":[[re,im], ...]}          row-major entries
//   basis: {"dim":2, "vectors":[[[re,im],[re,im]], ...]}  one array per vector
//
// Doubles are written in shortest round-trip form, so a write/read cycle is
// bit-exact. Duals are never serialized.

#include "oblique/channels.hpp"
#include "oblique/qmat.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace oblique::io {

using nlohmann::json;

json complex_array(const qmat::ComplexVector& v);
json matrix_data(const qmat::ComplexMatrix& m);
json state_to_json(const qmat::DensityMatrix& rho);
json basis_to_json(const channels::ObliqueBasis& basis);
json basis_vectors_json(const qmat::ComplexMatrix& columns);

/// Reads dims and data, rejects length mismatches naming the expected length,
/// and validates the density-matrix invariants.
qmat::DensityMatrix state_from_json(const json& j);

/// Like state_from_json without the PSD/trace checks (shape only).
qmat::DensityMatrix state_from_json_unchecked(const json& j);

channels::ObliqueBasis basis_from_json(const json& j, double cap = channels::kDefaultConditionCap);

/// Raw basis columns as stored, before any conditioning check.
qmat::ComplexMatrix basis_columns_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);

}  // namespace oblique::io
