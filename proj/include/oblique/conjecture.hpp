#pragma once

// Seeded search for states and channels with I(rho) < I(Phi rho).
//
// Every sample draws a random state and a random oblique basis on subsystem
// 0, evaluates dI = I(rho) - I(Phi rho), then minimizes dI locally over the
// basis. Both evaluations are appended to a JSONL log, one record per line.
// The log is keyed by (master seed, sample index): a rerun with the same
// seed skips indices already completed, and shard k of M takes the indices
// congruent to k mod M.

#include "oblique/channels.hpp"
#include "oblique/qmat.hpp"
#include "oblique/rng.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace oblique::conjecture {

using nlohmann::json;
using qmat::DensityMatrix;

/// I(rho) - I(Phi rho) in bits, mutual information taken across
/// {target} | rest.
double delta_i(const DensityMatrix& rho, const channels::ObliqueChannel& phi, double clamp = qmat::kEntropyClamp);

struct SearchConfig {
    std::vector<qmat::Dims> dims{{2, 2}, {2, 3}, {3, 3}};
    int samples_per_dim = 10000;
    /// State ranks cycled over sample indices; empty means 1, 2, ..., order.
    std::vector<int> ranks;
    double condition_cap = channels::kDefaultConditionCap;
    int local_iterations = 200;
    double simplex_scale = 0.1;
    double local_tolerance = 1e-12;
    Seed master_seed = 1;
    std::filesystem::path output = "conjecture.jsonl";
    double threshold = -1e-7;
    double certification_tolerance = 1e-9;
    bool orthonormal_only = false;
    int shard_index = 0;
    int shard_count = 1;

    void validate() const;
};

json to_json(const SearchConfig& c);

/// Missing keys keep the values already in `base`.
SearchConfig search_config_from_json(const json& j, SearchConfig base = {});

struct SearchRecord {
    long long index = 0;
    Seed seed = 0;
    qmat::Dims dims;
    int rank = 1;
    bool orthonormal = false;
    std::string stage;  // "start" or "local_min"
    std::vector<double> basis;
    double delta_i = 0.0;
    std::string timestamp;
    std::optional<qmat::ComplexMatrix> state;  // inline for records below the threshold
};

json to_json(const SearchRecord& r);
SearchRecord record_from_json(const json& j);

/// The random state of a record, regenerated from its seed (or taken inline).
DensityMatrix record_state(const SearchRecord& r);
channels::ObliqueBasis record_basis(const SearchRecord& r, double cap = channels::kDefaultConditionCap);

/// dI recomputed from the record's seed, dims, rank and basis parameters.
double replay(const SearchRecord& r, double clamp = qmat::kEntropyClamp);

struct CertifyOptions {
    double threshold = -1e-7;
    double tolerance = 1e-9;
    double condition_cap = channels::kDefaultConditionCap;
    std::vector<double> clamps{1e-12, 1e-13, 1e-14};
};

struct CounterexampleCertificate {
    qmat::ComplexMatrix state;
    qmat::Dims dims;
    qmat::ComplexMatrix basis;
    double delta_i = 0.0;                // at the tightest clamp
    double delta_i_extended = 0.0;       // long double recomputation, independent dual/map route
    bool extended_precision = true;
    std::vector<double> clamp_values;    // dI at each clamp
    double biorthogonality_residual = 0.0;
    double condition = 0.0;
    double state_min_eigenvalue = 0.0;
    double output_min_eigenvalue = 0.0;
    double state_hermiticity = 0.0;
    double state_trace_error = 0.0;
};

json to_json(const CounterexampleCertificate& c);

struct CertifyOutcome {
    bool certified = false;
    std::string reason;  // "precondition", "state", "conditioning", "biorthogonality", "psd", "clamp", "extended"
    std::string detail;
    std::optional<CounterexampleCertificate> certificate;
};

CertifyOutcome certify(const SearchRecord& record, const CertifyOptions& options = {});

/// dI evaluated entirely in long double with duals from an LU inverse.
long double delta_i_extended(const qmat::ComplexMatrix& rho, const qmat::Dims& dims, const qmat::ComplexMatrix& basis,
                             long double clamp = 1e-14L);

struct DimSummary {
    qmat::Dims dims;
    long long samples = 0;
    long long records = 0;
    double min_delta_i = 0.0;
    std::optional<SearchRecord> min_record;
    std::vector<long long> histogram;
    long long below_threshold = 0;
};

struct SearchSummary {
    std::vector<DimSummary> per_dim;
    std::vector<double> histogram_edges;
    long long total_records = 0;
    long long new_samples = 0;
    long long skipped_samples = 0;
    std::optional<SearchRecord> global_min;
    long long candidates = 0;
    long long certified = 0;
    std::vector<std::pair<std::string, long long>> rejections;
    std::optional<CounterexampleCertificate> best_certificate;
    std::optional<SearchRecord> best_certified_record;

    int exit_code() const { return certified > 0 ? 2 : 0; }
};

json to_json(const SearchSummary& s, const SearchConfig& c);

/// Log-spaced edges -1, -1e-1, ..., -1e-9, 0, 1e-9, ..., 1 (values outside fall in the end bins).
std::vector<double> histogram_edges();

std::vector<SearchRecord> read_log(const std::filesystem::path& path);

/// Aggregates a set of records (the full log) under a config.
SearchSummary summarize(const std::vector<SearchRecord>& records, const SearchConfig& config);

using Progress = std::function<void(long long done, long long total)>;

/// Runs or resumes the search, appending to config.output, then summarizes the whole log.
/// Throws Error on I/O failure; records already written stay intact.
SearchSummary run_search(const SearchConfig& config, const Progress& progress = {});

}  // namespace oblique::conjecture
