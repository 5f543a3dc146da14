#include "oblique/conjecture.hpp"

#include "oblique/error.hpp"
#include "oblique/io.hpp"
#include "oblique/optimize.hpp"
#include "oblique/states.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace oblique::conjecture {

using channels::ObliqueBasis;
using qmat::ComplexMatrix;

double delta_i(const DensityMatrix& rho, const channels::ObliqueChannel& phi, double clamp) {
    qmat::Partition parts(2);
    for (int k = 0; k < rho.subsystems(); ++k) parts[k == phi.target() ? 0 : 1].push_back(k);
    const ComplexMatrix out = channels::apply_channel(phi, rho.dims(), rho.matrix());
    return qmat::mutual_information(rho.matrix(), rho.dims(), parts, clamp) -
           qmat::mutual_information(out, rho.dims(), parts, clamp);
}

void SearchConfig::validate() const {
    if (dims.empty()) throw Error("search needs at least one dims entry");
    for (const auto& d : dims) {
        qmat::order_of(d);
        if (d.size() < 2) throw DimensionError("search dims need at least two subsystems");
    }
    if (samples_per_dim < 1) throw Error("samples per dim must be at least 1");
    if (!(threshold < 0.0)) throw Error("negativity threshold must be negative");
    if (!(certification_tolerance > 0.0)) throw Error("certification tolerance must be positive");
    if (local_iterations < 0) throw Error("local iteration budget must be nonnegative");
    if (shard_count < 1 || shard_index < 0 || shard_index >= shard_count) throw Error("invalid shard index/count");
    for (int r : ranks)
        if (r < 1) throw Error("ranks must be positive");
}

json to_json(const SearchConfig& c) {
    return json{{"dims", c.dims},
                {"samples_per_dim", c.samples_per_dim},
                {"ranks", c.ranks},
                {"condition_cap", c.condition_cap},
                {"local_iterations", c.local_iterations},
                {"simplex_scale", c.simplex_scale},
                {"local_tolerance", c.local_tolerance},
                {"master_seed", c.master_seed},
                {"output", c.output.string()},
                {"threshold", c.threshold},
                {"certification_tolerance", c.certification_tolerance},
                {"orthonormal_only", c.orthonormal_only},
                {"shard_index", c.shard_index},
                {"shard_count", c.shard_count}};
}

SearchConfig search_config_from_json(const json& j, SearchConfig c) {
    static const std::set<std::string> known{"dims", "samples_per_dim", "ranks", "condition_cap", "local_iterations",
                                             "simplex_scale", "local_tolerance", "master_seed", "output", "threshold",
                                             "certification_tolerance", "orthonormal_only", "shard_index",
                                             "shard_count", "v"};
    if (!j.is_object()) throw FormatError("search config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw FormatError("unknown search config key '" + key + "'");
    if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<qmat::Dims>>();
    if (j.contains("samples_per_dim")) c.samples_per_dim = j.at("samples_per_dim").get<int>();
    if (j.contains("ranks")) c.ranks = j.at("ranks").get<std::vector<int>>();
    if (j.contains("condition_cap")) c.condition_cap = j.at("condition_cap").get<double>();
    if (j.contains("local_iterations")) c.local_iterations = j.at("local_iterations").get<int>();
    if (j.contains("simplex_scale")) c.simplex_scale = j.at("simplex_scale").get<double>();
    if (j.contains("local_tolerance")) c.local_tolerance = j.at("local_tolerance").get<double>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<Seed>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("threshold")) c.threshold = j.at("threshold").get<double>();
    if (j.contains("certification_tolerance")) c.certification_tolerance = j.at("certification_tolerance").get<double>();
    if (j.contains("orthonormal_only")) c.orthonormal_only = j.at("orthonormal_only").get<bool>();
    if (j.contains("shard_index")) c.shard_index = j.at("shard_index").get<int>();
    if (j.contains("shard_count")) c.shard_count = j.at("shard_count").get<int>();
    return c;
}

json to_json(const SearchRecord& r) {
    json j{{"v", 1},
           {"i", r.index},
           {"seed", r.seed},
           {"dims", r.dims},
           {"rank", r.rank},
           {"chart", r.orthonormal ? "orthonormal" : "oblique"},
           {"stage", r.stage},
           {"basis", r.basis},
           {"delta_i", r.delta_i},
           {"t", r.timestamp}};
    if (r.state) j["state"] = io::matrix_data(*r.state);
    return j;
}

SearchRecord record_from_json(const json& j) {
    SearchRecord r;
    r.index = j.at("i").get<long long>();
    r.seed = j.at("seed").get<Seed>();
    r.dims = j.at("dims").get<qmat::Dims>();
    r.rank = j.at("rank").get<int>();
    r.orthonormal = j.value("chart", std::string("oblique")) == "orthonormal";
    r.stage = j.value("stage", std::string("local_min"));
    r.basis = j.at("basis").get<std::vector<double>>();
    r.delta_i = j.at("delta_i").get<double>();
    r.timestamp = j.value("t", std::string());
    if (j.contains("state")) {
        const auto m = io::state_from_json_unchecked(json{{"dims", r.dims}, {"data", j.at("state")}});
        r.state = m.matrix();
    }
    return r;
}

namespace {

Seed state_seed(Seed sample) { return derive_seed(sample, 0); }
Seed basis_seed(Seed sample) { return derive_seed(sample, 1); }

std::optional<ObliqueBasis> basis_of(std::span<const double> params, int dim, bool orthonormal, double cap) {
    if (orthonormal) return ObliqueBasis::orthonormal_from_parameters(params, dim);
    return ObliqueBasis::try_from_parameters(params, dim, cap);
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

DensityMatrix record_state(const SearchRecord& r) {
    if (r.state) return DensityMatrix::assume_valid(r.dims, *r.state);
    return states::random_density(r.dims, r.rank, state_seed(r.seed));
}

ObliqueBasis record_basis(const SearchRecord& r, double cap) {
    if (r.dims.empty()) throw DimensionError("record has no dims");
    if (r.orthonormal) return ObliqueBasis::orthonormal_from_parameters(r.basis, r.dims[0]);
    return ObliqueBasis::from_parameters(r.basis, r.dims[0], cap);
}

double replay(const SearchRecord& r, double clamp) {
    const DensityMatrix rho = states::random_density(r.dims, r.rank, state_seed(r.seed));
    const channels::ObliqueChannel phi(0, record_basis(r, std::numeric_limits<double>::infinity()));
    return delta_i(rho, phi, clamp);
}

long double delta_i_extended(const ComplexMatrix& rho, const qmat::Dims& dims, const ComplexMatrix& basis,
                             long double clamp) {
    using LD = long double;
    using CLD = std::complex<LD>;
    using M = Eigen::Matrix<CLD, Eigen::Dynamic, Eigen::Dynamic>;
    const int order = qmat::order_of(dims);
    const int na = dims.at(0);
    const int nb = order / na;
    M r = rho.cast<CLD>();
    M v = basis.cast<CLD>();
    for (int i = 0; i < na; ++i) v.col(i) /= v.col(i).norm();
    const M duals = v.adjoint().fullPivLu().inverse();  // columns of (S^dagger)^{-1}

    auto entropy = [clamp](const M& m) {
        Eigen::SelfAdjointEigenSolver<M> es(M(0.5L * (m + m.adjoint())), Eigen::EigenvaluesOnly);
        LD s = 0.0L;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const LD l = es.eigenvalues()(k);
            if (l > clamp) s -= l * std::log2(l);
        }
        return s;
    };
    auto info = [&](const M& m) {
        M ra = M::Zero(na, na), rb = M::Zero(nb, nb);
        for (int a1 = 0; a1 < na; ++a1)
            for (int a2 = 0; a2 < na; ++a2)
                for (int b = 0; b < nb; ++b) ra(a1, a2) += m(a1 * nb + b, a2 * nb + b);
        for (int b1 = 0; b1 < nb; ++b1)
            for (int b2 = 0; b2 < nb; ++b2)
                for (int a = 0; a < na; ++a) rb(b1, b2) += m(a * nb + b1, a * nb + b2);
        return entropy(ra) + entropy(rb) - entropy(m);
    };

    // Subsystem 0 is the most significant digit, so rows are already (a, b) ordered.
    M out = M::Zero(order, order);
    LD denom = 0.0L;
    for (int i = 0; i < na; ++i) {
        M block = M::Zero(nb, nb);
        for (int a1 = 0; a1 < na; ++a1)
            for (int a2 = 0; a2 < na; ++a2) {
                const CLD w = std::conj(duals(a1, i)) * duals(a2, i);
                block += w * r.block(a1 * nb, a2 * nb, nb, nb);
            }
        denom += block.trace().real();
        for (int a1 = 0; a1 < na; ++a1)
            for (int a2 = 0; a2 < na; ++a2) out.block(a1 * nb, a2 * nb, nb, nb) += (v(a1, i) * std::conj(v(a2, i))) * block;
    }
    out /= denom;
    return info(r) - info(out);
}

json to_json(const CounterexampleCertificate& c) {
    return json{{"dims", c.dims},
                {"state", io::matrix_data(c.state)},
                {"basis", io::basis_vectors_json(c.basis)},
                {"delta_i", c.delta_i},
                {"delta_i_extended", static_cast<double>(c.delta_i_extended)},
                {"extended_precision", c.extended_precision},
                {"clamp_values", c.clamp_values},
                {"biorthogonality_residual", c.biorthogonality_residual},
                {"condition", c.condition},
                {"state_min_eigenvalue", c.state_min_eigenvalue},
                {"output_min_eigenvalue", c.output_min_eigenvalue},
                {"state_hermiticity", c.state_hermiticity},
                {"state_trace_error", c.state_trace_error}};
}

CertifyOutcome certify(const SearchRecord& record, const CertifyOptions& options) {
    auto reject = [](std::string reason, std::string detail) {
        CertifyOutcome o;
        o.reason = std::move(reason);
        o.detail = std::move(detail);
        return o;
    };
    std::ostringstream os;
    if (!(record.delta_i < options.threshold)) {
        os << "record dI " << record.delta_i << " is not below the threshold " << options.threshold;
        return reject("precondition", os.str());
    }

    const DensityMatrix rho = record_state(record);
    const qmat::StateDiagnostics sd = qmat::diagnose(rho.matrix());
    if (!sd.valid(options.tolerance, options.tolerance, options.tolerance)) {
        os << "state fails validity: hermiticity " << sd.hermiticity << ", trace error " << sd.trace_error
           << ", min eigenvalue " << sd.min_eigenvalue;
        return reject("state", os.str());
    }

    CounterexampleCertificate cert;
    cert.dims = rho.dims();
    cert.state = rho.matrix();
    cert.state_min_eigenvalue = sd.min_eigenvalue;
    cert.state_hermiticity = sd.hermiticity;
    cert.state_trace_error = sd.trace_error;

    const int na = rho.dim(0);
    std::optional<ObliqueBasis> basis;
    try {
        basis = basis_of(record.basis, na, record.orthonormal, std::numeric_limits<double>::infinity());
    } catch (const Error& e) {
        return reject("conditioning", e.what());
    }
    if (!basis || !(basis->condition() <= options.condition_cap)) {
        os << "basis condition number " << (basis ? basis->condition() : std::numeric_limits<double>::infinity())
           << " exceeds the cap " << options.condition_cap;
        return reject("conditioning", os.str());
    }
    cert.basis = basis->vectors();
    cert.condition = basis->condition();
    cert.biorthogonality_residual = basis->biorthogonality_residual();
    if (!(cert.biorthogonality_residual <= options.tolerance)) {
        os << "biorthogonality residual " << cert.biorthogonality_residual << " exceeds " << options.tolerance;
        return reject("biorthogonality", os.str());
    }

    const channels::ObliqueChannel phi(0, *basis);
    const ComplexMatrix out = channels::apply_channel(phi, rho.dims(), rho.matrix());
    const qmat::StateDiagnostics od = qmat::diagnose(out);
    cert.output_min_eigenvalue = od.min_eigenvalue;
    if (!od.valid(options.tolerance, options.tolerance, options.tolerance)) {
        os << "channel output fails validity: min eigenvalue " << od.min_eigenvalue << ", hermiticity "
           << od.hermiticity << ", trace error " << od.trace_error;
        return reject("psd", os.str());
    }

    for (double clamp : options.clamps) {
        const double d = delta_i(rho, phi, clamp);
        cert.clamp_values.push_back(d);
    }
    for (std::size_t k = 0; k < cert.clamp_values.size(); ++k)
        if (!(cert.clamp_values[k] < options.threshold)) {
            os << "dI at clamp " << options.clamps[k] << " is " << cert.clamp_values[k] << ", not below "
               << options.threshold;
            return reject("clamp", os.str());
        }
    cert.delta_i = cert.clamp_values.empty() ? delta_i(rho, phi, 1e-14) : cert.clamp_values.back();

    cert.delta_i_extended = delta_i_extended(rho.matrix(), rho.dims(), cert.basis);
    if (!(cert.delta_i_extended < static_cast<long double>(options.threshold)) ||
        std::abs(static_cast<double>(cert.delta_i_extended) - cert.delta_i) > 1e-9) {
        os << "extended-precision dI " << static_cast<double>(cert.delta_i_extended) << " disagrees with "
           << cert.delta_i;
        return reject("extended", os.str());
    }

    CertifyOutcome ok;
    ok.certified = true;
    ok.certificate = std::move(cert);
    return ok;
}

std::vector<double> histogram_edges() {
    std::vector<double> e;
    for (int k = 0; k <= 9; ++k) e.push_back(-std::pow(10.0, -k));
    e.push_back(0.0);
    for (int k = 9; k >= 0; --k) e.push_back(std::pow(10.0, -k));
    return e;
}

namespace {

// Bin b covers [edges[b-1], edges[b]); bin 0 is below the first edge and the
// last bin is at or above the final edge.
std::size_t bin_of(double v, const std::vector<double>& edges) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

}  // namespace

std::vector<SearchRecord> read_log(const std::filesystem::path& path) {
    std::vector<SearchRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception&) {
            // A torn final line from an interrupted run; dropped on resume.
        }
    }
    return out;
}

SearchSummary summarize(const std::vector<SearchRecord>& records, const SearchConfig& config) {
    SearchSummary s;
    s.histogram_edges = histogram_edges();
    std::map<qmat::Dims, std::size_t> slot;
    auto slot_of = [&](const qmat::Dims& d) {
        auto it = slot.find(d);
        if (it != slot.end()) return it->second;
        DimSummary ds;
        ds.dims = d;
        ds.min_delta_i = std::numeric_limits<double>::infinity();
        ds.histogram.assign(s.histogram_edges.size() + 1, 0);
        s.per_dim.push_back(std::move(ds));
        slot[d] = s.per_dim.size() - 1;
        return s.per_dim.size() - 1;
    };
    for (const auto& d : config.dims) slot_of(d);

    std::map<qmat::Dims, std::set<long long>> completed;
    CertifyOptions copt;
    copt.threshold = config.threshold;
    copt.tolerance = config.certification_tolerance;
    copt.condition_cap = config.condition_cap;
    std::map<std::string, long long> rejections;

    for (const auto& r : records) {
        DimSummary& ds = s.per_dim[slot_of(r.dims)];
        ++ds.records;
        ++s.total_records;
        ++ds.histogram[bin_of(r.delta_i, s.histogram_edges)];
        if (r.stage == "local_min") completed[r.dims].insert(r.index);
        if (r.delta_i < ds.min_delta_i) {
            ds.min_delta_i = r.delta_i;
            ds.min_record = r;
        }
        if (!s.global_min || r.delta_i < s.global_min->delta_i) s.global_min = r;
        if (r.delta_i < config.threshold) {
            ++ds.below_threshold;
            ++s.candidates;
            CertifyOutcome o = certify(r, copt);
            if (o.certified) {
                ++s.certified;
                if (!s.best_certificate || o.certificate->delta_i < s.best_certificate->delta_i) {
                    s.best_certificate = std::move(o.certificate);
                    s.best_certified_record = r;
                }
            } else {
                ++rejections[o.reason];
            }
        }
    }
    for (auto& ds : s.per_dim) ds.samples = static_cast<long long>(completed[ds.dims].size());
    s.rejections.assign(rejections.begin(), rejections.end());
    return s;
}

json to_json(const SearchSummary& s, const SearchConfig& c) {
    json dims = json::array();
    for (const auto& d : s.per_dim) {
        json j{{"dims", d.dims},
               {"samples", d.samples},
               {"records", d.records},
               {"min_delta_i", d.records ? json(d.min_delta_i) : json(nullptr)},
               {"below_threshold", d.below_threshold},
               {"histogram", d.histogram}};
        if (d.min_record) j["min_record"] = to_json(*d.min_record);
        dims.push_back(std::move(j));
    }
    json rej = json::object();
    for (const auto& [k, v] : s.rejections) rej[k] = v;
    json out{{"v", 1},
             {"config", to_json(c)},
             {"per_dim", dims},
             {"histogram_edges", s.histogram_edges},
             {"total_records", s.total_records},
             {"candidates", s.candidates},
             {"certified", s.certified},
             {"rejections", rej},
             {"global_min_delta_i", s.global_min ? json(s.global_min->delta_i) : json(nullptr)},
             {"exit_code", s.exit_code()}};
    if (s.global_min) out["global_min_record"] = to_json(*s.global_min);
    if (s.best_certificate) out["best_certificate"] = to_json(*s.best_certificate);
    return out;
}

namespace {

int rank_for(const SearchConfig& c, long long index, int order) {
    if (c.ranks.empty()) return static_cast<int>(index % order) + 1;
    return std::min(order, c.ranks[static_cast<std::size_t>(index % static_cast<long long>(c.ranks.size()))]);
}

// Drops a torn trailing line and any sample whose record pair is incomplete,
// so appending never duplicates or glues records.
void repair_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return;
    std::vector<std::string> lines;
    std::string line;
    std::map<long long, int> stages;
    std::vector<std::optional<long long>> index_of;
    bool rewrite = false;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (!content.empty() && content.back() != '\n') rewrite = true;
    std::istringstream ss(content);
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            const long long i = j.at("i").get<long long>();
            stages[i] += j.value("stage", std::string()) == "local_min" ? 2 : 1;
            lines.push_back(line);
            index_of.push_back(i);
        } catch (const std::exception&) {
            rewrite = true;
        }
    }
    for (const auto& [i, st] : stages)
        if (st != 3) rewrite = true;
    if (!rewrite) return;
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (std::size_t k = 0; k < lines.size(); ++k)
            if (stages[*index_of[k]] == 3) out << lines[k] << '\n';
        if (!out) throw Error("cannot rewrite log " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

SearchSummary run_search(const SearchConfig& config, const Progress& progress) {
    config.validate();
    if (std::filesystem::exists(config.output)) repair_log(config.output);

    std::set<long long> done;
    for (const auto& r : read_log(config.output))
        if (r.stage == "local_min") done.insert(r.index);

    std::ofstream log(config.output, std::ios::app);
    if (!log) throw Error("cannot open " + config.output.string() + " for appending");

    const long long per = config.samples_per_dim;
    const long long total = per * static_cast<long long>(config.dims.size());
    optimize::NelderMeadOptions nm;
    nm.max_iterations = config.local_iterations;
    nm.initial_scale = config.simplex_scale;
    nm.tolerance = config.local_tolerance;

    long long fresh = 0, skipped = 0, visited = 0;
    for (long long g = 0; g < total; ++g) {
        if (g % config.shard_count != config.shard_index) continue;
        ++visited;
        if (done.count(g)) {
            ++skipped;
            continue;
        }
        const qmat::Dims& dims = config.dims[static_cast<std::size_t>(g / per)];
        const int order = qmat::order_of(dims);
        const int na = dims[0];
        SearchRecord base;
        base.index = g;
        base.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(g));
        base.dims = dims;
        base.rank = rank_for(config, g, order);
        base.orthonormal = config.orthonormal_only;

        const DensityMatrix rho = states::random_density(dims, base.rank, state_seed(base.seed));
        const qmat::Partition parts = qmat::split_first(static_cast<int>(dims.size()));
        const double info0 = qmat::mutual_information(rho.matrix(), dims, parts);
        const channels::TargetSplit split(dims, 0);
        const auto f = [&](std::span<const double> x) {
            auto b = basis_of(x, na, config.orthonormal_only, config.condition_cap);
            if (!b) return 1e6;
            try {
                const auto out = channels::oblique_map(split, b->vectors(), b->duals(), rho.matrix());
                return info0 - qmat::mutual_information(out.matrix, dims, parts);
            } catch (const VanishingDenominator&) {
                return 1e6;
            }
        };

        std::vector<double> start;
        if (config.orthonormal_only) {
            Rng rng(basis_seed(base.seed));
            start.resize(2 * static_cast<std::size_t>(na * na));
            for (double& x : start) x = rng.normal();
        } else {
            start = states::random_basis_parameters(na, config.condition_cap, basis_seed(base.seed));
        }

        SearchRecord first = base;
        first.stage = "start";
        first.basis = start;
        first.delta_i = f(start);
        const optimize::LocalResult local = optimize::nelder_mead(f, start, nm);
        SearchRecord second = base;
        second.stage = "local_min";
        second.basis = local.x;
        second.delta_i = local.value;

        std::string chunk;
        for (SearchRecord* r : {&first, &second}) {
            r->timestamp = utc_now();
            if (r->delta_i < config.threshold) r->state = rho.matrix();
            chunk += to_json(*r).dump();
            chunk += '\n';
        }
        log << chunk;
        log.flush();
        if (!log) throw Error("write to " + config.output.string() + " failed");
        ++fresh;
        if (progress) progress(visited, (total + config.shard_count - 1 - config.shard_index) / config.shard_count);
    }
    log.close();

    SearchSummary s = summarize(read_log(config.output), config);
    s.new_samples = fresh;
    s.skipped_samples = skipped;
    return s;
}

}  // namespace oblique::conjecture
