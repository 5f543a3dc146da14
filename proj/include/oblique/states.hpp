#pragma once

// Constructors for the nested state families
//
//   zero-discord  subset of  zero-oblique-discord  subset of  separable
//
// plus seeded random ensembles used by tests and the conjecture search.

#include "oblique/channels.hpp"
#include "oblique/qmat.hpp"
#include "oblique/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oblique::states {

using channels::ObliqueBasis;
using qmat::DensityMatrix;

/// sum_i p_i rho_i^A (x) rho_i^B
struct SeparableSpec {
    std::vector<double> weights;
    std::vector<DensityMatrix> a_states;
    std::vector<DensityMatrix> b_states;
};

/// sum_i p_i |i><i| (x) rho_i^B over a normalized basis {|i>} of A. Fewer
/// terms than the basis size are completed with zero weights.
struct ZodSpec {
    ObliqueBasis basis;
    std::vector<double> weights;
    std::vector<DensityMatrix> b_states;
};

/// sum p_{i1..iN} |i1><i1| (x) ... (x) |iN><iN|; weights are indexed
/// row-major over (i1, ..., iN).
struct GlobalZodSpec {
    std::vector<ObliqueBasis> bases;
    std::vector<double> weights;
};

/// A constructed state with the family membership it carries by construction.
struct Labeled {
    std::string label;
    DensityMatrix state;
    bool separable = true;
    bool zero_oblique_discord = false;
    bool zero_discord = false;
    std::optional<ObliqueBasis> basis;  // A-side basis the state was built from, if any
};

DensityMatrix build_separable(const SeparableSpec& spec);
DensityMatrix build_zod(const ZodSpec& spec);
DensityMatrix build_global_zod(const GlobalZodSpec& spec);

/// Outputs carrying their family flags. zero_discord is set when the basis is
/// orthonormal within 1e-12.
Labeled build_zod_labeled(const ZodSpec& spec, std::string label = "zod");
Labeled build_global_zod_labeled(const GlobalZodSpec& spec, std::string label = "global-zod");

/// The ZodSpec restated as a SeparableSpec (A factors |i><i|).
SeparableSpec as_separable(const ZodSpec& spec);

/// G G^dagger / tr(G G^dagger) for an order x rank complex Gaussian G.
DensityMatrix random_density(const qmat::Dims& dims, int rank, Seed seed);

/// 2 dim^2 standard normals, resampled until the basis they chart has
/// condition number <= cap; throws IllConditionedBasis after `budget` tries.
std::vector<double> random_basis_parameters(int dim, double cap, Seed seed, int budget = 100);

ObliqueBasis random_oblique_basis(int dim, double cap, Seed seed, int budget = 100);

/// Random probability vector (normalized exponentials).
std::vector<double> random_weights(int count, Rng& rng);

/// Fixed two-qubit witnesses:
///   w1 = 1/2 (|00><00| + |11><11|)                       zero discord
///   w2 = 1/2 (|00><00| + |+1><+1|)                       zero oblique discord, discordant
///   w3 = 1/3 (|00><00| + |11><11| + |++><++|)            separable, oblique-discordant
std::vector<Labeled> hierarchy_witnesses();

/// |0>, |1>, |+> = (|0> + |1>)/sqrt 2, |Phi+> = (|00> + |11>)/sqrt 2
qmat::ComplexVector ket(int dim, int index);
qmat::ComplexVector plus_ket();
DensityMatrix bell_state();

}  // namespace oblique::states
