#pragma once

#include <functional>
#include <string>

#include "duet/model.hpp"

namespace duet {

// Linearized propagation operators of the two architectures: a stack of L
// message-passing layers followed by one attention layer, versus the convex
// fusion of the two pathways.
Tensor compose_single_pathway(const Tensor& attention, const Tensor& adjacency, int layers);
Tensor compose_dual_pathway(const Tensor& attention, const Tensor& adjacency, int layers,
                            double alpha);

struct PathwayMatrices {
    Tensor adjacency;  // symmetric normalized, |V| x |V|
    Tensor attention;  // row-stochastic, |V| x |V|
    int layers = 1;
    double alpha = 0.5;

    void validate() const;  // symmetry / row sums / alpha range
};

struct InequalityCheck {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    bool passed = false;
};

// Measured largest singular values plus two groups of checks: `asserted`
// holds the inequalities that are mathematically sound (norm identities,
// submultiplicativity, triangle and reverse-triangle bounds); `reported`
// holds strict-contraction observations that a row-stochastic attention
// matrix cannot satisfy in general (sigma_max(P) >= 1 whenever P1 = 1), so
// they are recorded per instance rather than enforced.
struct SpectralReport {
    double sigma_adjacency_pow = 0.0;  // sigma_max(A^L)
    double sigma_attention = 0.0;      // sigma_max(P)
    double sigma_single = 0.0;         // sigma_max(P A^L)
    double sigma_dual = 0.0;           // sigma_max(alpha A^L + (1-alpha) P)
    std::vector<InequalityCheck> asserted;
    std::vector<InequalityCheck> reported;
    double alpha = 0.0;
    double alpha_threshold = 0.0;
    bool alpha_below_threshold = false;

    bool all_asserted_pass() const;
    std::string to_canonical_json() const;
};

SpectralReport singular_report(const PathwayMatrices& matrices);

// (sigma_dual + sigma_single) / (1 + sigma_single): the fusion weight below
// which the dual model keeps the larger score-gap bound.
double alpha_threshold(double sigma_single, double sigma_dual);

// 2 * L_f * sigma_max^layers * x0_norm.
double gap_upper_bound(double l_f, double sigma_max, int layers, double x0_norm);

struct GapBoundInstance {
    int layer = 0;
    double bound = 0.0;
    double max_gap = 0.0;
    int violations = 0;
};

struct GapBoundReport {
    double sigma_dual = 0.0;
    double l_f = 0.0;
    double x0_norm = 0.0;
    double alpha = 0.0;
    int pairs_per_layer = 0;
    std::vector<GapBoundInstance> layers;

    int total_violations() const;
};

// Propagates X through the dual operator for 0..max_layers steps, scores rows
// with the model's MLP and verifies that sampled pairwise score gaps stay
// under gap_upper_bound (with 1e-6 slack for the measured sigma).
GapBoundReport empirical_gap_vs_bound(DuetModel& model, const KnowledgeGraph& g, int head,
                                      int rel, int pair_count, int max_layers, Rng& rng);

// |1/(n_high^2+1) - 1/(n_low^2+1)| * sigma.
double subtable_gap_lower_bound(double n_high, double n_low, double sigma);

using ScoreSampler = std::function<double(Rng&)>;

struct MonteCarloReport {
    size_t n_high = 0, n_low = 0, trials = 0;
    double empirical_mean = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool exceeds_bound = false;
};

// Draws n_high + n_low iid scores per trial, measures |max(high) - max(low)|
// and compares the empirical mean against subtable_gap_lower_bound with unit
// sigma. The sampler defaults to the standard normal.
MonteCarloReport verify_subtable_gap_montecarlo(size_t n_high, size_t n_low, size_t trials, Rng& rng,
                                            const ScoreSampler& sampler = nullptr);

// Bound-decay curves for both operators as CSV rows: layer,single,dual.
std::string bound_curves_csv(double l_f, double sigma_single, double sigma_dual, double x0_norm,
                             int max_layers);

}  // namespace duet
