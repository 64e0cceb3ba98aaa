#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochflow/network.hpp"
#include "stochflow/two_stage.hpp"

namespace stochflow {

// Result of optimizing over one sampled (empirical) scenario distribution.
struct SaaResult {
    Allocation allocation;
    double saa_objective = 0.0;  // empirical objective at the optimum
    ScenarioSet sample;          // the compressed sample that was optimized over
    std::uint64_t seed = 0;
    long long n_raw = 0;         // draws before compression
    long long n_distinct = 0;    // distinct scenarios after compression
};

// Draws n_samples scenarios with the given seed, compresses them, and solves
// the merged program over the empirical distribution.
SaaResult saa_optimize(const NetworkSpec& net, long long n_samples, std::uint64_t seed,
                       const SolveOptions& options = {});

struct CandidateAudit {
    Allocation allocation;
    std::uint64_t seed = 0;        // child seed of this candidate's sample
    double small_objective = 0.0;  // empirical objective on the candidate's own sample
    double shared_estimate = 0.0;  // estimate on the shared evaluation sample
    double shared_std_error = 0.0;
};

struct SubselectResult {
    SaaResult best;
    int best_index = 0;
    double best_estimate = 0.0;   // winner's score on the shared sample
    double best_std_error = 0.0;
    std::vector<CandidateAudit> audit;
};

// Best-of-K: runs K independent small-sample optimizations (child seeds
// derived from `seed`), scores every candidate on one shared fresh
// n_eval-sample, and returns the highest-scoring candidate (ties: lowest
// index). Candidate i uses derive_seed(seed, i); the shared evaluation
// sample uses derive_seed(seed, K).
SubselectResult subselect_optimize(const NetworkSpec& net, int k_candidates, long long n_small,
                                   long long n_eval, std::uint64_t seed,
                                   const SolveOptions& options = {});

// Plan as if no edge ever failed: optimize the single all-operating scenario.
Allocation deterministic_baseline(const NetworkSpec& net, const SolveOptions& options = {});

// Plan against the mean network: every unreliable edge's capacity is scaled
// by its reliability (the mean of the random capacity) and treated as
// reliable, then the single-scenario problem is optimized.
Allocation mean_baseline(const NetworkSpec& net, const SolveOptions& options = {});

// Inputs to the sample-size calculators. value_range is the width of the
// attainable recourse-value range (the scale every bound depends on).
struct BoundQuery {
    double value_range = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::optional<double> x_space_size;  // candidate-set size, integer >= 1
    std::optional<double> n_dim;         // dimension of the allocation box
    std::optional<double> d_box;         // box diameter
    std::optional<double> lipschitz;     // Lipschitz constant of the objective
};

// Samples needed so one Monte-Carlo estimate of a fixed allocation's value
// is within epsilon of the truth with probability >= 1-delta:
// ceil(range^2 / (2 eps^2) * ln(2/delta)).
long long evaluation_sample_bound(const BoundQuery& q);

// Samples needed so empirical optimization over a finite candidate set picks
// a near-optimal candidate: ceil(2 range^2 / eps^2 * ln(2|X|/delta)).
// Requires x_space_size.
long long finite_selection_sample_bound(const BoundQuery& q);

struct LipschitzBoundResult {
    long long n = 0;
    // True when 2*d_box*lipschitz/epsilon <= 1: the covering term is
    // nonpositive and the formula degenerates, so n is floored at
    // evaluation_sample_bound.
    bool degenerate = false;
};

// Samples needed for empirical optimization over a continuous box under a
// Lipschitz objective: ceil(8 range^2 / eps^2 * [n_dim * ln(2 d K / eps)
// + ln(2/delta)]). Requires n_dim (>= 0), d_box, lipschitz.
LipschitzBoundResult lipschitz_selection_sample_bound(const BoundQuery& q);

// Crude upper bound on the recourse-value range: sum of capacity times
// |stage-2 price| over all producers and consumers. The exact range is
// itself an optimization problem; this box bound is always safe.
double recourse_range_upper_bound(const NetworkSpec& net);

}  // namespace stochflow
