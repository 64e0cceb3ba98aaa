#include "stochflow/saa.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "stochflow/errors.hpp"
#include "stochflow/rng.hpp"

namespace stochflow {

SaaResult saa_optimize(const NetworkSpec& net, long long n_samples, std::uint64_t seed,
                       const SolveOptions& options) {
    if (n_samples < 1) throw std::invalid_argument("saa_optimize needs n_samples >= 1");
    require_valid(net);

    std::mt19937_64 gen(seed);
    std::vector<FailureScenario> draws;
    draws.reserve(static_cast<size_t>(n_samples));
    for (long long i = 0; i < n_samples; ++i) draws.push_back(sample_scenario(net, gen));

    SaaResult result;
    result.sample = compress_sample(draws);
    result.seed = seed;
    result.n_raw = n_samples;
    result.n_distinct = static_cast<long long>(result.sample.scenarios.size());

    const ExactSolution sol = exact_optimize(net, result.sample, kDefaultEnumerationCap, options);
    result.allocation = sol.allocation;
    result.saa_objective = sol.objective;
    return result;
}

SubselectResult subselect_optimize(const NetworkSpec& net, int k_candidates, long long n_small,
                                   long long n_eval, std::uint64_t seed,
                                   const SolveOptions& options) {
    if (k_candidates < 1) throw std::invalid_argument("subselect_optimize needs k_candidates >= 1");
    if (n_small < 1 || n_eval < 1)
        throw std::invalid_argument("subselect_optimize needs n_small >= 1 and n_eval >= 1");

    const std::uint64_t eval_seed = derive_seed(seed, static_cast<std::uint64_t>(k_candidates));

    SubselectResult result;
    std::vector<SaaResult> candidates;
    candidates.reserve(static_cast<size_t>(k_candidates));
    for (int i = 0; i < k_candidates; ++i) {
        const std::uint64_t child = derive_seed(seed, static_cast<std::uint64_t>(i));
        candidates.push_back(saa_optimize(net, n_small, child, options));

        // Every candidate is scored on the same fresh evaluation sample; the
        // shared sample makes the comparison a paired one.
        const EvaluationResult score =
            mc_evaluate(net, candidates.back().allocation, n_eval, eval_seed, false, options);

        CandidateAudit audit;
        audit.allocation = candidates.back().allocation;
        audit.seed = child;
        audit.small_objective = candidates.back().saa_objective;
        audit.shared_estimate = score.estimate;
        audit.shared_std_error = score.std_error;
        result.audit.push_back(std::move(audit));
    }

    int best = 0;
    for (int i = 1; i < k_candidates; ++i)
        if (result.audit[static_cast<size_t>(i)].shared_estimate >
            result.audit[static_cast<size_t>(best)].shared_estimate)
            best = i;

    result.best = std::move(candidates[static_cast<size_t>(best)]);
    result.best_index = best;
    result.best_estimate = result.audit[static_cast<size_t>(best)].shared_estimate;
    result.best_std_error = result.audit[static_cast<size_t>(best)].shared_std_error;
    return result;
}

namespace {

FailureScenario all_operating(int k) {
    FailureScenario s;
    s.k = k;
    s.bits = k == 0 ? 0ull : (~0ull >> (64 - k));
    s.probability = 1.0;
    return s;
}

}  // namespace

Allocation deterministic_baseline(const NetworkSpec& net, const SolveOptions& options) {
    require_valid(net);
    const int k = static_cast<int>(net.unreliable_edge_indices().size());
    const ScenarioSet single = ScenarioSet::explicit_set(k, {all_operating(k)});
    return exact_optimize(net, single, kDefaultEnumerationCap, options).allocation;
}

Allocation mean_baseline(const NetworkSpec& net, const SolveOptions& options) {
    require_valid(net);
    NetworkSpec mean_net = net;
    for (EdgeSpec& edge : mean_net.edges) {
        if (edge.reliability < 1.0) {
            edge.capacity *= edge.reliability;
            edge.reliability = 1.0;
        }
    }
    const ScenarioSet single = ScenarioSet::explicit_set(0, {all_operating(0)});
    return exact_optimize(mean_net, single, kDefaultEnumerationCap, options).allocation;
}

namespace {

void check_common(const BoundQuery& q) {
    if (!(q.value_range > 0.0)) throw std::invalid_argument("value_range must be > 0");
    if (!(q.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(q.delta > 0.0 && q.delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
}

long long ceil_to_count(double v) {
    if (!(v < 9.0e18)) throw std::invalid_argument("sample bound overflows a 64-bit count");
    const double c = std::ceil(v);
    return static_cast<long long>(c);
}

}  // namespace

long long evaluation_sample_bound(const BoundQuery& q) {
    check_common(q);
    const double r = q.value_range;
    return ceil_to_count(r * r / (2.0 * q.epsilon * q.epsilon) * std::log(2.0 / q.delta));
}

long long finite_selection_sample_bound(const BoundQuery& q) {
    check_common(q);
    if (!q.x_space_size || !(*q.x_space_size >= 1.0))
        throw std::invalid_argument("finite_selection_sample_bound needs x_space_size >= 1");
    const double r = q.value_range;
    return ceil_to_count(2.0 * r * r / (q.epsilon * q.epsilon) *
                         std::log(2.0 * *q.x_space_size / q.delta));
}

LipschitzBoundResult lipschitz_selection_sample_bound(const BoundQuery& q) {
    check_common(q);
    if (!q.n_dim || !(*q.n_dim >= 0.0))
        throw std::invalid_argument("lipschitz_selection_sample_bound needs n_dim >= 0");
    if (!q.d_box || !(*q.d_box > 0.0))
        throw std::invalid_argument("lipschitz_selection_sample_bound needs d_box > 0");
    if (!q.lipschitz || !(*q.lipschitz > 0.0))
        throw std::invalid_argument("lipschitz_selection_sample_bound needs lipschitz > 0");

    const double r = q.value_range;
    const double cover = 2.0 * *q.d_box * *q.lipschitz / q.epsilon;
    const double raw = 8.0 * r * r / (q.epsilon * q.epsilon) *
                       (*q.n_dim * std::log(cover) + std::log(2.0 / q.delta));

    LipschitzBoundResult result;
    result.degenerate = *q.n_dim > 0.0 && cover <= 1.0;
    const long long floor_n = evaluation_sample_bound(q);
    result.n = std::max(ceil_to_count(std::max(raw, 0.0)), floor_n);
    return result;
}

double recourse_range_upper_bound(const NetworkSpec& net) {
    double total = 0.0;
    for (const NodeSpec& node : net.nodes) {
        if (node.kind == NodeKind::Regular) continue;
        if (!std::isfinite(node.capacity))
            throw std::invalid_argument("range bound needs finite producer/consumer capacities");
        total += node.capacity * std::abs(node.price_stage2.value_or(0.0));
    }
    return total;
}

}  // namespace stochflow
