#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stochflow/lp.hpp"
#include "stochflow/network.hpp"

namespace stochflow {

// First-stage plan: units bought from each producer, units contracted for
// sale to each consumer. Ordered maps keep every traversal deterministic.
struct Allocation {
    std::map<std::string, double> producer_amounts;
    std::map<std::string, double> consumer_amounts;

    double producer(const std::string& id) const {
        auto it = producer_amounts.find(id);
        return it == producer_amounts.end() ? 0.0 : it->second;
    }
    double consumer(const std::string& id) const {
        auto it = consumer_amounts.find(id);
        return it == consumer_amounts.end() ? 0.0 : it->second;
    }
    bool operator==(const Allocation&) const = default;
};

// Second-stage reaction to one failure scenario: edge flows plus the amounts
// actually taken from producers / delivered to consumers.
struct RecourseDecision {
    std::vector<double> edge_flows;  // indexed like NetworkSpec::edges
    std::map<std::string, double> delivered_in;
    std::map<std::string, double> delivered_out;
};

struct EvaluationResult {
    double estimate = 0.0;
    double std_error = 0.0;  // 0 for exact evaluation
    long long n_samples = 0;
    std::vector<double> per_scenario_values;  // recourse values, when requested
};

// Throws std::invalid_argument when x names unknown nodes, carries negative
// amounts, or exceeds node capacities (tolerance 1e-9).
void require_valid_allocation(const NetworkSpec& net, const Allocation& x);

// Profit locked in before failures resolve: stage-1 sale revenue minus
// stage-1 purchase cost.
double first_stage_value(const NetworkSpec& net, const Allocation& x);

// Second-stage LP for one scenario. Column layout: edge flows (edge order),
// then per-producer delivered-in, then per-consumer delivered-out. The
// objective includes the constant refund/penalty term for undelivered units,
// so its optimum is the full recourse value.
LinearProgram build_recourse_lp(const NetworkSpec& net, const Allocation& x,
                                const FailureScenario& s);

double recourse_value(const NetworkSpec& net, const Allocation& x, const FailureScenario& s,
                      const SolveOptions& options = {});

struct RecourseSolution {
    double value = 0.0;
    RecourseDecision decision;
};
RecourseSolution solve_recourse(const NetworkSpec& net, const Allocation& x,
                                const FailureScenario& s, const SolveOptions& options = {});

// Exact expected two-stage value over an enumerable scenario space.
// Bernoulli sets are enumerated first (subject to enumeration_cap).
EvaluationResult exact_evaluate(const NetworkSpec& net, const Allocation& x,
                                const ScenarioSet& scen, bool keep_per_scenario = false,
                                int enumeration_cap = kDefaultEnumerationCap,
                                const SolveOptions& options = {});

// Monte-Carlo estimate of the two-stage value: N seeded scenario draws,
// compressed to distinct scenarios before the recourse solves.
EvaluationResult mc_evaluate(const NetworkSpec& net, const Allocation& x, long long n_samples,
                             std::uint64_t seed, bool keep_per_scenario = false,
                             const SolveOptions& options = {});

// Single LP containing the first-stage variables and one recourse block per
// scenario, probability-weighted. Column layout: producer purchases
// (producer order), consumer contracts (consumer order), then per scenario a
// block of [edge flows, delivered-in, delivered-out].
struct DetEquivProgram {
    LinearProgram lp;
    int n_producers = 0;
    int n_consumers = 0;
    int n_edges = 0;
    int n_scenarios = 0;
    int scenario_cols_begin = 0;  // == n_producers + n_consumers
    int cols_per_scenario = 0;    // == n_edges + n_producers + n_consumers

    Allocation extract_allocation(const NetworkSpec& net, const std::vector<double>& primal) const;
    RecourseDecision extract_recourse(const NetworkSpec& net, const std::vector<double>& primal,
                                      int scenario_index) const;
};

DetEquivProgram build_deterministic_equivalent(const NetworkSpec& net, const ScenarioSet& scen,
                                               bool with_names = false);

struct ExactSolution {
    Allocation allocation;
    double objective = 0.0;
    long long n_scenarios = 0;
};

// Solves the deterministic equivalent. Bernoulli sets are enumerated first.
// Throws ProblemTooLargeError when the merged LP would exceed the solver's
// configured row/column limits (checked before any allocation).
ExactSolution exact_optimize(const NetworkSpec& net, const ScenarioSet& scen,
                             int enumeration_cap = kDefaultEnumerationCap,
                             const SolveOptions& options = {});

}  // namespace stochflow
