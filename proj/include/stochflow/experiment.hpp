#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochflow/network.hpp"
#include "stochflow/two_stage.hpp"

namespace stochflow {

// One batch of runs of a single method across its parameter sweep.
struct MethodBlock {
    std::string method;  // exact | saa | subselect | deterministic | mean | evaluate
    std::vector<long long> n_values;   // saa sample sizes / evaluate MC sizes
    std::vector<int> k_values;         // subselect candidate counts
    std::vector<long long> n1_values;  // subselect small-sample sizes
    std::vector<long long> n2_values;  // paired with n1; empty means 2*n1
    std::string allocation_path;       // evaluate only
};

// How the true expected value of each produced allocation is estimated for
// the true_objective column. Auto = exact when the scenario space is
// enumerable, otherwise none.
struct EvaluationPolicy {
    enum class Mode { Auto, None, Exact, Mc };
    Mode mode = Mode::Auto;
    long long n = 10000;        // MC mode sample size
    std::uint64_t seed = 1ull;  // MC mode seed, shared across all rows
};

struct ExperimentPlan {
    std::string network_path;
    std::string output_path;
    std::string aggregate_output_path;  // empty: derived from output_path
    std::vector<MethodBlock> methods;
    std::vector<std::uint64_t> seeds;
    EvaluationPolicy evaluation;
    int enumeration_cap = kDefaultEnumerationCap;
    bool record_timing = true;  // false writes 0 in wall_time_ms, making files byte-stable
};

ExperimentPlan plan_from_json_text(const std::string& text, const std::string& origin = "<string>");

// Loads a plan and resolves relative file paths against the plan's directory.
ExperimentPlan load_plan(const std::string& path);

struct ExperimentRow {
    std::string method;
    std::optional<long long> n;
    std::optional<long long> k_candidates;
    std::optional<long long> n1;
    std::optional<long long> n2;
    std::optional<std::uint64_t> seed;
    double objective = 0.0;
    std::optional<double> true_objective;
    std::optional<double> std_error;
    std::optional<long long> n_distinct;
    double wall_time_ms = 0.0;
};

// Executes the plan against an already-loaded network. Row order follows
// plan order (method, then sweep point, then seed), so output is
// deterministic apart from wall_time_ms.
std::vector<ExperimentRow> run_experiment(const ExperimentPlan& plan, const NetworkSpec& net);

// header: method,n,k_candidates,n1,n2,seed,objective,true_objective,
//         std_error,n_distinct_scenarios,wall_time_ms
std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

// Mean/min/max of objective and true_objective per sweep point (method, n,
// k_candidates, n1, n2), grouped in first-appearance order.
std::string aggregate_to_csv(const std::vector<ExperimentRow>& rows);

// load network, run, write both CSV files; returns the rows.
std::vector<ExperimentRow> run_experiment_files(const ExperimentPlan& plan);

// "runs.csv" -> "runs.aggregate.csv"
std::string default_aggregate_path(const std::string& output_path);

}  // namespace stochflow
