#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochflow/errors.hpp"
#include "stochflow/experiment.hpp"
#include "stochflow/io.hpp"
#include "stochflow/saa.hpp"

namespace {

using namespace stochflow;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct SolveArgs {
    std::string network_path;
    std::string method;
    long long n = 100;
    int k = 5;
    long long n1 = 0;
    long long n2 = 0;
    std::uint64_t seed = 1;
    int cap = kDefaultEnumerationCap;
    std::string output_path;
    std::string dump_lp_path;
};

void print_allocation(const Allocation& x) {
    for (const auto& [id, v] : x.producer_amounts) std::cout << "buy " << id << " " << fmt(v) << "\n";
    for (const auto& [id, v] : x.consumer_amounts) std::cout << "sell " << id << " " << fmt(v) << "\n";
}

void dump_lp_file(const LinearProgram& lp, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_lp_text(lp, out);
    if (!out.flush()) throw IoError("write failure on '" + path + "'");
}

FailureScenario all_up(int k) {
    FailureScenario s;
    s.k = k;
    s.bits = k == 0 ? 0ull : (~0ull >> (64 - k));
    s.probability = 1.0;
    return s;
}

int run_validate(const std::string& path) {
    const NetworkSpec net = load_network(path);
    const ValidationReport report = validate_network(net);
    for (const std::string& v : report.violations) std::cout << "violation: " << v << "\n";
    for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
    if (!report.ok()) return kExitDomain;
    std::cout << "ok\n";
    return kExitOk;
}

int run_solve(const SolveArgs& args, bool timing) {
    const NetworkSpec net = load_network(args.network_path);
    require_valid(net);
    const int k_net = static_cast<int>(net.unreliable_edge_indices().size());

    Stopwatch watch;
    Allocation x;
    double objective = 0.0;

    if (args.method == "exact") {
        const ExactSolution sol = exact_optimize(net, ScenarioSet::bernoulli(net), args.cap);
        x = sol.allocation;
        objective = sol.objective;
        std::cout << "scenarios " << sol.n_scenarios << "\n";
        if (!args.dump_lp_path.empty())
            dump_lp_file(
                build_deterministic_equivalent(net, enumerate_scenarios(net, args.cap), true).lp,
                args.dump_lp_path);
    } else if (args.method == "saa") {
        const SaaResult res = saa_optimize(net, args.n, args.seed);
        x = res.allocation;
        objective = res.saa_objective;
        std::cout << "seed " << res.seed << "\n";
        std::cout << "n_raw " << res.n_raw << "\n";
        std::cout << "n_distinct " << res.n_distinct << "\n";
        if (!args.dump_lp_path.empty())
            dump_lp_file(build_deterministic_equivalent(net, res.sample, true).lp,
                         args.dump_lp_path);
    } else if (args.method == "subselect") {
        if (args.n1 < 1) throw std::invalid_argument("subselect needs --n1 >= 1");
        const long long n2 = args.n2 > 0 ? args.n2 : 2 * args.n1;
        const SubselectResult res = subselect_optimize(net, args.k, args.n1, n2, args.seed);
        x = res.best.allocation;
        objective = res.best_estimate;
        std::cout << "seed " << args.seed << "\n";
        for (size_t i = 0; i < res.audit.size(); ++i) {
            const CandidateAudit& c = res.audit[i];
            std::cout << "candidate " << i << " seed " << c.seed << " own "
                      << fmt(c.small_objective) << " shared " << fmt(c.shared_estimate) << "\n";
        }
        std::cout << "best_index " << res.best_index << "\n";
        if (!args.dump_lp_path.empty())
            throw std::invalid_argument("--dump-lp is not available for subselect");
    } else if (args.method == "deterministic" || args.method == "mean") {
        if (args.method == "deterministic") {
            x = deterministic_baseline(net);
            objective =
                exact_evaluate(net, x, ScenarioSet::explicit_set(k_net, {all_up(k_net)})).estimate;
            if (!args.dump_lp_path.empty())
                dump_lp_file(build_deterministic_equivalent(
                                 net, ScenarioSet::explicit_set(k_net, {all_up(k_net)}), true)
                                 .lp,
                             args.dump_lp_path);
        } else {
            x = mean_baseline(net);
            NetworkSpec mean_net = net;
            for (EdgeSpec& e : mean_net.edges)
                if (e.reliability < 1.0) {
                    e.capacity *= e.reliability;
                    e.reliability = 1.0;
                }
            objective = exact_evaluate(mean_net, x, ScenarioSet::bernoulli(mean_net)).estimate;
            if (!args.dump_lp_path.empty())
                dump_lp_file(build_deterministic_equivalent(
                                 mean_net, ScenarioSet::explicit_set(0, {all_up(0)}), true)
                                 .lp,
                             args.dump_lp_path);
        }
    } else {
        throw std::invalid_argument("unknown method '" + args.method +
                                    "' (expected exact, saa, subselect, deterministic, or mean)");
    }

    const double elapsed = timing ? watch.ms() : 0.0;
    std::cout << "objective " << fmt(objective) << "\n";
    print_allocation(x);
    std::cout << "wall_time_ms " << fmt(elapsed) << "\n";
    if (!args.output_path.empty()) save_allocation(x, args.output_path);
    return kExitOk;
}

int run_evaluate(const std::string& network_path, const std::string& allocation_path, bool exact,
                 long long mc_n, std::uint64_t seed, int cap, bool timing) {
    const NetworkSpec net = load_network(network_path);
    require_valid(net);
    const Allocation x = load_allocation(allocation_path);

    Stopwatch watch;
    EvaluationResult res;
    if (exact)
        res = exact_evaluate(net, x, ScenarioSet::bernoulli(net), false, cap);
    else
        res = mc_evaluate(net, x, mc_n, seed);
    const double elapsed = timing ? watch.ms() : 0.0;

    std::cout << "estimate,std_error,n_samples,wall_time_ms\n";
    std::cout << fmt(res.estimate) << "," << fmt(res.std_error) << "," << res.n_samples << ","
              << fmt(elapsed) << "\n";
    return kExitOk;
}

int run_experiment_cmd(const std::string& plan_path, bool no_timing) {
    ExperimentPlan plan = load_plan(plan_path);
    if (no_timing) plan.record_timing = false;
    const std::vector<ExperimentRow> rows = run_experiment_files(plan);
    std::cout << "rows " << rows.size() << "\n";
    std::cout << "output " << plan.output_path << "\n";
    std::cout << "aggregate "
              << (plan.aggregate_output_path.empty() ? default_aggregate_path(plan.output_path)
                                                     : plan.aggregate_output_path)
              << "\n";
    return kExitOk;
}

int run_generate(const NetworkGenParams& params, std::uint64_t seed, const std::string& output) {
    const NetworkSpec net = generate_random_network(params, seed);
    save_network(net, output);
    const int k = static_cast<int>(net.unreliable_edge_indices().size());
    std::cout << "k " << k << "\n";
    std::cout << "scenario_space " << (1ull << k) << "\n";
    std::cout << "output " << output << "\n";
    return kExitOk;
}

int run_bounds(const BoundQuery& query, bool have_candidates, bool have_lipschitz) {
    std::cout << "evaluation: N >= " << evaluation_sample_bound(query) << " (range "
              << fmt(query.value_range) << ", epsilon " << fmt(query.epsilon) << ", delta "
              << fmt(query.delta) << ")\n";
    if (have_candidates)
        std::cout << "finite-selection: N >= " << finite_selection_sample_bound(query)
                  << " (candidates " << fmt(*query.x_space_size) << ")\n";
    if (have_lipschitz) {
        const LipschitzBoundResult res = lipschitz_selection_sample_bound(query);
        std::cout << "lipschitz-selection: N >= " << res.n << " (dim " << fmt(*query.n_dim)
                  << ", box " << fmt(*query.d_box) << ", lipschitz " << fmt(*query.lipschitz)
                  << ")";
        if (res.degenerate)
            std::cout << " [covering term nonpositive; floored at the evaluation bound]";
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage stochastic resource allocation on unreliable networks"};
    app.require_subcommand(1);
    bool no_timing = false;
    app.add_flag("--no-timing", no_timing, "report wall times as 0 for byte-stable output");

    auto* validate = app.add_subcommand("validate", "Check a network file against all invariants");
    std::string validate_path;
    validate->add_option("network", validate_path, "network JSON file")->required();

    auto* generate = app.add_subcommand("generate", "Write a random layered network file");
    NetworkGenParams gen_params;
    std::uint64_t gen_seed = 1;
    std::string gen_output;
    generate->add_option("--output,-o", gen_output, "output network file")->required();
    generate->add_option("--seed", gen_seed, "generator seed");
    generate->add_option("--producers", gen_params.n_producers, "producer count");
    generate->add_option("--consumers", gen_params.n_consumers, "consumer count");
    generate->add_option("--regular", gen_params.n_regular, "regular node count");
    generate->add_option("--edges", gen_params.n_edges, "edge count");
    generate->add_option("--unreliable", gen_params.n_unreliable, "unreliable edge count");
    std::vector<double> cap_range, rel_range, pp1, cp1, pp2, cp2;
    generate->add_option("--capacity-range", cap_range, "edge/node capacity range")->expected(2);
    generate->add_option("--reliability-range", rel_range, "unreliable edge reliability range")->expected(2);
    generate->add_option("--producer-price1-range", pp1, "producer purchase price range")->expected(2);
    generate->add_option("--consumer-price1-range", cp1, "consumer sale price range")->expected(2);
    generate->add_option("--producer-price2-range", pp2, "producer refund price range")->expected(2);
    generate->add_option("--consumer-price2-range", cp2, "consumer penalty price range")->expected(2);

    auto* solve = app.add_subcommand("solve", "Optimize an allocation for a network file");
    SolveArgs solve_args;
    solve->add_option("--network", solve_args.network_path, "network JSON file")->required();
    solve->add_option("--method", solve_args.method,
                      "exact | saa | subselect | deterministic | mean")
        ->required();
    solve->add_option("--n", solve_args.n, "SAA sample size");
    solve->add_option("--k", solve_args.k, "subselect candidate count");
    solve->add_option("--n1", solve_args.n1, "subselect small sample size");
    solve->add_option("--n2", solve_args.n2, "subselect evaluation sample size (default 2*n1)");
    solve->add_option("--seed", solve_args.seed, "sampling seed");
    solve->add_option("--cap", solve_args.cap, "scenario enumeration cap (bits)");
    solve->add_option("--output,-o", solve_args.output_path, "write the allocation here");
    solve->add_option("--dump-lp", solve_args.dump_lp_path, "write the merged LP in text form");

    auto* evaluate = app.add_subcommand("evaluate", "Value a fixed allocation on a network");
    std::string eval_network, eval_allocation;
    bool eval_exact = false;
    long long eval_n = 0;
    std::uint64_t eval_seed = 1;
    int eval_cap = kDefaultEnumerationCap;
    evaluate->add_option("--network", eval_network, "network JSON file")->required();
    evaluate->add_option("--allocation", eval_allocation, "allocation JSON file")->required();
    auto* exact_flag = evaluate->add_flag("--exact", eval_exact, "exact expectation over all scenarios");
    auto* mc_opt = evaluate->add_option("--mc", eval_n, "Monte-Carlo sample size");
    exact_flag->excludes(mc_opt);
    evaluate->add_option("--seed", eval_seed, "MC seed");
    evaluate->add_option("--cap", eval_cap, "scenario enumeration cap (bits)");

    auto* experiment = app.add_subcommand("experiment", "Run a plan file and emit CSV results");
    std::string plan_path;
    experiment->add_option("--plan", plan_path, "experiment plan JSON file")->required();

    auto* bounds = app.add_subcommand("bounds", "Sample-size calculators for the accuracy guarantees");
    BoundQuery query;
    double b_candidates = 0, b_dim = -1, b_box = 0, b_lip = 0;
    bounds->add_option("--range", query.value_range, "attainable recourse-value range width")->required();
    bounds->add_option("--epsilon", query.epsilon, "accuracy target")->required();
    bounds->add_option("--delta", query.delta, "failure probability")->required();
    auto* cand_opt = bounds->add_option("--candidates", b_candidates, "finite candidate-set size");
    auto* dim_opt = bounds->add_option("--dim", b_dim, "allocation-box dimension");
    auto* box_opt = bounds->add_option("--box", b_box, "allocation-box diameter");
    auto* lip_opt = bounds->add_option("--lipschitz", b_lip, "objective Lipschitz constant");
    dim_opt->needs(box_opt)->needs(lip_opt);
    box_opt->needs(dim_opt);
    lip_opt->needs(dim_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*validate) return run_validate(validate_path);
        if (*generate) {
            if (cap_range.size() == 2) gen_params.capacity_range = {cap_range[0], cap_range[1]};
            if (rel_range.size() == 2) gen_params.reliability_range = {rel_range[0], rel_range[1]};
            if (pp1.size() == 2) gen_params.producer_price1_range = {pp1[0], pp1[1]};
            if (cp1.size() == 2) gen_params.consumer_price1_range = {cp1[0], cp1[1]};
            if (pp2.size() == 2) gen_params.producer_price2_range = {pp2[0], pp2[1]};
            if (cp2.size() == 2) gen_params.consumer_price2_range = {cp2[0], cp2[1]};
            return run_generate(gen_params, gen_seed, gen_output);
        }
        if (*solve) return run_solve(solve_args, !no_timing);
        if (*evaluate) {
            if (!eval_exact && eval_n < 1)
                throw std::invalid_argument("evaluate needs --exact or --mc <n>");
            return run_evaluate(eval_network, eval_allocation, eval_exact, eval_n, eval_seed,
                                eval_cap, !no_timing);
        }
        if (*experiment) return run_experiment_cmd(plan_path, no_timing);
        if (*bounds) {
            if (cand_opt->count() > 0) query.x_space_size = b_candidates;
            const bool have_lip = dim_opt->count() > 0;
            if (have_lip) {
                query.n_dim = b_dim;
                query.d_box = b_box;
                query.lipschitz = b_lip;
            }
            return run_bounds(query, cand_opt->count() > 0, have_lip);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CapExceededError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
