#include "stochflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stochflow/errors.hpp"
#include "stochflow/io.hpp"
#include "stochflow/saa.hpp"

namespace stochflow {

namespace {

using nlohmann::json;

const char* kRowHeader =
    "method,n,k_candidates,n1,n2,seed,objective,true_objective,std_error,"
    "n_distinct_scenarios,wall_time_ms";

const char* kAggregateHeader =
    "method,n,k_candidates,n1,n2,n_runs,objective_mean,objective_min,objective_max,"
    "true_objective_mean,true_objective_min,true_objective_max";

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string fmt_opt(const std::optional<T>& v) {
    if (!v) return {};
    if constexpr (std::is_floating_point_v<T>)
        return fmt_real(*v);
    else
        return std::to_string(*v);
}

std::vector<long long> get_count_list(const json& obj, const char* key, const std::string& origin) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_array()) throw IoError(origin + ": '" + std::string(key) + "' must be an array");
    std::vector<long long> out;
    for (const json& v : *it) {
        if (!v.is_number_integer()) throw IoError(origin + ": '" + std::string(key) + "' entries must be integers");
        out.push_back(v.get<long long>());
    }
    return out;
}

MethodBlock parse_method_block(const json& obj, const std::string& origin) {
    if (!obj.is_object() || !obj.contains("method") || !obj["method"].is_string())
        throw IoError(origin + ": each method entry needs a 'method' string");
    MethodBlock block;
    block.method = obj["method"].get<std::string>();

    static const char* known[] = {"exact", "saa", "subselect", "deterministic", "mean", "evaluate"};
    if (std::find(std::begin(known), std::end(known), block.method) == std::end(known)) {
        if (block.method == "bounds")
            throw std::invalid_argument(
                "'bounds' takes no network runs and is not an experiment method; use the bounds "
                "subcommand instead");
        throw std::invalid_argument("unknown experiment method '" + block.method + "'");
    }

    block.n_values = get_count_list(obj, "n", origin);
    const std::vector<long long> ks = get_count_list(obj, "k", origin);
    for (long long k : ks) block.k_values.push_back(static_cast<int>(k));
    block.n1_values = get_count_list(obj, "n1", origin);
    block.n2_values = get_count_list(obj, "n2", origin);
    if (obj.contains("allocation")) {
        if (!obj["allocation"].is_string()) throw IoError(origin + ": 'allocation' must be a string");
        block.allocation_path = obj["allocation"].get<std::string>();
    }

    if (block.method == "saa" && block.n_values.empty())
        throw std::invalid_argument("saa method needs a non-empty 'n' sweep");
    if (block.method == "evaluate") {
        if (block.n_values.empty())
            throw std::invalid_argument("evaluate method needs a non-empty 'n' sweep");
        if (block.allocation_path.empty())
            throw std::invalid_argument("evaluate method needs an 'allocation' file");
    }
    if (block.method == "subselect") {
        if (block.k_values.empty() || block.n1_values.empty())
            throw std::invalid_argument("subselect method needs non-empty 'k' and 'n1' sweeps");
        if (!block.n2_values.empty() && block.n2_values.size() != block.n1_values.size())
            throw std::invalid_argument("'n2' must pair with 'n1' (same length) when given");
    }
    return block;
}

bool needs_seeds(const MethodBlock& block) {
    return block.method == "saa" || block.method == "subselect" || block.method == "evaluate";
}

}  // namespace

ExperimentPlan plan_from_json_text(const std::string& text, const std::string& origin) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw IoError(origin + ": not valid JSON");
    if (!doc.is_object()) throw IoError(origin + ": plan must be a JSON object");
    if (!doc.contains("network") || !doc["network"].is_string())
        throw IoError(origin + ": missing 'network' path");
    if (!doc.contains("output") || !doc["output"].is_string())
        throw IoError(origin + ": missing 'output' path");

    ExperimentPlan plan;
    plan.network_path = doc["network"].get<std::string>();
    plan.output_path = doc["output"].get<std::string>();
    if (doc.contains("aggregate_output")) {
        if (!doc["aggregate_output"].is_string())
            throw IoError(origin + ": 'aggregate_output' must be a string");
        plan.aggregate_output_path = doc["aggregate_output"].get<std::string>();
    }

    if (doc.contains("methods")) {
        if (!doc["methods"].is_array()) throw IoError(origin + ": 'methods' must be an array");
        for (const json& m : doc["methods"]) plan.methods.push_back(parse_method_block(m, origin));
    } else if (doc.contains("method")) {
        // single-method shorthand: sweep lists live at the top level
        plan.methods.push_back(parse_method_block(doc, origin));
    } else {
        throw IoError(origin + ": plan needs 'methods' (or a single 'method')");
    }

    if (doc.contains("seeds")) {
        const json& seeds = doc["seeds"];
        if (seeds.is_array()) {
            for (const json& s : seeds) {
                if (!s.is_number_integer()) throw IoError(origin + ": seed entries must be integers");
                plan.seeds.push_back(s.get<std::uint64_t>());
            }
        } else if (seeds.is_object() && seeds.contains("count")) {
            const long long count = seeds["count"].get<long long>();
            const long long start = seeds.contains("start") ? seeds["start"].get<long long>() : 1;
            if (count < 1) throw std::invalid_argument("seed count must be >= 1");
            for (long long i = 0; i < count; ++i)
                plan.seeds.push_back(static_cast<std::uint64_t>(start + i));
        } else {
            throw IoError(origin + ": 'seeds' must be an array or {count, start}");
        }
        std::vector<std::uint64_t> sorted = plan.seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("seeds must be distinct");
    }

    if (doc.contains("evaluation")) {
        const json& ev = doc["evaluation"];
        if (!ev.is_object() || !ev.contains("mode") || !ev["mode"].is_string())
            throw IoError(origin + ": 'evaluation' needs a 'mode' string");
        const std::string mode = ev["mode"].get<std::string>();
        if (mode == "auto") plan.evaluation.mode = EvaluationPolicy::Mode::Auto;
        else if (mode == "none") plan.evaluation.mode = EvaluationPolicy::Mode::None;
        else if (mode == "exact") plan.evaluation.mode = EvaluationPolicy::Mode::Exact;
        else if (mode == "mc") plan.evaluation.mode = EvaluationPolicy::Mode::Mc;
        else throw std::invalid_argument("unknown evaluation mode '" + mode + "'");
        if (ev.contains("n")) plan.evaluation.n = ev["n"].get<long long>();
        if (ev.contains("seed")) plan.evaluation.seed = ev["seed"].get<std::uint64_t>();
        if (plan.evaluation.n < 1) throw std::invalid_argument("evaluation n must be >= 1");
    }
    if (doc.contains("enumeration_cap")) plan.enumeration_cap = doc["enumeration_cap"].get<int>();
    if (doc.contains("record_timing")) {
        if (!doc["record_timing"].is_boolean()) throw IoError(origin + ": 'record_timing' must be a bool");
        plan.record_timing = doc["record_timing"].get<bool>();
    }

    bool any_seeded = false;
    for (const MethodBlock& block : plan.methods) any_seeded = any_seeded || needs_seeds(block);
    if (any_seeded && plan.seeds.empty())
        throw std::invalid_argument("plan contains seeded methods but no seeds");
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    ExperimentPlan plan = plan_from_json_text(buf.str(), path);

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&base](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
    };
    resolve(plan.network_path);
    resolve(plan.output_path);
    resolve(plan.aggregate_output_path);
    for (MethodBlock& block : plan.methods) resolve(block.allocation_path);
    return plan;
}

std::string default_aggregate_path(const std::string& output_path) {
    const std::string suffix = ".csv";
    if (output_path.size() > suffix.size() &&
        output_path.compare(output_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return output_path.substr(0, output_path.size() - suffix.size()) + ".aggregate.csv";
    return output_path + ".aggregate.csv";
}

namespace {

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

struct TrueEval {
    EvaluationPolicy::Mode mode;
    long long n;
    std::uint64_t seed;
    int cap;
};

// Fills true_objective (and std_error for MC estimates) for a produced
// allocation.
void apply_true_eval(ExperimentRow& row, const NetworkSpec& net, const Allocation& x,
                     const TrueEval& ev) {
    switch (ev.mode) {
        case EvaluationPolicy::Mode::None:
            return;
        case EvaluationPolicy::Mode::Exact: {
            row.true_objective =
                exact_evaluate(net, x, ScenarioSet::bernoulli(net), false, ev.cap).estimate;
            return;
        }
        case EvaluationPolicy::Mode::Mc: {
            const EvaluationResult res = mc_evaluate(net, x, ev.n, ev.seed);
            row.true_objective = res.estimate;
            row.std_error = res.std_error;
            return;
        }
        case EvaluationPolicy::Mode::Auto:
            throw std::logic_error("auto mode must be resolved before evaluation");
    }
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentPlan& plan, const NetworkSpec& net) {
    require_valid(net);
    const int k_net = static_cast<int>(net.unreliable_edge_indices().size());

    TrueEval ev{plan.evaluation.mode, plan.evaluation.n, plan.evaluation.seed,
                plan.enumeration_cap};
    if (ev.mode == EvaluationPolicy::Mode::Auto)
        ev.mode = k_net <= plan.enumeration_cap ? EvaluationPolicy::Mode::Exact
                                                : EvaluationPolicy::Mode::None;

    std::vector<ExperimentRow> rows;
    for (const MethodBlock& block : plan.methods) {
        if (block.method == "exact") {
            ExperimentRow row;
            row.method = block.method;
            Stopwatch watch;
            const ExactSolution sol = exact_optimize(net, ScenarioSet::bernoulli(net), plan.enumeration_cap);
            row.objective = sol.objective;
            row.n_distinct = sol.n_scenarios;
            apply_true_eval(row, net, sol.allocation, ev);
            row.wall_time_ms = plan.record_timing ? watch.ms() : 0.0;
            rows.push_back(std::move(row));
        } else if (block.method == "deterministic" || block.method == "mean") {
            ExperimentRow row;
            row.method = block.method;
            Stopwatch watch;
            const Allocation x = block.method == "deterministic" ? deterministic_baseline(net)
                                                                 : mean_baseline(net);
            // believed value: the baseline's own single-scenario model
            if (block.method == "deterministic") {
                const int k = k_net;
                FailureScenario up;
                up.k = k;
                up.bits = k == 0 ? 0ull : (~0ull >> (64 - k));
                up.probability = 1.0;
                row.objective = exact_evaluate(net, x, ScenarioSet::explicit_set(k, {up})).estimate;
            } else {
                NetworkSpec mean_net = net;
                for (EdgeSpec& edge : mean_net.edges)
                    if (edge.reliability < 1.0) {
                        edge.capacity *= edge.reliability;
                        edge.reliability = 1.0;
                    }
                row.objective = exact_evaluate(mean_net, x, ScenarioSet::bernoulli(mean_net)).estimate;
            }
            row.n_distinct = 1;
            apply_true_eval(row, net, x, ev);
            row.wall_time_ms = plan.record_timing ? watch.ms() : 0.0;
            rows.push_back(std::move(row));
        } else if (block.method == "saa") {
            for (const long long n : block.n_values) {
                for (const std::uint64_t seed : plan.seeds) {
                    ExperimentRow row;
                    row.method = block.method;
                    row.n = n;
                    row.seed = seed;
                    Stopwatch watch;
                    const SaaResult res = saa_optimize(net, n, seed);
                    row.objective = res.saa_objective;
                    row.n_distinct = res.n_distinct;
                    apply_true_eval(row, net, res.allocation, ev);
                    row.wall_time_ms = plan.record_timing ? watch.ms() : 0.0;
                    rows.push_back(std::move(row));
                }
            }
        } else if (block.method == "subselect") {
            for (const int k : block.k_values) {
                for (size_t i = 0; i < block.n1_values.size(); ++i) {
                    const long long n1 = block.n1_values[i];
                    const long long n2 =
                        block.n2_values.empty() ? 2 * n1 : block.n2_values[i];
                    for (const std::uint64_t seed : plan.seeds) {
                        ExperimentRow row;
                        row.method = block.method;
                        row.k_candidates = k;
                        row.n1 = n1;
                        row.n2 = n2;
                        row.seed = seed;
                        Stopwatch watch;
                        const SubselectResult res = subselect_optimize(net, k, n1, n2, seed);
                        row.objective = res.best_estimate;
                        row.std_error = res.best_std_error;
                        row.n_distinct = res.best.n_distinct;
                        apply_true_eval(row, net, res.best.allocation, ev);
                        row.wall_time_ms = plan.record_timing ? watch.ms() : 0.0;
                        rows.push_back(std::move(row));
                    }
                }
            }
        } else if (block.method == "evaluate") {
            const Allocation x = load_allocation(block.allocation_path);
            for (const long long n : block.n_values) {
                for (const std::uint64_t seed : plan.seeds) {
                    ExperimentRow row;
                    row.method = block.method;
                    row.n = n;
                    row.seed = seed;
                    Stopwatch watch;
                    const EvaluationResult res = mc_evaluate(net, x, n, seed, /*keep=*/true);
                    row.objective = res.estimate;
                    row.std_error = res.std_error;
                    row.n_distinct = static_cast<long long>(res.per_scenario_values.size());
                    apply_true_eval(row, net, x, ev);
                    row.wall_time_ms = plan.record_timing ? watch.ms() : 0.0;
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
    std::ostringstream out;
    out << kRowHeader << "\n";
    for (const ExperimentRow& row : rows) {
        out << row.method << ',' << fmt_opt(row.n) << ',' << fmt_opt(row.k_candidates) << ','
            << fmt_opt(row.n1) << ',' << fmt_opt(row.n2) << ',' << fmt_opt(row.seed) << ','
            << fmt_real(row.objective) << ',' << fmt_opt(row.true_objective) << ','
            << fmt_opt(row.std_error) << ',' << fmt_opt(row.n_distinct) << ','
            << fmt_real(row.wall_time_ms) << "\n";
    }
    return out.str();
}

namespace {

struct GroupStats {
    std::string method;
    std::optional<long long> n, k_candidates, n1, n2;
    long long count = 0;
    double obj_sum = 0.0, obj_min = 0.0, obj_max = 0.0;
    bool all_true = true;
    double true_sum = 0.0, true_min = 0.0, true_max = 0.0;
};

}  // namespace

std::string aggregate_to_csv(const std::vector<ExperimentRow>& rows) {
    std::vector<GroupStats> groups;
    for (const ExperimentRow& row : rows) {
        GroupStats* g = nullptr;
        for (GroupStats& cand : groups) {
            if (cand.method == row.method && cand.n == row.n &&
                cand.k_candidates == row.k_candidates && cand.n1 == row.n1 && cand.n2 == row.n2) {
                g = &cand;
                break;
            }
        }
        if (!g) {
            groups.push_back({row.method, row.n, row.k_candidates, row.n1, row.n2,
                              0, 0.0, row.objective, row.objective, true, 0.0,
                              row.true_objective.value_or(0.0), row.true_objective.value_or(0.0)});
            g = &groups.back();
        }
        ++g->count;
        g->obj_sum += row.objective;
        g->obj_min = std::min(g->obj_min, row.objective);
        g->obj_max = std::max(g->obj_max, row.objective);
        if (row.true_objective) {
            if (g->count == 1) {
                g->true_min = *row.true_objective;
                g->true_max = *row.true_objective;
            }
            g->true_sum += *row.true_objective;
            g->true_min = std::min(g->true_min, *row.true_objective);
            g->true_max = std::max(g->true_max, *row.true_objective);
        } else {
            g->all_true = false;
        }
    }

    std::ostringstream out;
    out << kAggregateHeader << "\n";
    for (const GroupStats& g : groups) {
        out << g.method << ',' << fmt_opt(g.n) << ',' << fmt_opt(g.k_candidates) << ','
            << fmt_opt(g.n1) << ',' << fmt_opt(g.n2) << ',' << g.count << ','
            << fmt_real(g.obj_sum / static_cast<double>(g.count)) << ',' << fmt_real(g.obj_min)
            << ',' << fmt_real(g.obj_max) << ',';
        if (g.all_true)
            out << fmt_real(g.true_sum / static_cast<double>(g.count)) << ','
                << fmt_real(g.true_min) << ',' << fmt_real(g.true_max);
        else
            out << ",,";
        out << "\n";
    }
    return out.str();
}

std::vector<ExperimentRow> run_experiment_files(const ExperimentPlan& plan) {
    const NetworkSpec net = load_network(plan.network_path);
    const std::vector<ExperimentRow> rows = run_experiment(plan, net);

    const std::string agg_path = plan.aggregate_output_path.empty()
                                     ? default_aggregate_path(plan.output_path)
                                     : plan.aggregate_output_path;
    std::ofstream out(plan.output_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + plan.output_path + "' for writing");
    out << rows_to_csv(rows);
    if (!out.flush()) throw IoError("write failure on '" + plan.output_path + "'");

    std::ofstream agg(agg_path, std::ios::binary | std::ios::trunc);
    if (!agg) throw IoError("cannot open '" + agg_path + "' for writing");
    agg << aggregate_to_csv(rows);
    if (!agg.flush()) throw IoError("write failure on '" + agg_path + "'");
    return rows;
}

}  // namespace stochflow
