#include "stochflow/two_stage.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "stochflow/errors.hpp"

namespace stochflow {

namespace {

constexpr double kAllocationTol = 1e-9;

// Neumaier-compensated running sum; operands are always added in a fixed
// order so results are bit-stable.
class Accumulator {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double clamped_amount(const Allocation& x, const NodeSpec& node) {
    const double raw = node.kind == NodeKind::Producer ? x.producer(node.id) : x.consumer(node.id);
    return std::clamp(raw, 0.0, node.capacity);
}

// Per-node signed flow incidence: +1 for edges leaving the node, -1 for
// edges entering it, keyed by flow column.
std::vector<std::vector<std::pair<int, double>>> outflow_terms(const NetworkSpec& net,
                                                               int flow_col_base) {
    std::vector<std::vector<std::pair<int, double>>> terms(net.nodes.size());
    for (size_t e = 0; e < net.edges.size(); ++e) {
        const int from = net.node_index(net.edges[e].from);
        const int to = net.node_index(net.edges[e].to);
        const int col = flow_col_base + static_cast<int>(e);
        terms[static_cast<size_t>(from)].emplace_back(col, 1.0);
        terms[static_cast<size_t>(to)].emplace_back(col, -1.0);
    }
    return terms;
}

// Inflow-only terms, used for regular-node throughput caps.
std::vector<std::vector<std::pair<int, double>>> inflow_terms(const NetworkSpec& net,
                                                              int flow_col_base) {
    std::vector<std::vector<std::pair<int, double>>> terms(net.nodes.size());
    for (size_t e = 0; e < net.edges.size(); ++e) {
        const int to = net.node_index(net.edges[e].to);
        terms[static_cast<size_t>(to)].emplace_back(flow_col_base + static_cast<int>(e), 1.0);
    }
    return terms;
}

double flow_upper(const EdgeSpec& edge, int bit, const FailureScenario& s) {
    if (bit < 0) return edge.capacity;  // reliable edge
    return s.operating(bit) ? edge.capacity : 0.0;
}

// Bit position per edge index, -1 for reliable edges.
std::vector<int> edge_bit_positions(const NetworkSpec& net) {
    std::vector<int> bit(net.edges.size(), -1);
    const std::vector<int> unreliable = net.unreliable_edge_indices();
    for (size_t b = 0; b < unreliable.size(); ++b)
        bit[static_cast<size_t>(unreliable[b])] = static_cast<int>(b);
    return bit;
}

ScenarioSet resolve_explicit(const NetworkSpec& net, const ScenarioSet& scen, int cap) {
    const int k_net = static_cast<int>(net.unreliable_edge_indices().size());
    if (scen.is_explicit()) {
        if (scen.k != k_net)
            throw std::invalid_argument("scenario set has k=" + std::to_string(scen.k) +
                                        " but the network has " + std::to_string(k_net) +
                                        " unreliable edges");
        return scen;
    }
    return enumerate_scenarios(net, cap);
}

}  // namespace

void require_valid_allocation(const NetworkSpec& net, const Allocation& x) {
    for (const auto& [id, amount] : x.producer_amounts) {
        const int idx = net.node_index(id);
        if (idx < 0 || net.nodes[static_cast<size_t>(idx)].kind != NodeKind::Producer)
            throw std::invalid_argument("allocation names unknown producer '" + id + "'");
        const double cap = net.nodes[static_cast<size_t>(idx)].capacity;
        if (!(amount >= -kAllocationTol) || amount > cap + kAllocationTol)
            throw std::invalid_argument("purchase from '" + id + "' outside [0, capacity]");
    }
    for (const auto& [id, amount] : x.consumer_amounts) {
        const int idx = net.node_index(id);
        if (idx < 0 || net.nodes[static_cast<size_t>(idx)].kind != NodeKind::Consumer)
            throw std::invalid_argument("allocation names unknown consumer '" + id + "'");
        const double cap = net.nodes[static_cast<size_t>(idx)].capacity;
        if (!(amount >= -kAllocationTol) || amount > cap + kAllocationTol)
            throw std::invalid_argument("contract with '" + id + "' outside [0, capacity]");
    }
}

double first_stage_value(const NetworkSpec& net, const Allocation& x) {
    require_valid_allocation(net, x);
    Accumulator acc;
    for (const NodeSpec& node : net.nodes) {
        if (node.kind == NodeKind::Consumer)
            acc.add(node.price_stage1.value_or(0.0) * clamped_amount(x, node));
        else if (node.kind == NodeKind::Producer)
            acc.add(-node.price_stage1.value_or(0.0) * clamped_amount(x, node));
    }
    return acc.value();
}

LinearProgram build_recourse_lp(const NetworkSpec& net, const Allocation& x,
                                const FailureScenario& s) {
    require_valid_allocation(net, x);
    const std::vector<int> bit = edge_bit_positions(net);
    const int k_net = static_cast<int>(net.unreliable_edge_indices().size());
    if (s.k != k_net)
        throw std::invalid_argument("scenario bit length " + std::to_string(s.k) +
                                    " does not match the network's " + std::to_string(k_net));

    LinearProgram lp;
    lp.sense = Sense::Maximize;

    for (size_t e = 0; e < net.edges.size(); ++e)
        lp.add_variable(0.0, flow_upper(net.edges[e], bit[e], s), 0.0,
                        "flow_" + std::to_string(e));

    // Undelivered units settle at stage-2 prices: producers refund unreceived
    // purchases, consumers charge penalties for unmet contracts. That fixed
    // part of the objective lands in objective_constant; delivering a unit
    // claws it back.
    Accumulator constant;
    std::vector<std::vector<std::pair<int, double>>> node_terms = outflow_terms(net, 0);
    std::vector<std::vector<std::pair<int, double>>> in_terms = inflow_terms(net, 0);

    std::vector<int> delivered_col(net.nodes.size(), -1);
    for (const int idx : net.producer_indices()) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        const double amount = clamped_amount(x, node);
        const double price2 = node.price_stage2.value_or(0.0);
        delivered_col[static_cast<size_t>(idx)] = lp.add_variable(0.0, amount, -price2, "taken_" + node.id);
        constant.add(amount * price2);
    }
    for (const int idx : net.consumer_indices()) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        const double amount = clamped_amount(x, node);
        const double price2 = node.price_stage2.value_or(0.0);
        delivered_col[static_cast<size_t>(idx)] = lp.add_variable(0.0, amount, price2, "delivered_" + node.id);
        constant.add(-amount * price2);
    }
    lp.objective_constant = constant.value();

    for (size_t v = 0; v < net.nodes.size(); ++v) {
        const NodeSpec& node = net.nodes[v];
        ConstraintRow row;
        switch (node.kind) {
            case NodeKind::Producer:
                // net outflow equals the amount actually taken
                row.coeffs = node_terms[v];
                row.coeffs.emplace_back(delivered_col[v], -1.0);
                row.relation = Relation::Equal;
                break;
            case NodeKind::Consumer:
                // net inflow equals the amount actually delivered
                row.coeffs = node_terms[v];
                for (auto& term : row.coeffs) term.second = -term.second;
                row.coeffs.emplace_back(delivered_col[v], -1.0);
                row.relation = Relation::Equal;
                break;
            case NodeKind::Regular:
                row.coeffs = node_terms[v];
                row.relation = Relation::Equal;
                break;
        }
        row.rhs = 0.0;
        lp.add_constraint(std::move(row));
        if (node.kind == NodeKind::Regular && std::isfinite(node.capacity)) {
            ConstraintRow cap_row;
            cap_row.coeffs = in_terms[v];
            cap_row.relation = Relation::LessEqual;
            cap_row.rhs = node.capacity;
            lp.add_constraint(std::move(cap_row));
        }
    }
    return lp;
}

double recourse_value(const NetworkSpec& net, const Allocation& x, const FailureScenario& s,
                      const SolveOptions& options) {
    const LinearProgram lp = build_recourse_lp(net, x, s);
    const SolveReport report = solve_lp(lp, options);
    if (report.status != SolveStatus::Optimal)
        throw SolverError("recourse program reported " + to_string(report.status) +
                          "; it must always have a bounded optimum");
    return report.objective_value;
}

RecourseSolution solve_recourse(const NetworkSpec& net, const Allocation& x,
                                const FailureScenario& s, const SolveOptions& options) {
    const LinearProgram lp = build_recourse_lp(net, x, s);
    const SolveReport report = solve_lp(lp, options);
    if (report.status != SolveStatus::Optimal)
        throw SolverError("recourse program reported " + to_string(report.status) +
                          "; it must always have a bounded optimum");

    RecourseSolution sol;
    sol.value = report.objective_value;
    sol.decision.edge_flows.assign(report.primal.begin(),
                                   report.primal.begin() + static_cast<long>(net.edges.size()));
    int col = static_cast<int>(net.edges.size());
    for (const int idx : net.producer_indices())
        sol.decision.delivered_in[net.nodes[static_cast<size_t>(idx)].id] =
            report.primal[static_cast<size_t>(col++)];
    for (const int idx : net.consumer_indices())
        sol.decision.delivered_out[net.nodes[static_cast<size_t>(idx)].id] =
            report.primal[static_cast<size_t>(col++)];
    return sol;
}

EvaluationResult exact_evaluate(const NetworkSpec& net, const Allocation& x,
                                const ScenarioSet& scen, bool keep_per_scenario,
                                int enumeration_cap, const SolveOptions& options) {
    const ScenarioSet full = resolve_explicit(net, scen, enumeration_cap);
    const double f1 = first_stage_value(net, x);

    EvaluationResult result;
    result.n_samples = static_cast<long long>(full.scenarios.size());
    Accumulator expected;
    for (const FailureScenario& s : full.scenarios) {
        const double v = recourse_value(net, x, s, options);
        expected.add(s.probability * v);
        if (keep_per_scenario) result.per_scenario_values.push_back(v);
    }
    result.estimate = f1 + expected.value();
    result.std_error = 0.0;
    return result;
}

EvaluationResult mc_evaluate(const NetworkSpec& net, const Allocation& x, long long n_samples,
                             std::uint64_t seed, bool keep_per_scenario,
                             const SolveOptions& options) {
    if (n_samples < 1) throw std::invalid_argument("mc_evaluate needs n_samples >= 1");
    std::mt19937_64 gen(seed);
    std::vector<FailureScenario> draws;
    draws.reserve(static_cast<size_t>(n_samples));
    for (long long i = 0; i < n_samples; ++i) draws.push_back(sample_scenario(net, gen));
    const ScenarioSet sample = compress_sample(draws);

    const double f1 = first_stage_value(net, x);
    const double n_real = static_cast<double>(n_samples);

    EvaluationResult result;
    result.n_samples = n_samples;
    std::vector<double> values;
    values.reserve(sample.scenarios.size());
    Accumulator expected;
    for (const FailureScenario& s : sample.scenarios) {
        const double v = recourse_value(net, x, s, options);
        values.push_back(v);
        expected.add(s.probability * v);
        if (keep_per_scenario) result.per_scenario_values.push_back(v);
    }
    result.estimate = f1 + expected.value();

    if (n_samples > 1) {
        Accumulator ss;
        for (size_t i = 0; i < values.size(); ++i) {
            const double multiplicity =
                std::llround(sample.scenarios[i].probability * n_real);
            const double dev = (f1 + values[i]) - result.estimate;
            ss.add(multiplicity * dev * dev);
        }
        result.std_error = std::sqrt(ss.value() / (n_real - 1.0) / n_real);
    }
    return result;
}

Allocation DetEquivProgram::extract_allocation(const NetworkSpec& net,
                                               const std::vector<double>& primal) const {
    Allocation x;
    int col = 0;
    for (const int idx : net.producer_indices()) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        x.producer_amounts[node.id] = std::clamp(primal[static_cast<size_t>(col++)], 0.0, node.capacity);
    }
    for (const int idx : net.consumer_indices()) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        x.consumer_amounts[node.id] = std::clamp(primal[static_cast<size_t>(col++)], 0.0, node.capacity);
    }
    return x;
}

RecourseDecision DetEquivProgram::extract_recourse(const NetworkSpec& net,
                                                   const std::vector<double>& primal,
                                                   int scenario_index) const {
    if (scenario_index < 0 || scenario_index >= n_scenarios)
        throw std::invalid_argument("scenario index out of range");
    RecourseDecision d;
    int col = scenario_cols_begin + scenario_index * cols_per_scenario;
    for (int e = 0; e < n_edges; ++e) d.edge_flows.push_back(primal[static_cast<size_t>(col++)]);
    for (const int idx : net.producer_indices())
        d.delivered_in[net.nodes[static_cast<size_t>(idx)].id] = primal[static_cast<size_t>(col++)];
    for (const int idx : net.consumer_indices())
        d.delivered_out[net.nodes[static_cast<size_t>(idx)].id] = primal[static_cast<size_t>(col++)];
    return d;
}

DetEquivProgram build_deterministic_equivalent(const NetworkSpec& net, const ScenarioSet& scen,
                                               bool with_names) {
    if (!scen.is_explicit())
        throw std::invalid_argument("deterministic equivalent needs an explicit scenario set");
    require_valid(net);
    const int k_net = static_cast<int>(net.unreliable_edge_indices().size());
    if (scen.k != k_net)
        throw std::invalid_argument("scenario set k does not match the network");

    const std::vector<int> producers = net.producer_indices();
    const std::vector<int> consumers = net.consumer_indices();
    const std::vector<int> bit = edge_bit_positions(net);
    const int n_edges = static_cast<int>(net.edges.size());

    DetEquivProgram prog;
    prog.n_producers = static_cast<int>(producers.size());
    prog.n_consumers = static_cast<int>(consumers.size());
    prog.n_edges = n_edges;
    prog.n_scenarios = static_cast<int>(scen.scenarios.size());
    prog.scenario_cols_begin = prog.n_producers + prog.n_consumers;
    prog.cols_per_scenario = n_edges + prog.n_producers + prog.n_consumers;

    LinearProgram& lp = prog.lp;
    lp.sense = Sense::Maximize;

    Accumulator prob_sum;
    for (const FailureScenario& s : scen.scenarios) prob_sum.add(s.probability);
    const double total_prob = prob_sum.value();

    // First-stage columns. The stage-2 settlement contributes the
    // probability-weighted refund/penalty terms to the same coefficients.
    for (const int idx : producers) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        lp.add_variable(0.0, node.capacity,
                        -node.price_stage1.value_or(0.0) +
                            total_prob * node.price_stage2.value_or(0.0),
                        with_names ? "buy_" + node.id : std::string{});
    }
    for (const int idx : consumers) {
        const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
        lp.add_variable(0.0, node.capacity,
                        node.price_stage1.value_or(0.0) -
                            total_prob * node.price_stage2.value_or(0.0),
                        with_names ? "sell_" + node.id : std::string{});
    }

    const std::vector<std::vector<std::pair<int, double>>> node_terms = outflow_terms(net, 0);
    const std::vector<std::vector<std::pair<int, double>>> in_terms = inflow_terms(net, 0);

    for (int t = 0; t < prog.n_scenarios; ++t) {
        const FailureScenario& s = scen.scenarios[static_cast<size_t>(t)];
        const double p = s.probability;
        const int flow_base = prog.scenario_cols_begin + t * prog.cols_per_scenario;
        const std::string tag = with_names ? "_s" + std::to_string(t) : std::string{};

        for (int e = 0; e < n_edges; ++e)
            lp.add_variable(0.0, flow_upper(net.edges[static_cast<size_t>(e)], bit[static_cast<size_t>(e)], s),
                            0.0, with_names ? "flow" + tag + "_e" + std::to_string(e) : std::string{});

        std::vector<int> delivered_col(net.nodes.size(), -1);
        int first_stage_col = 0;
        for (const int idx : producers) {
            const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
            const int col = lp.add_variable(0.0, kInfinity, -p * node.price_stage2.value_or(0.0),
                                            with_names ? "taken" + tag + "_" + node.id : std::string{});
            delivered_col[static_cast<size_t>(idx)] = col;
            // coupling: cannot take more than was bought
            lp.add_constraint({{{col, 1.0}, {first_stage_col, -1.0}}, Relation::LessEqual, 0.0});
            ++first_stage_col;
        }
        for (const int idx : consumers) {
            const NodeSpec& node = net.nodes[static_cast<size_t>(idx)];
            const int col = lp.add_variable(0.0, kInfinity, p * node.price_stage2.value_or(0.0),
                                            with_names ? "delivered" + tag + "_" + node.id : std::string{});
            delivered_col[static_cast<size_t>(idx)] = col;
            lp.add_constraint({{{col, 1.0}, {first_stage_col, -1.0}}, Relation::LessEqual, 0.0});
            ++first_stage_col;
        }

        for (size_t v = 0; v < net.nodes.size(); ++v) {
            const NodeSpec& node = net.nodes[v];
            ConstraintRow row;
            switch (node.kind) {
                case NodeKind::Producer:
                    row.coeffs = node_terms[v];
                    for (auto& term : row.coeffs) term.first += flow_base;
                    row.coeffs.emplace_back(delivered_col[v], -1.0);
                    row.relation = Relation::Equal;
                    break;
                case NodeKind::Consumer:
                    row.coeffs = node_terms[v];
                    for (auto& term : row.coeffs) {
                        term.first += flow_base;
                        term.second = -term.second;
                    }
                    row.coeffs.emplace_back(delivered_col[v], -1.0);
                    row.relation = Relation::Equal;
                    break;
                case NodeKind::Regular:
                    row.coeffs = node_terms[v];
                    for (auto& term : row.coeffs) term.first += flow_base;
                    row.relation = Relation::Equal;
                    break;
            }
            row.rhs = 0.0;
            lp.add_constraint(std::move(row));
            if (node.kind == NodeKind::Regular && std::isfinite(node.capacity)) {
                ConstraintRow cap_row;
                cap_row.coeffs = in_terms[v];
                for (auto& term : cap_row.coeffs) term.first += flow_base;
                cap_row.relation = Relation::LessEqual;
                cap_row.rhs = node.capacity;
                lp.add_constraint(std::move(cap_row));
            }
        }
    }
    return prog;
}

ExactSolution exact_optimize(const NetworkSpec& net, const ScenarioSet& scen,
                             int enumeration_cap, const SolveOptions& options) {
    require_valid(net);
    const ScenarioSet full = resolve_explicit(net, scen, enumeration_cap);

    // Size the merged program before building anything.
    const std::vector<int> producers = net.producer_indices();
    const std::vector<int> consumers = net.consumer_indices();
    long long capped_regular = 0;
    long long regular = 0;
    for (const NodeSpec& node : net.nodes)
        if (node.kind == NodeKind::Regular) {
            ++regular;
            if (std::isfinite(node.capacity)) ++capped_regular;
        }
    const long long s_count = static_cast<long long>(full.scenarios.size());
    const long long p = static_cast<long long>(producers.size());
    const long long c = static_cast<long long>(consumers.size());
    const long long rows = s_count * (2 * (p + c) + regular + capped_regular);
    const long long cols = p + c + s_count * (static_cast<long long>(net.edges.size()) + p + c);
    if (rows > options.max_rows || cols > options.max_cols)
        throw ProblemTooLargeError(
            "deterministic equivalent would need " + std::to_string(rows) + " rows and " +
            std::to_string(cols) + " columns over " + std::to_string(s_count) +
            " scenarios, beyond the configured solver limits (" + std::to_string(options.max_rows) +
            " rows, " + std::to_string(options.max_cols) + " columns)");

    const DetEquivProgram prog = build_deterministic_equivalent(net, full);
    const SolveReport report = solve_lp(prog.lp, options);
    if (report.status != SolveStatus::Optimal)
        throw SolverError("deterministic equivalent reported " + to_string(report.status) +
                          "; the merged program always has a bounded optimum");

    ExactSolution sol;
    sol.allocation = prog.extract_allocation(net, report.primal);
    sol.objective = report.objective_value;
    sol.n_scenarios = s_count;
    return sol;
}

}  // namespace stochflow
