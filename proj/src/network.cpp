#include "stochflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "stochflow/errors.hpp"
#include "stochflow/rng.hpp"

namespace stochflow {

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Producer: return "producer";
        case NodeKind::Consumer: return "consumer";
        case NodeKind::Regular: return "regular";
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_string(const std::string& s) {
    if (s == "producer") return NodeKind::Producer;
    if (s == "consumer") return NodeKind::Consumer;
    if (s == "regular") return NodeKind::Regular;
    return std::nullopt;
}

std::vector<int> NetworkSpec::producer_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].kind == NodeKind::Producer) out.push_back(i);
    return out;
}

std::vector<int> NetworkSpec::consumer_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].kind == NodeKind::Consumer) out.push_back(i);
    return out;
}

std::vector<int> NetworkSpec::regular_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].kind == NodeKind::Regular) out.push_back(i);
    return out;
}

int NetworkSpec::node_index(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (nodes[i].id == id) return i;
    return -1;
}

std::vector<int> NetworkSpec::unreliable_edge_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        if (edges[i].reliability < 1.0) out.push_back(i);
    return out;
}

std::string FailureScenario::bit_string() const {
    std::string s(static_cast<size_t>(k), '0');
    for (int i = 0; i < k; ++i)
        if (operating(i)) s[static_cast<size_t>(i)] = '1';
    return s;
}

FailureScenario FailureScenario::from_bit_string(const std::string& s, double probability) {
    if (s.size() > static_cast<size_t>(kMaxScenarioBits))
        throw std::invalid_argument("scenario bit string longer than " +
                                    std::to_string(kMaxScenarioBits) + " bits");
    FailureScenario scen;
    scen.k = static_cast<int>(s.size());
    scen.probability = probability;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            scen.bits |= (1ull << i);
        else if (s[i] != '0')
            throw std::invalid_argument("scenario bit string must contain only '0'/'1'");
    }
    return scen;
}

ScenarioSet ScenarioSet::bernoulli(const NetworkSpec& net) {
    ScenarioSet set;
    set.mode = ScenarioMode::IndependentBernoulli;
    set.k = static_cast<int>(net.unreliable_edge_indices().size());
    return set;
}

ScenarioSet ScenarioSet::explicit_set(int k, std::vector<FailureScenario> scenarios) {
    ScenarioSet set;
    set.mode = ScenarioMode::Explicit;
    set.k = k;
    set.scenarios = std::move(scenarios);
    for (const auto& s : set.scenarios)
        if (s.k != k) throw std::invalid_argument("scenario bit-length differs from set k");
    return set;
}

ValidationReport validate_network(const NetworkSpec& net) {
    ValidationReport report;
    auto violation = [&](const std::string& msg) { report.violations.push_back(msg); };

    std::unordered_map<std::string, int> index;
    int producers = 0;
    int consumers = 0;
    for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
        const NodeSpec& node = net.nodes[i];
        if (node.id.empty()) violation("node " + std::to_string(i) + ": empty id");
        auto [it, inserted] = index.emplace(node.id, i);
        if (!inserted) violation("duplicate node id '" + node.id + "'");
        if (std::isnan(node.capacity) || node.capacity < 0.0)
            violation("node '" + node.id + "': capacity must be >= 0");
        const bool priced = node.kind != NodeKind::Regular;
        if (priced) {
            if (!node.price_stage1.has_value())
                violation("node '" + node.id + "': " + to_string(node.kind) +
                          " requires price_stage1");
            if (!node.price_stage2.has_value())
                violation("node '" + node.id + "': " + to_string(node.kind) +
                          " requires price_stage2");
            if (node.kind == NodeKind::Producer) ++producers;
            else ++consumers;
        } else {
            if (node.price_stage1.has_value() || node.price_stage2.has_value())
                violation("node '" + node.id + "': regular nodes carry no prices");
        }
    }
    if (producers == 0) violation("network has no producer node");
    if (consumers == 0) violation("network has no consumer node");

    for (int i = 0; i < static_cast<int>(net.edges.size()); ++i) {
        const EdgeSpec& edge = net.edges[i];
        const std::string label = "edge " + std::to_string(i) + " (" + edge.from + " -> " + edge.to + ")";
        if (!index.count(edge.from)) violation(label + ": unknown endpoint '" + edge.from + "'");
        if (!index.count(edge.to)) violation(label + ": unknown endpoint '" + edge.to + "'");
        if (edge.from == edge.to) violation(label + ": self-loop");
        if (std::isnan(edge.capacity) || edge.capacity < 0.0)
            violation(label + ": capacity must be >= 0");
        if (std::isnan(edge.reliability) || edge.reliability < 0.0 || edge.reliability > 1.0)
            violation(label + ": reliability out of [0,1]");
    }

    // Price relations that admit riskless arbitrage: buying x and never
    // taking delivery nets price_stage2 - price_stage1 per unit in every
    // scenario; selling a contract and never delivering nets
    // price_stage1 - price_stage2. Well-defined mathematically, so a warning.
    for (const NodeSpec& node : net.nodes) {
        if (!node.price_stage1 || !node.price_stage2) continue;
        if (node.kind == NodeKind::Producer && *node.price_stage2 > *node.price_stage1)
            report.warnings.push_back("producer '" + node.id +
                                      "': return price exceeds purchase price (riskless arbitrage)");
        if (node.kind == NodeKind::Consumer && *node.price_stage2 < *node.price_stage1)
            report.warnings.push_back("consumer '" + node.id +
                                      "': return price below sale price (riskless arbitrage)");
    }

    if (static_cast<int>(net.unreliable_edge_indices().size()) > kMaxScenarioBits)
        violation("more than " + std::to_string(kMaxScenarioBits) + " unreliable edges unsupported");

    return report;
}

void require_valid(const NetworkSpec& net) {
    ValidationReport report = validate_network(net);
    if (report.ok()) return;
    std::ostringstream oss;
    oss << "invalid network:";
    for (const auto& v : report.violations) oss << "\n  " << v;
    throw std::invalid_argument(oss.str());
}

ScenarioSet enumerate_scenarios(const NetworkSpec& net, int cap) {
    const std::vector<int> unreliable = net.unreliable_edge_indices();
    const int k = static_cast<int>(unreliable.size());
    if (k > cap)
        throw CapExceededError("cannot enumerate 2^" + std::to_string(k) +
                               " scenarios (cap 2^" + std::to_string(cap) + ")");

    std::vector<double> up(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) up[static_cast<size_t>(i)] = net.edges[static_cast<size_t>(unreliable[static_cast<size_t>(i)])].reliability;

    ScenarioSet set;
    set.mode = ScenarioMode::Explicit;
    set.k = k;
    const std::uint64_t count = 1ull << k;
    set.scenarios.reserve(static_cast<size_t>(count));
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        double p = 1.0;
        for (int i = 0; i < k; ++i)
            p *= ((mask >> i) & 1ull) ? up[static_cast<size_t>(i)] : 1.0 - up[static_cast<size_t>(i)];
        if (p == 0.0) continue;  // impossible realization, not part of the support
        set.scenarios.push_back(FailureScenario{mask, k, p});
    }
    return set;
}

FailureScenario sample_scenario(const NetworkSpec& net, std::mt19937_64& gen) {
    const std::vector<int> unreliable = net.unreliable_edge_indices();
    const int k = static_cast<int>(unreliable.size());
    if (k > kMaxScenarioBits)
        throw std::invalid_argument("more than " + std::to_string(kMaxScenarioBits) +
                                    " unreliable edges unsupported");
    FailureScenario scen;
    scen.k = k;
    scen.probability = 1.0;
    for (int i = 0; i < k; ++i) {
        const double p = net.edges[static_cast<size_t>(unreliable[static_cast<size_t>(i)])].reliability;
        if (uniform01(gen) < p) scen.bits |= (1ull << i);
    }
    return scen;
}

ScenarioSet compress_sample(const std::vector<FailureScenario>& draws) {
    if (draws.empty()) throw std::invalid_argument("compress_sample: empty sample");
    const int k = draws.front().k;

    ScenarioSet set;
    set.mode = ScenarioMode::Explicit;
    set.k = k;
    std::unordered_map<std::uint64_t, size_t> slot;
    std::vector<std::uint64_t> counts;
    for (const FailureScenario& d : draws) {
        if (d.k != k) throw std::invalid_argument("compress_sample: mixed bit-lengths");
        auto [it, inserted] = slot.emplace(d.bits, set.scenarios.size());
        if (inserted) {
            set.scenarios.push_back(FailureScenario{d.bits, k, 0.0});
            counts.push_back(1);
        } else {
            ++counts[it->second];
        }
    }
    const double n = static_cast<double>(draws.size());
    for (size_t i = 0; i < set.scenarios.size(); ++i)
        set.scenarios[i].probability = static_cast<double>(counts[i]) / n;
    return set;
}

namespace {

struct PairHash {
    size_t operator()(const std::pair<int, int>& p) const {
        return std::hash<long long>()((static_cast<long long>(p.first) << 32) ^ p.second);
    }
};

}  // namespace

NetworkSpec generate_random_network(const NetworkGenParams& params, std::uint64_t seed) {
    if (params.n_producers < 1 || params.n_consumers < 1)
        throw std::invalid_argument("need at least one producer and one consumer");
    if (params.n_regular < 0 || params.n_edges < 1)
        throw std::invalid_argument("n_regular must be >= 0 and n_edges >= 1");
    if (params.n_unreliable < 0 || params.n_unreliable > params.n_edges)
        throw std::invalid_argument("n_unreliable must lie in [0, n_edges]");

    std::mt19937_64 gen(seed);
    NetworkSpec net;

    auto draw_range = [&](std::pair<double, double> range) {
        if (range.second < range.first)
            throw std::invalid_argument("range with hi < lo");
        return uniform_in(gen, range.first, range.second);
    };

    for (int p = 0; p < params.n_producers; ++p) {
        NodeSpec node;
        node.id = "P" + std::to_string(p);
        node.kind = NodeKind::Producer;
        node.capacity = draw_range(params.capacity_range);
        node.price_stage1 = draw_range(params.producer_price1_range);
        node.price_stage2 = draw_range(params.producer_price2_range);
        net.nodes.push_back(std::move(node));
    }
    for (int r = 0; r < params.n_regular; ++r) {
        NodeSpec node;
        node.id = "R" + std::to_string(r);
        node.kind = NodeKind::Regular;
        node.capacity = draw_range(params.capacity_range);
        net.nodes.push_back(std::move(node));
    }
    for (int c = 0; c < params.n_consumers; ++c) {
        NodeSpec node;
        node.id = "C" + std::to_string(c);
        node.kind = NodeKind::Consumer;
        node.capacity = draw_range(params.capacity_range);
        node.price_stage1 = draw_range(params.consumer_price1_range);
        node.price_stage2 = draw_range(params.consumer_price2_range);
        net.nodes.push_back(std::move(node));
    }

    const int np = params.n_producers, nr = params.n_regular, nc = params.n_consumers;
    auto producer = [&](int i) { return i; };
    auto regular = [&](int i) { return np + i; };
    auto consumer = [&](int i) { return np + nr + i; };

    // Skeleton first: every regular node on a producer->...->consumer path,
    // every producer with an out-edge, every consumer with an in-edge.
    std::vector<std::pair<int, int>> chosen;
    std::unordered_set<std::pair<int, int>, PairHash> used;
    auto add_edge = [&](int from, int to) {
        if (used.emplace(from, to).second) chosen.emplace_back(from, to);
    };

    std::vector<bool> producer_covered(static_cast<size_t>(np), false);
    std::vector<bool> consumer_covered(static_cast<size_t>(nc), false);
    if (nr > 0) {
        for (int r = 0; r < nr; ++r) {
            const int p = static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(np)));
            const int c = static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(nc)));
            add_edge(producer(p), regular(r));
            add_edge(regular(r), consumer(c));
            producer_covered[static_cast<size_t>(p)] = true;
            consumer_covered[static_cast<size_t>(c)] = true;
        }
        for (int p = 0; p < np; ++p)
            if (!producer_covered[static_cast<size_t>(p)])
                add_edge(producer(p), regular(static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(nr)))));
        for (int c = 0; c < nc; ++c)
            if (!consumer_covered[static_cast<size_t>(c)])
                add_edge(regular(static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(nr)))), consumer(c));
    } else {
        for (int p = 0; p < np; ++p) {
            const int c = static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(nc)));
            add_edge(producer(p), consumer(c));
            consumer_covered[static_cast<size_t>(c)] = true;
        }
        for (int c = 0; c < nc; ++c)
            if (!consumer_covered[static_cast<size_t>(c)])
                add_edge(producer(static_cast<int>(uniform_below(gen, static_cast<std::uint64_t>(np)))), consumer(c));
    }

    if (static_cast<int>(chosen.size()) > params.n_edges)
        throw std::invalid_argument("n_edges too small: layered connectivity needs at least " +
                                    std::to_string(chosen.size()) + " edges");

    // Remaining forward candidates, shuffled deterministically.
    std::vector<std::pair<int, int>> candidates;
    if (nr > 0) {
        for (int p = 0; p < np; ++p)
            for (int r = 0; r < nr; ++r) candidates.emplace_back(producer(p), regular(r));
        for (int r1 = 0; r1 < nr; ++r1)
            for (int r2 = r1 + 1; r2 < nr; ++r2) candidates.emplace_back(regular(r1), regular(r2));
        for (int r = 0; r < nr; ++r)
            for (int c = 0; c < nc; ++c) candidates.emplace_back(regular(r), consumer(c));
    } else {
        for (int p = 0; p < np; ++p)
            for (int c = 0; c < nc; ++c) candidates.emplace_back(producer(p), consumer(c));
    }
    for (size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[uniform_below(gen, i)]);
    for (const auto& cand : candidates) {
        if (static_cast<int>(chosen.size()) >= params.n_edges) break;
        add_edge(cand.first, cand.second);
    }
    if (static_cast<int>(chosen.size()) < params.n_edges)
        throw std::invalid_argument("n_edges too large: only " + std::to_string(chosen.size()) +
                                    " distinct layered edges available");

    for (const auto& [from, to] : chosen) {
        EdgeSpec edge;
        edge.from = net.nodes[static_cast<size_t>(from)].id;
        edge.to = net.nodes[static_cast<size_t>(to)].id;
        edge.capacity = draw_range(params.capacity_range);
        edge.reliability = 1.0;
        net.edges.push_back(std::move(edge));
    }

    // Unreliable subset: deterministic partial shuffle of edge indices.
    std::vector<int> order(net.edges.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[uniform_below(gen, i)]);
    for (int u = 0; u < params.n_unreliable; ++u) {
        double r = draw_range(params.reliability_range);
        if (r >= 1.0) r = std::nextafter(1.0, 0.0);
        net.edges[static_cast<size_t>(order[static_cast<size_t>(u)])].reliability = r;
    }

    require_valid(net);
    return net;
}

}  // namespace stochflow
