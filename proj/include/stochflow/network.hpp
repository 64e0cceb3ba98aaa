#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace stochflow {

enum class NodeKind { Producer, Consumer, Regular };

std::string to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(const std::string& s);

// A node of the transportation network. Producers and consumers carry a
// first-stage contract price and a second-stage return price per unit;
// regular nodes carry neither. Capacity is the purchase/sale limit for
// producers/consumers and the throughput cap for regular nodes (infinity
// means uncapped, the default for regular nodes).
struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::Regular;
    double capacity = std::numeric_limits<double>::infinity();
    std::optional<double> price_stage1;
    std::optional<double> price_stage2;
};

// A directed transport link. reliability is the probability the link
// operates in a failure scenario; 1.0 marks a reliable link.
struct EdgeSpec {
    std::string from;
    std::string to;
    double capacity = 0.0;
    double reliability = 1.0;
};

// Hard limit on the scenario bit-vector length (bits live in a 64-bit mask).
inline constexpr int kMaxScenarioBits = 63;

// Default cap on explicit enumeration, ~10^6 scenarios.
inline constexpr int kDefaultEnumerationCap = 20;

struct NetworkSpec {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;

    // Indices into `nodes` by role, in declaration order.
    std::vector<int> producer_indices() const;
    std::vector<int> consumer_indices() const;
    std::vector<int> regular_indices() const;

    // Index into `nodes` for an id, or -1.
    int node_index(const std::string& id) const;

    // Edges with reliability < 1 in declaration order. Position in this list
    // defines the bit position in failure scenarios.
    std::vector<int> unreliable_edge_indices() const;
};

// One realization of the unreliable edges. Bit i (1 = operating, 0 = failed)
// corresponds to the i-th unreliable edge of the owning network.
struct FailureScenario {
    std::uint64_t bits = 0;
    int k = 0;
    double probability = 1.0;

    bool operating(int i) const { return (bits >> i) & 1ull; }
    std::string bit_string() const;
    static FailureScenario from_bit_string(const std::string& s, double probability);

    friend bool operator==(const FailureScenario&, const FailureScenario&) = default;
};

enum class ScenarioMode { IndependentBernoulli, Explicit };

// Either the product distribution implied by the network's edge
// reliabilities (scenarios empty) or an explicit weighted list of distinct
// scenarios, e.g. an enumeration or a compressed sample.
struct ScenarioSet {
    ScenarioMode mode = ScenarioMode::IndependentBernoulli;
    int k = 0;
    std::vector<FailureScenario> scenarios;

    static ScenarioSet bernoulli(const NetworkSpec& net);
    static ScenarioSet explicit_set(int k, std::vector<FailureScenario> scenarios);

    bool is_explicit() const { return mode == ScenarioMode::Explicit; }
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool ok() const { return violations.empty(); }
};

// Checks every structural invariant (unique ids, node kinds vs prices,
// capacity and reliability ranges, edge endpoints, self-loops, at least one
// producer and consumer). Price relations that admit riskless arbitrage
// (producer return price above purchase price, consumer return price below
// sale price) are reported as warnings, not violations.
ValidationReport validate_network(const NetworkSpec& net);

// Throws std::invalid_argument listing all violations if validation fails.
void require_valid(const NetworkSpec& net);

// All 2^k failure scenarios with their product-Bernoulli probabilities.
// Scenarios whose probability is exactly zero (an edge with reliability 0
// or 1 in the unreliable list cannot occur both ways) are omitted.
// Throws CapExceededError when k exceeds `cap`.
ScenarioSet enumerate_scenarios(const NetworkSpec& net, int cap = kDefaultEnumerationCap);

// One independent draw of every unreliable edge. Consumes exactly one
// uniform per unreliable edge, so a seeded generator yields a reproducible
// stream of scenarios. The probability field of a raw draw is 1.
FailureScenario sample_scenario(const NetworkSpec& net, std::mt19937_64& gen);

// Collapses raw draws into the empirical distribution: distinct bit-vectors
// weighted by multiplicity/N, ordered by first appearance.
ScenarioSet compress_sample(const std::vector<FailureScenario>& draws);

// Parameters for random layered instance generation
// (producers -> regular -> consumers; producers -> consumers when
// n_regular == 0). Prices default to ranges without arbitrage.
struct NetworkGenParams {
    int n_producers = 1;
    int n_consumers = 1;
    int n_regular = 0;
    int n_edges = 1;
    int n_unreliable = 0;
    std::pair<double, double> capacity_range{5.0, 20.0};
    std::pair<double, double> producer_price1_range{1.0, 3.0};
    std::pair<double, double> consumer_price1_range{3.0, 6.0};
    std::pair<double, double> producer_price2_range{0.1, 0.9};
    std::pair<double, double> consumer_price2_range{6.0, 9.0};
    std::pair<double, double> reliability_range{0.80, 0.98};
};

// Pure function of (params, seed); the result always passes
// validate_network with no violations. Throws std::invalid_argument for
// parameter combinations that cannot be realized (too few or too many edges
// for the layered topology, n_unreliable > n_edges, ...).
NetworkSpec generate_random_network(const NetworkGenParams& params, std::uint64_t seed);

}  // namespace stochflow
