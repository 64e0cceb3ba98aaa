#pragma once

#include <string>

#include "stochflow/network.hpp"
#include "stochflow/two_stage.hpp"

namespace stochflow {

// JSON file formats. Missing files and malformed/ill-typed documents raise
// IoError; documents that parse but violate domain invariants (bad
// probabilities, duplicate scenarios) raise std::invalid_argument.
//
// Network:    {"nodes": [{"id", "kind", "capacity"?, "price_stage1"?,
//                         "price_stage2"?}, ...],
//              "edges": [{"from", "to", "capacity", "reliability"}, ...]}
//             A missing "capacity" means unbounded.
// Scenarios:  {"k": 3, "scenarios": [{"bits": "101", "probability": 0.2}, ...]}
// Allocation: {"producers": {"P0": 10.0, ...}, "consumers": {...}}
//
// Reals are serialized with shortest round-trip precision, so load(save(v))
// reproduces v bit-exactly.

NetworkSpec load_network(const std::string& path);
void save_network(const NetworkSpec& net, const std::string& path);
NetworkSpec network_from_json_text(const std::string& text, const std::string& origin = "<string>");
std::string network_to_json_text(const NetworkSpec& net);

ScenarioSet load_scenarios(const std::string& path);
void save_scenarios(const ScenarioSet& scen, const std::string& path);
ScenarioSet scenarios_from_json_text(const std::string& text, const std::string& origin = "<string>");
std::string scenarios_to_json_text(const ScenarioSet& scen);

Allocation load_allocation(const std::string& path);
void save_allocation(const Allocation& x, const std::string& path);
Allocation allocation_from_json_text(const std::string& text, const std::string& origin = "<string>");
std::string allocation_to_json_text(const Allocation& x);

}  // namespace stochflow
