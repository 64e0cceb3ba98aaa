#include "stochflow/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stochflow/errors.hpp"

namespace stochflow {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
}

json parse(const std::string& text, const std::string& origin) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw IoError(origin + ": not valid JSON");
    return doc;
}

[[noreturn]] void bad_field(const std::string& origin, const std::string& what) {
    throw IoError(origin + ": " + what);
}

double get_real(const json& obj, const char* key, const std::string& origin) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        bad_field(origin, std::string("missing or non-numeric field '") + key + "'");
    return it->get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& origin) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        bad_field(origin, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

}  // namespace

NetworkSpec network_from_json_text(const std::string& text, const std::string& origin) {
    const json doc = parse(text, origin);
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") ||
        !doc["nodes"].is_array() || !doc["edges"].is_array())
        bad_field(origin, "expected an object with 'nodes' and 'edges' arrays");

    NetworkSpec net;
    for (const json& n : doc["nodes"]) {
        if (!n.is_object()) bad_field(origin, "node entries must be objects");
        NodeSpec node;
        node.id = get_string(n, "id", origin);
        const std::string kind = get_string(n, "kind", origin);
        const auto parsed = node_kind_from_string(kind);
        if (!parsed) bad_field(origin, "unknown node kind '" + kind + "'");
        node.kind = *parsed;
        if (n.contains("capacity")) {
            if (!n["capacity"].is_number()) bad_field(origin, "non-numeric capacity");
            node.capacity = n["capacity"].get<double>();
        }
        if (n.contains("price_stage1")) {
            if (!n["price_stage1"].is_number()) bad_field(origin, "non-numeric price_stage1");
            node.price_stage1 = n["price_stage1"].get<double>();
        }
        if (n.contains("price_stage2")) {
            if (!n["price_stage2"].is_number()) bad_field(origin, "non-numeric price_stage2");
            node.price_stage2 = n["price_stage2"].get<double>();
        }
        net.nodes.push_back(std::move(node));
    }
    for (const json& e : doc["edges"]) {
        if (!e.is_object()) bad_field(origin, "edge entries must be objects");
        EdgeSpec edge;
        edge.from = get_string(e, "from", origin);
        edge.to = get_string(e, "to", origin);
        edge.capacity = get_real(e, "capacity", origin);
        edge.reliability = get_real(e, "reliability", origin);
        net.edges.push_back(std::move(edge));
    }
    return net;
}

std::string network_to_json_text(const NetworkSpec& net) {
    json nodes = json::array();
    for (const NodeSpec& n : net.nodes) {
        json obj;
        obj["id"] = n.id;
        obj["kind"] = to_string(n.kind);
        if (std::isfinite(n.capacity)) obj["capacity"] = n.capacity;
        if (n.price_stage1) obj["price_stage1"] = *n.price_stage1;
        if (n.price_stage2) obj["price_stage2"] = *n.price_stage2;
        nodes.push_back(std::move(obj));
    }
    json edges = json::array();
    for (const EdgeSpec& e : net.edges) {
        edges.push_back({{"from", e.from}, {"to", e.to}, {"capacity", e.capacity},
                         {"reliability", e.reliability}});
    }
    json doc;
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

NetworkSpec load_network(const std::string& path) {
    return network_from_json_text(read_file(path), path);
}

void save_network(const NetworkSpec& net, const std::string& path) {
    write_file(path, network_to_json_text(net));
}

ScenarioSet scenarios_from_json_text(const std::string& text, const std::string& origin) {
    const json doc = parse(text, origin);
    if (!doc.is_object() || !doc.contains("k") || !doc.contains("scenarios") ||
        !doc["k"].is_number_integer() || !doc["scenarios"].is_array())
        bad_field(origin, "expected an object with integer 'k' and 'scenarios' array");
    const int k = doc["k"].get<int>();
    if (k < 0 || k > kMaxScenarioBits)
        throw std::invalid_argument(origin + ": k outside [0, " + std::to_string(kMaxScenarioBits) + "]");
    std::vector<FailureScenario> list;
    for (const json& s : doc["scenarios"]) {
        if (!s.is_object()) bad_field(origin, "scenario entries must be objects");
        const std::string bits = get_string(s, "bits", origin);
        const double prob = get_real(s, "probability", origin);
        if (static_cast<int>(bits.size()) != k)
            throw std::invalid_argument(origin + ": scenario bit string '" + bits +
                                        "' does not have length k=" + std::to_string(k));
        list.push_back(FailureScenario::from_bit_string(bits, prob));
    }
    return ScenarioSet::explicit_set(k, std::move(list));
}

std::string scenarios_to_json_text(const ScenarioSet& scen) {
    if (!scen.is_explicit())
        throw std::invalid_argument("only explicit scenario sets can be serialized");
    json list = json::array();
    for (const FailureScenario& s : scen.scenarios)
        list.push_back({{"bits", s.bit_string()}, {"probability", s.probability}});
    json doc;
    doc["k"] = scen.k;
    doc["scenarios"] = std::move(list);
    return doc.dump(2) + "\n";
}

ScenarioSet load_scenarios(const std::string& path) {
    return scenarios_from_json_text(read_file(path), path);
}

void save_scenarios(const ScenarioSet& scen, const std::string& path) {
    write_file(path, scenarios_to_json_text(scen));
}

Allocation allocation_from_json_text(const std::string& text, const std::string& origin) {
    const json doc = parse(text, origin);
    if (!doc.is_object() || !doc.contains("producers") || !doc.contains("consumers") ||
        !doc["producers"].is_object() || !doc["consumers"].is_object())
        bad_field(origin, "expected an object with 'producers' and 'consumers' maps");
    Allocation x;
    for (const auto& [id, v] : doc["producers"].items()) {
        if (!v.is_number()) bad_field(origin, "non-numeric amount for producer '" + id + "'");
        x.producer_amounts[id] = v.get<double>();
    }
    for (const auto& [id, v] : doc["consumers"].items()) {
        if (!v.is_number()) bad_field(origin, "non-numeric amount for consumer '" + id + "'");
        x.consumer_amounts[id] = v.get<double>();
    }
    return x;
}

std::string allocation_to_json_text(const Allocation& x) {
    json producers = json::object();
    for (const auto& [id, v] : x.producer_amounts) producers[id] = v;
    json consumers = json::object();
    for (const auto& [id, v] : x.consumer_amounts) consumers[id] = v;
    json doc;
    doc["producers"] = std::move(producers);
    doc["consumers"] = std::move(consumers);
    return doc.dump(2) + "\n";
}

Allocation load_allocation(const std::string& path) {
    return allocation_from_json_text(read_file(path), path);
}

void save_allocation(const Allocation& x, const std::string& path) {
    write_file(path, allocation_to_json_text(x));
}

}  // namespace stochflow
