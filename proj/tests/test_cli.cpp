#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stochflow/errors.hpp"
#include "stochflow/experiment.hpp"
#include "stochflow/io.hpp"
#include "stochflow/network.hpp"
#include "stochflow/two_stage.hpp"

using namespace stochflow;
namespace fs = std::filesystem;

namespace {

const std::string kCli = STOCHFLOW_CLI_PATH;
const std::string kData = STOCHFLOW_DATA_DIR;

const fs::path& scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("stochflow_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out << text;
}

// Runs the CLI with stdout+stderr captured; returns the exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
    static int counter = 0;
    const fs::path cap = scratch_dir() / ("cli_out_" + std::to_string(counter++) + ".txt");
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + cap.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    if (output) *output = read_text(cap);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

NetworkSpec hand_model() {
    NodeSpec p;
    p.id = "p";
    p.kind = NodeKind::Producer;
    p.capacity = 10.0;
    p.price_stage1 = 1.0;
    p.price_stage2 = 0.5;
    NodeSpec c;
    c.id = "c";
    c.kind = NodeKind::Consumer;
    c.capacity = 10.0;
    c.price_stage1 = 2.0;
    c.price_stage2 = 3.0;
    NetworkSpec net;
    net.nodes = {p, c};
    net.edges.push_back({"p", "c", 10.0, 0.9});
    return net;
}

std::string hand_model_path() { return kData + "/hand_model.json"; }

}  // namespace

TEST_CASE("network files round-trip exactly") {
    NetworkSpec net = hand_model();
    NodeSpec r;
    r.id = "hub";
    r.kind = NodeKind::Regular;  // default capacity stays infinite
    net.nodes.push_back(r);
    net.edges.push_back({"p", "hub", 10.000000000000002, 0.9000000000000001});
    net.edges.push_back({"hub", "c", 3.25, 1.0});

    const NetworkSpec back = network_from_json_text(network_to_json_text(net));
    REQUIRE(back.nodes.size() == net.nodes.size());
    REQUIRE(back.edges.size() == net.edges.size());
    for (size_t i = 0; i < net.nodes.size(); ++i) {
        CHECK(back.nodes[i].id == net.nodes[i].id);
        CHECK(back.nodes[i].kind == net.nodes[i].kind);
        CHECK(back.nodes[i].capacity == net.nodes[i].capacity);
        CHECK(back.nodes[i].price_stage1 == net.nodes[i].price_stage1);
        CHECK(back.nodes[i].price_stage2 == net.nodes[i].price_stage2);
    }
    for (size_t i = 0; i < net.edges.size(); ++i) {
        CHECK(back.edges[i].from == net.edges[i].from);
        CHECK(back.edges[i].to == net.edges[i].to);
        CHECK(back.edges[i].capacity == net.edges[i].capacity);
        CHECK(back.edges[i].reliability == net.edges[i].reliability);
    }
    CHECK(std::isinf(back.nodes[2].capacity));
}

TEST_CASE("malformed network files raise io errors") {
    CHECK_THROWS_AS(network_from_json_text("{nope"), IoError);
    CHECK_THROWS_AS(network_from_json_text("[]"), IoError);
    CHECK_THROWS_AS(
        network_from_json_text(R"({"nodes":[{"id":"a","kind":"widget"}],"edges":[]})"), IoError);
    CHECK_THROWS_AS(
        network_from_json_text(R"({"nodes":[{"id":"a","kind":"producer"}],"edges":[{"from":"a","to":"a"}]})"),
        IoError);  // edge missing capacity/reliability
    CHECK_THROWS_AS(load_network(kData + "/does_not_exist.json"), IoError);
}

TEST_CASE("scenario files round-trip and enforce domain rules") {
    const ScenarioSet set = ScenarioSet::explicit_set(
        3, {FailureScenario::from_bit_string("101", 0.625),
            FailureScenario::from_bit_string("000", 0.375)});
    const ScenarioSet back = scenarios_from_json_text(scenarios_to_json_text(set));
    REQUIRE(back.k == 3);
    REQUIRE(back.scenarios.size() == 2);
    CHECK(back.scenarios[0].bits == set.scenarios[0].bits);
    CHECK(back.scenarios[0].probability == set.scenarios[0].probability);
    CHECK(back.scenarios[1].bits == set.scenarios[1].bits);

    CHECK_THROWS_AS(scenarios_from_json_text("not json"), IoError);
    CHECK_THROWS_AS(
        scenarios_from_json_text(R"({"k":2,"scenarios":[{"bits":"101","probability":1.0}]})"),
        std::invalid_argument);  // bits length != k
    CHECK_THROWS_AS(scenarios_from_json_text(R"({"k":64,"scenarios":[]})"), std::invalid_argument);
    CHECK_THROWS_AS(scenarios_to_json_text(ScenarioSet::bernoulli(hand_model())),
                    std::invalid_argument);
}

TEST_CASE("allocation files round-trip") {
    Allocation x;
    x.producer_amounts["p"] = 10.0;
    x.consumer_amounts["c"] = 9.0000000000000018;
    const Allocation back = allocation_from_json_text(allocation_to_json_text(x));
    CHECK(back == x);
    CHECK_THROWS_AS(allocation_from_json_text(R"({"producers":{"p":"lots"},"consumers":{}})"),
                    IoError);
    CHECK_THROWS_AS(allocation_from_json_text(R"({"producers":{}})"), IoError);
}

TEST_CASE("experiment plans parse both layouts") {
    const std::string full = R"({
        "network": "net.json",
        "output": "runs.csv",
        "methods": [
            {"method": "exact"},
            {"method": "saa", "n": [5, 10]},
            {"method": "subselect", "k": [4], "n1": [10, 20], "n2": [25, 50]}
        ],
        "seeds": [1, 2, 3],
        "evaluation": {"mode": "exact"},
        "record_timing": false
    })";
    const ExperimentPlan plan = plan_from_json_text(full);
    CHECK(plan.network_path == "net.json");
    CHECK(plan.output_path == "runs.csv");
    REQUIRE(plan.methods.size() == 3);
    CHECK(plan.methods[1].n_values == std::vector<long long>{5, 10});
    CHECK(plan.methods[2].k_values == std::vector<int>{4});
    CHECK(plan.methods[2].n2_values == std::vector<long long>{25, 50});
    CHECK(plan.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(plan.evaluation.mode == EvaluationPolicy::Mode::Exact);
    CHECK_FALSE(plan.record_timing);

    const ExperimentPlan shorthand = plan_from_json_text(R"({
        "network": "net.json",
        "output": "runs.csv",
        "method": "saa",
        "n": [50],
        "seeds": {"count": 3, "start": 5}
    })");
    REQUIRE(shorthand.methods.size() == 1);
    CHECK(shorthand.methods[0].method == "saa");
    CHECK(shorthand.seeds == std::vector<std::uint64_t>{5, 6, 7});
    CHECK(shorthand.evaluation.mode == EvaluationPolicy::Mode::Auto);
    CHECK(shorthand.record_timing);
}

TEST_CASE("defective plans are rejected with the right category") {
    auto wrap = [](const std::string& body) {
        return R"({"network":"n.json","output":"o.csv",)" + body + "}";
    };
    CHECK_THROWS_AS(plan_from_json_text("{"), IoError);
    CHECK_THROWS_AS(plan_from_json_text(R"({"output":"o.csv","method":"exact"})"), IoError);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"bounds")")), std::invalid_argument);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"magic")")), std::invalid_argument);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"saa")")), std::invalid_argument);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"saa","n":[5],"seeds":[1,1])")),
                    std::invalid_argument);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"saa","n":[5])")),
                    std::invalid_argument);  // seeded method, no seeds
    CHECK_THROWS_AS(
        plan_from_json_text(wrap(R"("method":"subselect","k":[2],"n1":[5,10],"n2":[20])")),
        std::invalid_argument);
    CHECK_THROWS_AS(plan_from_json_text(wrap(R"("method":"evaluate","n":[5],"seeds":[1])")),
                    std::invalid_argument);  // no allocation file
}

TEST_CASE("aggregate path derivation") {
    CHECK(default_aggregate_path("runs.csv") == "runs.aggregate.csv");
    CHECK(default_aggregate_path("results/sweep.csv") == "results/sweep.aggregate.csv");
    CHECK(default_aggregate_path("plain") == "plain.aggregate.csv");
}

TEST_CASE("experiment runner emits the documented rows") {
    const NetworkSpec net = hand_model();
    ExperimentPlan plan;
    plan.network_path = "unused";
    plan.output_path = "unused";
    plan.record_timing = false;
    plan.seeds = {1, 2};
    plan.evaluation.mode = EvaluationPolicy::Mode::Exact;
    MethodBlock exact_block;
    exact_block.method = "exact";
    MethodBlock det_block;
    det_block.method = "deterministic";
    MethodBlock mean_block;
    mean_block.method = "mean";
    MethodBlock saa_block;
    saa_block.method = "saa";
    saa_block.n_values = {30};
    MethodBlock sub_block;
    sub_block.method = "subselect";
    sub_block.k_values = {2};
    sub_block.n1_values = {10};
    plan.methods = {exact_block, det_block, mean_block, saa_block, sub_block};

    const std::vector<ExperimentRow> rows = run_experiment(plan, net);
    REQUIRE(rows.size() == 7);

    CHECK(rows[0].method == "exact");
    CHECK(rows[0].objective == doctest::Approx(7.5).epsilon(1e-9));
    REQUIRE(rows[0].true_objective.has_value());
    CHECK(*rows[0].true_objective == doctest::Approx(7.5).epsilon(1e-9));
    CHECK(rows[0].n_distinct == 2);
    CHECK(rows[0].wall_time_ms == 0.0);
    CHECK_FALSE(rows[0].seed.has_value());

    // the deterministic planner believes the all-operating world
    CHECK(rows[1].method == "deterministic");
    CHECK(rows[1].objective == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(*rows[1].true_objective == doctest::Approx(7.5).epsilon(1e-9));

    // the mean planner believes the capacity-scaled world
    CHECK(rows[2].method == "mean");
    CHECK(rows[2].objective == doctest::Approx(9.0).epsilon(1e-9));
    CHECK(*rows[2].true_objective == doctest::Approx(6.75).epsilon(1e-9));

    for (size_t i = 3; i <= 4; ++i) {
        CHECK(rows[i].method == "saa");
        CHECK(rows[i].n == 30);
        CHECK(rows[i].seed == (i == 3 ? 1u : 2u));
        REQUIRE(rows[i].true_objective.has_value());
        CHECK(*rows[i].true_objective <= 7.5 + 1e-9);
        CHECK(rows[i].n_distinct >= 1);
        CHECK(rows[i].n_distinct <= 2);
    }
    for (size_t i = 5; i <= 6; ++i) {
        CHECK(rows[i].method == "subselect");
        CHECK(rows[i].k_candidates == 2);
        CHECK(rows[i].n1 == 10);
        CHECK(rows[i].n2 == 20);  // defaulted to 2 * n1
        CHECK(rows[i].std_error.has_value());
    }

    // byte-stable when timing is off
    CHECK(rows_to_csv(rows) == rows_to_csv(run_experiment(plan, net)));

    const std::string csv = rows_to_csv(rows);
    CHECK(csv.rfind("method,n,k_candidates,n1,n2,seed,objective,true_objective,std_error,"
                    "n_distinct_scenarios,wall_time_ms\n", 0) == 0);

    const std::string agg = aggregate_to_csv(rows);
    std::istringstream lines(agg);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "method,n,k_candidates,n1,n2,n_runs,objective_mean,objective_min,objective_max,"
                  "true_objective_mean,true_objective_min,true_objective_max");
    int data_lines = 0;
    while (std::getline(lines, line)) ++data_lines;
    CHECK(data_lines == 5);  // one group per sweep point
}

TEST_CASE("cli: generate then validate") {
    const fs::path net_path = scratch_dir() / "generated.json";
    std::string out;
    const int rc = run_cli("generate --output \"" + net_path.string() +
                               "\" --seed 11 --producers 2 --consumers 2 --regular 2 --edges 7 "
                               "--unreliable 3",
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("k 3") != std::string::npos);
    CHECK(out.find("scenario_space 8") != std::string::npos);

    std::string vout;
    CHECK(run_cli("validate \"" + net_path.string() + "\"", &vout) == 0);
    CHECK(vout.find("ok") != std::string::npos);
}

TEST_CASE("cli: wide generation reports the full scenario space") {
    const fs::path net_path = scratch_dir() / "wide.json";
    std::string out;
    const int rc = run_cli("generate --output \"" + net_path.string() +
                               "\" --seed 4 --producers 5 --consumers 5 --edges 25 --unreliable 22",
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("k 22") != std::string::npos);
    CHECK(out.find("scenario_space 4194304") != std::string::npos);
}

TEST_CASE("cli: exact solve prints the closed-form optimum") {
    std::string out;
    const int rc =
        run_cli("--no-timing solve --network \"" + hand_model_path() + "\" --method exact", &out);
    CHECK(rc == 0);
    CHECK(out.find("scenarios 2\n") != std::string::npos);
    CHECK(out.find("objective 7.5\n") != std::string::npos);
    CHECK(out.find("buy p 10\n") != std::string::npos);
    CHECK(out.find("sell c 10\n") != std::string::npos);
    CHECK(out.find("wall_time_ms 0\n") != std::string::npos);
}

TEST_CASE("cli: solve can persist the allocation and the merged program") {
    const fs::path alloc_path = scratch_dir() / "exact_alloc.json";
    const fs::path lp_path = scratch_dir() / "merged.lp";
    const int rc = run_cli("--no-timing solve --network \"" + hand_model_path() +
                           "\" --method exact -o \"" + alloc_path.string() + "\" --dump-lp \"" +
                           lp_path.string() + "\"");
    CHECK(rc == 0);
    const Allocation x = load_allocation(alloc_path.string());
    CHECK(x.producer("p") == doctest::Approx(10.0).epsilon(1e-9));
    const std::string lp_text = read_text(lp_path);
    CHECK(lp_text.find("Maximize") != std::string::npos);
    CHECK(lp_text.find("End") != std::string::npos);
}

TEST_CASE("cli: seeded solves are byte-stable") {
    const std::string args = "--no-timing solve --network \"" + hand_model_path() +
                             "\" --method saa --n 40 --seed 7";
    std::string first, second;
    CHECK(run_cli(args, &first) == 0);
    CHECK(run_cli(args, &second) == 0);
    CHECK(first == second);
    CHECK(first.find("seed 7\n") != std::string::npos);
    CHECK(first.find("n_raw 40\n") != std::string::npos);
}

TEST_CASE("cli: one-candidate subselection reports its audit") {
    std::string out;
    const int rc = run_cli("--no-timing solve --network \"" + hand_model_path() +
                               "\" --method subselect --k 1 --n1 20 --seed 9",
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("candidate 0 seed ") != std::string::npos);
    CHECK(out.find("best_index 0\n") != std::string::npos);
}

TEST_CASE("cli: evaluation of pinned allocations") {
    std::string out;
    int rc = run_cli("--no-timing evaluate --network \"" + hand_model_path() +
                         "\" --allocation \"" + kData + "/hand_model_allocation.json\" --exact",
                     &out);
    CHECK(rc == 0);
    CHECK(out.find("estimate,std_error,n_samples,wall_time_ms\n") != std::string::npos);
    CHECK(out.find("7.5,0,2,0\n") != std::string::npos);

    rc = run_cli("--no-timing evaluate --network \"" + hand_model_path() + "\" --allocation \"" +
                     kData + "/zero_allocation.json\" --exact",
                 &out);
    CHECK(rc == 0);
    CHECK(out.find("0,0,2,0\n") != std::string::npos);

    rc = run_cli("--no-timing evaluate --network \"" + hand_model_path() + "\" --allocation \"" +
                     kData + "/hand_model_allocation.json\" --mc 500 --seed 3",
                 &out);
    CHECK(rc == 0);
    std::istringstream lines(out);
    std::string header, data;
    std::getline(lines, header);
    std::getline(lines, data);
    const double estimate = std::stod(data.substr(0, data.find(',')));
    CHECK(std::abs(estimate - 7.5) <= 4.0 * 25.0 * std::sqrt(0.09 / 500.0));
}

TEST_CASE("cli: experiment plan produces byte-identical reruns") {
    const fs::path plan_path = scratch_dir() / "plan.json";
    const fs::path out_csv = scratch_dir() / "runs.csv";
    const fs::path agg_csv = scratch_dir() / "runs.aggregate.csv";
    write_text(plan_path, std::string("{\n") + "  \"network\": \"" + hand_model_path() +
                              "\",\n  \"output\": \"runs.csv\",\n" +
                              R"(  "methods": [
    {"method": "exact"},
    {"method": "deterministic"},
    {"method": "mean"},
    {"method": "saa", "n": [10, 30]},
    {"method": "subselect", "k": [2], "n1": [10]}
  ],
  "seeds": [1, 2, 3],
  "evaluation": {"mode": "exact"},
  "record_timing": false
}
)");

    std::string out;
    const int rc = run_cli("experiment --plan \"" + plan_path.string() + "\"", &out);
    CHECK(rc == 0);
    CHECK(out.find("rows 12\n") != std::string::npos);
    const std::string first_csv = read_text(out_csv);
    const std::string first_agg = read_text(agg_csv);
    CHECK(first_csv.rfind("method,", 0) == 0);

    CHECK(run_cli("experiment --plan \"" + plan_path.string() + "\"") == 0);
    CHECK(read_text(out_csv) == first_csv);
    CHECK(read_text(agg_csv) == first_agg);

    // golden copy, frozen from a reviewed run
    CHECK(first_csv == read_text(kData + "/golden_runs.csv"));
    CHECK(first_agg == read_text(kData + "/golden_runs.aggregate.csv"));
}

TEST_CASE("cli: bounds calculators") {
    std::string out;
    const int rc = run_cli(
        "bounds --range 1 --epsilon 0.1 --delta 0.05 --candidates 100 --dim 2 --box 1 "
        "--lipschitz 1",
        &out);
    CHECK(rc == 0);
    CHECK(out.find("evaluation: N >= 185 ") != std::string::npos);
    CHECK(out.find("finite-selection: N >= 1659 ") != std::string::npos);
    CHECK(out.find("lipschitz-selection: N >= 7745 ") != std::string::npos);

    CHECK(run_cli("bounds --range 1 --epsilon 0.5 --delta 0.05 --dim 2 --box 0.01 --lipschitz 1",
                  &out) == 0);
    CHECK(out.find("floored at the evaluation bound") != std::string::npos);
}

TEST_CASE("cli: exit codes sort failures by kind") {
    std::string out;

    // 2: io and parse problems
    CHECK(run_cli("validate \"" + kData + "/missing.json\"", &out) == 2);
    CHECK(run_cli("frobnicate", &out) == 2);
    const fs::path bad_json = scratch_dir() / "bad.json";
    write_text(bad_json, "{broken");
    CHECK(run_cli("validate \"" + bad_json.string() + "\"", &out) == 2);
    CHECK(run_cli("experiment --plan \"" + bad_json.string() + "\"", &out) == 2);

    // 1: domain violations
    const fs::path invalid_net = scratch_dir() / "invalid_net.json";
    NetworkSpec broken = hand_model();
    broken.edges[0].reliability = 1.5;
    save_network(broken, invalid_net.string());
    CHECK(run_cli("validate \"" + invalid_net.string() + "\"", &out) == 1);
    CHECK(out.find("violation:") != std::string::npos);

    CHECK(run_cli("solve --network \"" + hand_model_path() + "\" --method wizardry", &out) == 1);
    CHECK(run_cli("evaluate --network \"" + hand_model_path() + "\" --allocation \"" + kData +
                      "/hand_model_allocation.json\"",
                  &out) == 1);  // neither --exact nor --mc
    CHECK(run_cli("bounds --range 1 --epsilon 0 --delta 0.05", &out) == 1);

    // 1: enumeration cap
    const fs::path wide_net = scratch_dir() / "wide22.json";
    CHECK(run_cli("generate --output \"" + wide_net.string() +
                  "\" --seed 4 --producers 5 --consumers 5 --edges 25 --unreliable 22") == 0);
    CHECK(run_cli("solve --network \"" + wide_net.string() + "\" --method exact", &out) == 1);

    // 3: solver refuses oversized merged programs
    const fs::path big_net = scratch_dir() / "big13.json";
    CHECK(run_cli("generate --output \"" + big_net.string() +
                  "\" --seed 6 --producers 4 --consumers 4 --edges 14 --unreliable 13") == 0);
    CHECK(run_cli("solve --network \"" + big_net.string() + "\" --method exact", &out) == 3);
}
