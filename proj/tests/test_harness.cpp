#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "resample/harness.hpp"

using namespace resample;

namespace {

std::string schema_path(const Json& j) {
    try {
        validate(parse_config(j));
    } catch (const SchemaError& e) {
        return e.path();
    }
    return "";
}

std::string schema_message(const Json& j) {
    try {
        validate(parse_config(j));
    } catch (const SchemaError& e) {
        return e.what();
    }
    return "";
}

// Runs the CLI through the shell; returns the exit status.
int cli(const std::string& args) {
    const std::string cmd = std::string(RESAMPLE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("resample_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config errors carry the field path") {
    CHECK(schema_path({{"experiment", "star_exact"}, {"bogus", 1}}) == "$.bogus");
    CHECK(schema_path({{"experiment", "star_exact"}, {"seed", "seven"}}) == "$.seed");
    CHECK(schema_path({{"experiment", "star_exact"}, {"params", {{"nope", 3}}}}) == "$.params.nope");
    CHECK(schema_path({{"experiment", "star_exact"}, {"params", {{"samples", "many"}}}}) == "$.params.samples");
    CHECK(schema_path({{"seed", 3}}) == "$.experiment");
    // star_exact takes neither a scheduler nor a horizon
    CHECK(schema_path({{"experiment", "star_exact"}, {"scheduler", "gta"}}) == "$.scheduler");
    CHECK(schema_path({{"experiment", "star_exact"}, {"horizon", 64}}) == "$.horizon");
    CHECK(schema_path({{"experiment", "star_exact"}}).empty());
}

TEST_CASE("unknown experiment lists the candidates") {
    const auto msg = schema_message({{"experiment", "star_exactly"}});
    CHECK(msg.find("unknown experiment 'star_exactly'") != std::string::npos);
    CHECK(msg.find("star_exact") != std::string::npos);
    CHECK(msg.find("pagerank") != std::string::npos);
}

TEST_CASE("config round trips through json") {
    const Json j = {{"experiment", "bins_recourse"}, {"seed", 11}, {"trials", 3}, {"params", {{"n", 64}}}};
    const auto c = parse_config(j);
    const auto back = parse_config(to_json(c));
    CHECK(back.experiment == "bins_recourse");
    CHECK(back.seed == 11);
    CHECK(back.trials == 3u);
    CHECK(back.params == c.params);
}

TEST_CASE("registry covers every criterion") {
    CHECK(registry().size() >= 12);
    std::set<std::string> names;
    for (const auto& e : registry()) {
        CHECK_FALSE(e.anchor.empty());
        CHECK(names.insert(e.name).second);
    }
    for (int c = 1; c <= 15; ++c) {
        INFO("criterion " << c);
        CHECK(experiment_for_criterion(c) != nullptr);
    }
    CHECK(experiment_for_criterion(16) == nullptr);
    CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("star_exact summary carries the exact values") {
    ExperimentConfig c;
    c.experiment = "star_exact";
    c.seed = 5;
    c.params = {{"samples", 2000}};
    const auto rep = run_experiment(c);
    const auto s = rep.summary();
    CHECK(s["results"]["static_exact"] == "37/64");
    CHECK(s["results"]["adaptive_exact"] == "3/4");
    CHECK(s["experiment"] == "star_exact");
    CHECK(s["seed"] == 5);
    CHECK(s.contains("revision"));
    CHECK(s["checks"].is_array());
}

TEST_CASE("format_double is %.17g") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(37.0 / 64.0) == "0.578125");
}

TEST_CASE("same seed gives identical csv, serial or threaded") {
    ExperimentConfig c;
    c.experiment = "bins_recourse";
    c.seed = 9;
    c.trials = 4;
    c.params = {{"n", 64}};
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    c.jobs = 3;
    const auto threaded = run_experiment(c);
    REQUIRE(a.outputs.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.trial_csv(k) == b.trial_csv(k));
        CHECK(a.trial_csv(k) == threaded.trial_csv(k));
    }
    CHECK(a.summary()["results"] == threaded.summary()["results"]);
    c.seed = 10;
    c.jobs = 1;
    CHECK(run_experiment(c).trial_csv(0) != a.trial_csv(0));
}

TEST_CASE("csv header starts with step then the experiment columns") {
    ExperimentConfig c;
    c.experiment = "bins_recourse";
    c.trials = 1;
    c.params = {{"n", 32}};
    const auto rep = run_experiment(c);
    const auto csv = rep.trial_csv(0);
    std::string header = csv.substr(0, csv.find('\n'));
    std::string expect = "step";
    for (const auto& col : rep.experiment->columns) expect += "," + col;
    CHECK(header == expect);
}

TEST_CASE("write_report lays out trial files and a summary") {
    const auto dir = scratch("report");
    ExperimentConfig c;
    c.experiment = "bins_recourse";
    c.trials = 2;
    c.params = {{"n", 32}};
    write_report(run_experiment(c), dir);
    CHECK(std::filesystem::exists(dir / "trial_0.csv"));
    CHECK(std::filesystem::exists(dir / "trial_1.csv"));
    std::ifstream in(dir / "summary.json");
    const auto s = Json::parse(in);
    CHECK(s["trials"] == 2);
    CHECK(s["config"]["experiment"] == "bins_recourse");
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    CHECK(cli("list") == 0);
    CHECK(cli("") == 1);
    CHECK(cli("run no_such_experiment") == 1);
    CHECK(cli("run star_exact --trials 0") == 1);

    const auto good = dir / "good.json";
    std::ofstream(good) << R"({"experiment": "star_exact", "seed": 3})";
    CHECK(cli("validate " + good.string()) == 0);
    CHECK(cli("run --config " + good.string() + " --out " + (dir / "out").string()) == 0);
    CHECK(std::filesystem::exists(dir / "out" / "summary.json"));
    CHECK(cli("run bins_recourse --config " + good.string()) == 1);

    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"experiment": "star_exact", "params": {"samples": 1000, "x": 1}})";
    CHECK(cli("validate " + bad.string()) == 1);

    // 20 samples can't land within 0.01 of 37/64: exit 2.
    const auto tight = dir / "tight.json";
    std::ofstream(tight) << R"({"experiment": "star_exact", "params": {"samples": 20}})";
    CHECK(cli("run --config " + tight.string() + " --out " + (dir / "tight").string()) == 2);
}
