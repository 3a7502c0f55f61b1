// Experiment runner: run, list, validate. Exit codes: 0 ok, 1 bad config or
// usage, 2 a check failed, 3 a setting rule was broken mid-run.

#include <iostream>

#include "CLI11.hpp"
#include "resample/harness.hpp"

using namespace resample;

namespace {

void print_checks(const ExperimentReport& rep) {
    for (const auto& c : rep.outcome.checks) {
        std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << ": " << format_double(c.value) << ' ' << c.relation
                  << ' ' << format_double(c.bound) << '\n';
    }
}

int run(const std::string& name, const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<std::uint64_t> trials, const std::string& out, std::optional<unsigned> jobs) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = load_config(config_path);
        if (!name.empty() && name != cfg.experiment) {
            throw SchemaError("$.experiment", "config names '" + cfg.experiment + "' but '" + name + "' was requested");
        }
    } else {
        cfg.experiment = name;
    }
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (!out.empty()) cfg.out = out;
    if (jobs) cfg.jobs = *jobs;
    if (cfg.out.empty()) cfg.out = "results/" + cfg.experiment;
    const auto rep = run_experiment(cfg);
    write_report(rep, cfg.out);
    std::cout << rep.experiment->name << " (" << rep.trials << " trials, seed " << cfg.seed << ") -> " << cfg.out
              << '\n';
    print_checks(rep);
    return rep.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resampling experiments"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment");
    std::string name, config_path, out;
    std::optional<std::uint64_t> seed, trials;
    std::optional<unsigned> jobs;
    run_cmd->add_option("experiment", name, "experiment name (optional with --config)");
    run_cmd->add_option("--config", config_path, "JSON config")->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "run seed");
    run_cmd->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", out, "output directory");
    run_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));

    auto* list_cmd = app.add_subcommand("list", "list experiments");
    auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
    std::string validate_path;
    validate_cmd->add_option("config", validate_path, "JSON config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*list_cmd) {
            for (const auto& e : registry()) {
                std::cout << e.name << "\t" << e.description << "\t[" << e.anchor << "]\n";
            }
            return 0;
        }
        if (*validate_cmd) {
            validate(load_config(validate_path));
            std::cout << "valid\n";
            return 0;
        }
        if (name.empty() && config_path.empty()) {
            std::cerr << "run: name an experiment or pass --config\n";
            return 1;
        }
        return run(name, config_path, seed, trials, out, jobs);
    } catch (const SettingError& e) {
        std::cerr << "setting rule violated: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
