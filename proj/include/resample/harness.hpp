#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "resample/core.hpp"
#include "resample/schedulers.hpp"

namespace resample {

using Json = nlohmann::json;

// Config problems carry the JSON path of the offending field.
struct SchemaError : ConfigError {
    SchemaError(const std::string& path, const std::string& message)
        : ConfigError(path + ": " + message), path_(path) {}
    const std::string& path() const { return path_; }

   private:
    std::string path_;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> trials;
    std::string out;
    std::optional<std::string> scheduler;
    std::optional<double> alpha;
    std::optional<TimeStep> horizon;
    std::optional<std::uint64_t> audit_every;
    unsigned jobs = 1;
    Json params = Json::object();
};

// Top-level schema only; params are checked against the experiment.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);

// One audited step of a trial.
struct MetricRow {
    TimeStep step = 0;
    std::vector<double> values;
};

struct TrialOutput {
    std::vector<MetricRow> rows;
    std::map<std::string, double> metrics;
};

struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  // "<=", ">=", "<", "=="
    double bound = 0.0;
    bool pass = false;
};

Check check_at_most(std::string name, double value, double bound);
Check check_at_least(std::string name, double value, double bound);
Check check_below(std::string name, double value, double bound);
Check check_true(std::string name, bool ok);

struct Outcome {
    Json results = Json::object();
    std::vector<Check> checks;
};

// Trials must not share mutable state: trial() may run on several threads.
class Runner {
   public:
    virtual ~Runner() = default;
    virtual TrialOutput trial(std::uint64_t index, std::uint64_t seed) const = 0;
    virtual Outcome finish(const std::vector<TrialOutput>& trials) const = 0;
};

struct RunContext {
    const ExperimentConfig& config;
    Json params;  // defaults merged with the config's params
    std::uint64_t trials = 1;
    SchedulerKind scheduler = SchedulerKind::none;
    double alpha = 2.0;
    std::optional<TimeStep> horizon;
    std::uint64_t audit_every = 1;

    std::uint64_t u64(const char* key) const { return params.at(key).get<std::uint64_t>(); }
    double num(const char* key) const { return params.at(key).get<double>(); }
    std::string str(const char* key) const { return params.at(key).get<std::string>(); }
};

struct Experiment {
    std::string name;
    std::string description;
    std::string anchor;      // the result it reproduces
    std::vector<int> criteria;
    Json defaults = Json::object();
    std::uint64_t trials = 1;
    std::optional<SchedulerKind> scheduler;  // set when the experiment takes one
    bool takes_horizon = false;
    std::uint64_t audit_every = 1;
    std::vector<std::string> columns;  // CSV columns after `step`
    std::function<std::unique_ptr<Runner>(const RunContext&)> make;
};

const std::vector<Experiment>& registry();
const Experiment* find_experiment(std::string_view name);
// Experiment reproducing an acceptance criterion, nullptr if none.
const Experiment* experiment_for_criterion(int criterion);

// Checks params against the experiment's defaults and merges them.
Json resolve_params(const Experiment& e, const Json& params);
// Full validation, as run before any trial. Throws SchemaError.
void validate(const ExperimentConfig& c);

struct ExperimentReport {
    const Experiment* experiment = nullptr;
    ExperimentConfig config;
    Json params;
    std::uint64_t trials = 0;
    std::string scheduler;
    std::string revision;
    std::vector<TrialOutput> outputs;
    Outcome outcome;

    bool passed() const;
    Json summary() const;
    std::string trial_csv(std::size_t k) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
// trial_<k>.csv and summary.json under dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// printf %.17g.
std::string format_double(double x);
const char* revision();

}  // namespace resample
