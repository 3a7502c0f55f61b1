#include "resample/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#ifndef RESAMPLE_REVISION
#define RESAMPLE_REVISION "unknown"
#endif

namespace resample {

const char* revision() { return RESAMPLE_REVISION; }

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Config -------------------------------------------------------------------------

namespace {

std::uint64_t get_u64(const Json& j, const std::string& path, std::uint64_t min = 0) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw SchemaError(path, "expected a non-negative integer");
    }
    const auto v = j.get<std::uint64_t>();
    if (v < min) throw SchemaError(path, "must be at least " + std::to_string(min));
    return v;
}

double get_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
    return v;
}

std::string get_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw SchemaError("$", "expected an object");
    ExperimentConfig c;
    bool named = false;
    for (const auto& [key, value] : j.items()) {
        const std::string path = "$." + key;
        if (key == "experiment") {
            c.experiment = get_string(value, path);
            named = true;
        } else if (key == "seed") {
            c.seed = get_u64(value, path);
        } else if (key == "trials") {
            c.trials = get_u64(value, path, 1);
        } else if (key == "out") {
            c.out = get_string(value, path);
        } else if (key == "scheduler") {
            c.scheduler = get_string(value, path);
            try {
                parse_scheduler(*c.scheduler);
            } catch (const ConfigError& e) {
                throw SchemaError(path, e.what());
            }
        } else if (key == "alpha") {
            c.alpha = get_number(value, path);
            if (*c.alpha <= 1.0) throw SchemaError(path, "must exceed 1");
        } else if (key == "horizon") {
            c.horizon = get_u64(value, path, 1);
        } else if (key == "audit_every") {
            c.audit_every = get_u64(value, path, 1);
        } else if (key == "jobs") {
            const auto jobs = get_u64(value, path, 1);
            if (jobs > 1024) throw SchemaError(path, "at most 1024");
            c.jobs = static_cast<unsigned>(jobs);
        } else if (key == "params") {
            if (!value.is_object()) throw SchemaError(path, "expected an object");
            c.params = value;
        } else {
            throw SchemaError(path, "unknown field");
        }
    }
    if (!named) throw SchemaError("$.experiment", "required");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("$", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
    Json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    if (c.trials) j["trials"] = *c.trials;
    if (!c.out.empty()) j["out"] = c.out;
    if (c.scheduler) j["scheduler"] = *c.scheduler;
    if (c.alpha) j["alpha"] = *c.alpha;
    if (c.horizon) j["horizon"] = *c.horizon;
    if (c.audit_every) j["audit_every"] = *c.audit_every;
    j["jobs"] = c.jobs;
    j["params"] = c.params;
    return j;
}

Json resolve_params(const Experiment& e, const Json& params) {
    Json out = e.defaults;
    for (const auto& [key, value] : params.items()) {
        const std::string path = "$.params." + key;
        if (!e.defaults.contains(key)) throw SchemaError(path, "unknown field for " + e.name);
        const Json& def = e.defaults.at(key);
        if (def.is_number_unsigned() || def.is_number_integer()) {
            out[key] = get_u64(value, path);
        } else if (def.is_number()) {
            out[key] = get_number(value, path);
        } else if (def.is_string()) {
            out[key] = get_string(value, path);
        } else if (def.is_boolean()) {
            if (!value.is_boolean()) throw SchemaError(path, "expected a boolean");
            out[key] = value;
        } else {
            throw SchemaError(path, "unsupported parameter type");
        }
    }
    return out;
}

namespace {

const Experiment& lookup(const ExperimentConfig& c) {
    const Experiment* e = find_experiment(c.experiment);
    if (!e) {
        std::string names;
        for (const auto& x : registry()) names += (names.empty() ? "" : ", ") + x.name;
        throw SchemaError("$.experiment", "unknown experiment '" + c.experiment + "'; candidates: " + names);
    }
    return *e;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    const Experiment& e = lookup(c);
    resolve_params(e, c.params);
    if (c.scheduler && !e.scheduler) throw SchemaError("$.scheduler", e.name + " takes no scheduler");
    if (c.alpha && !e.scheduler) throw SchemaError("$.alpha", e.name + " takes no scheduler");
    if (c.horizon && !e.takes_horizon) throw SchemaError("$.horizon", e.name + " has a fixed horizon");
}

// Registry lookups ----------------------------------------------------------------

const Experiment* find_experiment(std::string_view name) {
    for (const auto& e : registry()) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

const Experiment* experiment_for_criterion(int criterion) {
    for (const auto& e : registry()) {
        if (std::find(e.criteria.begin(), e.criteria.end(), criterion) != e.criteria.end()) return &e;
    }
    return nullptr;
}

// Checks ---------------------------------------------------------------------------

Check check_at_most(std::string name, double value, double bound) {
    return {std::move(name), value, "<=", bound, value <= bound};
}
Check check_at_least(std::string name, double value, double bound) {
    return {std::move(name), value, ">=", bound, value >= bound};
}
Check check_below(std::string name, double value, double bound) {
    return {std::move(name), value, "<", bound, value < bound};
}
Check check_true(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, "==", 1.0, ok}; }

// Running ----------------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentConfig& config) {
    validate(config);
    const Experiment& e = lookup(config);
    ExperimentReport rep;
    rep.experiment = &e;
    rep.config = config;
    rep.params = resolve_params(e, config.params);
    rep.trials = config.trials.value_or(e.trials);
    rep.revision = revision();

    RunContext ctx{config, rep.params, 1, SchedulerKind::none, 2.0, std::nullopt, 1};
    ctx.trials = rep.trials;
    if (e.scheduler) {
        ctx.scheduler = config.scheduler ? parse_scheduler(*config.scheduler) : *e.scheduler;
        ctx.alpha = config.alpha.value_or(2.0);
        rep.scheduler = std::string(to_string(ctx.scheduler));
    }
    ctx.horizon = config.horizon;
    ctx.audit_every = config.audit_every.value_or(e.audit_every);

    const auto runner = e.make(ctx);
    rep.outputs.resize(rep.trials);
    const unsigned jobs = static_cast<unsigned>(std::min<std::uint64_t>(config.jobs, rep.trials));
    if (jobs <= 1) {
        for (std::uint64_t k = 0; k < rep.trials; ++k) rep.outputs[k] = runner->trial(k, derive_seed(config.seed, k));
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::exception_ptr> errors(rep.trials);
        auto work = [&] {
            for (std::uint64_t k = next++; k < rep.trials; k = next++) {
                try {
                    rep.outputs[k] = runner->trial(k, derive_seed(config.seed, k));
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        // Lowest failing trial wins, as in a serial run.
        for (auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }
    rep.outcome = runner->finish(rep.outputs);
    return rep;
}

bool ExperimentReport::passed() const {
    return std::all_of(outcome.checks.begin(), outcome.checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

Json describe(std::vector<double> xs) {
    Json j;
    if (xs.empty()) return j;
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    // Nearest-rank quantiles.
    auto q = [&xs, n](double p) {
        const auto rank = static_cast<std::size_t>(std::ceil(p * n));
        return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
    };
    j["mean"] = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    j["min"] = xs.front();
    j["p50"] = q(0.5);
    j["p90"] = q(0.9);
    j["max"] = xs.back();
    return j;
}

}  // namespace

Json ExperimentReport::summary() const {
    Json j;
    j["experiment"] = experiment->name;
    j["anchor"] = experiment->anchor;
    j["revision"] = revision;
    j["seed"] = config.seed;
    j["trials"] = trials;
    if (!scheduler.empty()) j["scheduler"] = scheduler;
    j["config"] = to_json(config);
    j["params"] = params;
    std::map<std::string, std::vector<double>> by_name;
    for (const auto& t : outputs) {
        for (const auto& [name, v] : t.metrics) by_name[name].push_back(v);
    }
    Json metrics = Json::object();
    for (auto& [name, xs] : by_name) metrics[name] = describe(std::move(xs));
    j["metrics"] = metrics;
    j["results"] = outcome.results;
    Json checks = Json::array();
    for (const auto& c : outcome.checks) {
        checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"bound", c.bound},
                          {"pass", c.pass}});
    }
    j["checks"] = checks;
    j["passed"] = passed();
    return j;
}

std::string ExperimentReport::trial_csv(std::size_t k) const {
    std::ostringstream os;
    os << "step";
    for (const auto& c : experiment->columns) os << ',' << c;
    os << '\n';
    for (const auto& row : outputs.at(k).rows) {
        os << row.step;
        for (double v : row.values) os << ',' << format_double(v);
        os << '\n';
    }
    return os.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < report.outputs.size(); ++k) {
        std::ofstream out(dir / ("trial_" + std::to_string(k) + ".csv"), std::ios::binary);
        out << report.trial_csv(k);
        if (!out) throw std::runtime_error("failed writing trial CSV in " + dir.string());
    }
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << report.summary().dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing summary.json in " + dir.string());
}

}  // namespace resample
