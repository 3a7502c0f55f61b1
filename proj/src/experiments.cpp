// The experiment registry. Each entry reproduces one result end to end and
// machine-checks it; the acceptance binary and the CLI both run these.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "resample/attacks.hpp"
#include "resample/harness.hpp"
#include "resample/table_games.hpp"

namespace resample {

namespace {

// Frozen constants. Each was set once from a pilot run and never retuned
// against the seeds it is checked on.
constexpr double kBinsRecourseFactor = 4.0;          // recourse <= 4 n ln n
constexpr double kStaticCongestionFactor = 1.0;      // max <= C l ln n
constexpr double kDynamicCongestionFactor = 0.25;    // max <= C ln T ln n l
constexpr double kPagerankHistoryFactor = 1.0;       // estimate <= C ln T max_hist
constexpr double kPagerankStaticError = 0.2;
constexpr double kGatherSuccessRate = 0.9;
constexpr double kTreeSeparation = 1.5;
constexpr double kStarTolerance = 0.01;
constexpr double kTableTvLimit = 0.05;

class FnRunner final : public Runner {
   public:
    using TrialFn = std::function<TrialOutput(std::uint64_t, std::uint64_t)>;
    using FinishFn = std::function<Outcome(const std::vector<TrialOutput>&)>;
    FnRunner(TrialFn t, FinishFn f) : trial_(std::move(t)), finish_(std::move(f)) {}
    TrialOutput trial(std::uint64_t k, std::uint64_t seed) const override { return trial_(k, seed); }
    Outcome finish(const std::vector<TrialOutput>& trials) const override { return finish_(trials); }

   private:
    TrialFn trial_;
    FinishFn finish_;
};

std::unique_ptr<Runner> runner(FnRunner::TrialFn t, FnRunner::FinishFn f) {
    return std::make_unique<FnRunner>(std::move(t), std::move(f));
}

double mean_of(const std::vector<TrialOutput>& ts, const std::string& m) {
    double s = 0.0;
    for (const auto& t : ts) s += t.metrics.at(m);
    return ts.empty() ? 0.0 : s / static_cast<double>(ts.size());
}
double max_of(const std::vector<TrialOutput>& ts, const std::string& m) {
    double x = -HUGE_VAL;
    for (const auto& t : ts) x = std::max(x, t.metrics.at(m));
    return x;
}
double min_of(const std::vector<TrialOutput>& ts, const std::string& m) {
    double x = HUGE_VAL;
    for (const auto& t : ts) x = std::min(x, t.metrics.at(m));
    return x;
}
double sum_of(const std::vector<TrialOutput>& ts, const std::string& m) {
    double s = 0.0;
    for (const auto& t : ts) s += t.metrics.at(m);
    return s;
}

JoinRule parse_rule(const std::string& s) {
    if (s == "plain") return JoinRule::plain;
    if (s == "cuckoo") return JoinRule::cuckoo;
    if (s == "rotation") return JoinRule::rotation;
    throw SchemaError("$.params.rule", "expected plain, cuckoo or rotation");
}

double d(std::uint64_t x) { return static_cast<double>(x); }

// Star ------------------------------------------------------------------------------

Experiment star_exact() {
    Experiment e;
    e.name = "star_exact";
    e.description = "five-vertex star: exact static vs adaptive hit probability, plus Monte Carlo";
    e.anchor = "star gadget: static 37/64 against adaptive 3/4";
    e.criteria = {1};
    e.defaults = {{"samples", 100000}};
    e.columns = {"static_rate", "adaptive_rate"};
    e.make = [](const RunContext& ctx) {
        const auto samples = ctx.u64("samples");
        return runner(
            [samples](std::uint64_t, std::uint64_t seed) {
                const auto est = star_attack_monte_carlo(samples, seed);
                TrialOutput out;
                out.rows.push_back({1, {est.static_rate, est.adaptive_rate}});
                out.metrics = {{"static_rate", est.static_rate}, {"adaptive_rate", est.adaptive_rate}};
                return out;
            },
            [](const std::vector<TrialOutput>& ts) {
                const auto exact = star_attack_exact();
                const double s = boost::rational_cast<double>(exact.static_prob);
                const double a = boost::rational_cast<double>(exact.adaptive_prob);
                Outcome o;
                o.results["static"] = s;
                o.results["adaptive"] = a;
                auto frac = [](const Rational& r) {
                    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
                };
                o.results["static_exact"] = frac(exact.static_prob);
                o.results["adaptive_exact"] = frac(exact.adaptive_prob);
                o.checks.push_back(check_true("static probability is exactly 37/64", exact.static_prob == Rational(37, 64)));
                o.checks.push_back(check_true("adaptive probability is exactly 3/4", exact.adaptive_prob == Rational(3, 4)));
                double dev_s = 0.0, dev_a = 0.0;
                for (const auto& t : ts) {
                    dev_s = std::max(dev_s, std::abs(t.metrics.at("static_rate") - s));
                    dev_a = std::max(dev_a, std::abs(t.metrics.at("adaptive_rate") - a));
                }
                o.checks.push_back(check_at_most("static Monte Carlo deviation", dev_s, kStarTolerance));
                o.checks.push_back(check_at_most("adaptive Monte Carlo deviation", dev_a, kStarTolerance));
                return o;
            });
    };
    return e;
}

// Job-machine -------------------------------------------------------------------------

double jobmachine_bound(SchedulerKind kind, const JobMachinePlan& plan) {
    // Loads of at most L times the scheduler's log factor, with L = 2 the
    // ceiling on target(S).
    if (kind == SchedulerKind::landmark) return 2.0 * std::log2(d(plan.horizon));
    return 2.0 * std::log2(d(plan.n));
}

Experiment jobmachine_attack() {
    Experiment e;
    e.name = "jobmachine_attack";
    e.description = "temporal selection attack on a shared machine S in the job-machine setting";
    e.anchor = "proactive resampling loads S with Omega(sqrt n) jobs while target(S) stays <= 2";
    e.criteria = {2};
    e.defaults = {{"n", 64}, {"window", 0}};
    e.trials = 200;
    e.scheduler = SchedulerKind::proactive;
    e.columns = {"final_load", "max_target", "rounds_over_two", "recourse", "adversarial_samples",
                 "algorithm_samples"};
    e.make = [](const RunContext& ctx) {
        auto plan = std::make_shared<const JobMachinePlan>(build_jobmachine_attack(ctx.u64("n"), ctx.u64("window")));
        const auto kind = ctx.scheduler;
        const double alpha = ctx.alpha;
        return runner(
            [plan, kind, alpha](std::uint64_t, std::uint64_t seed) {
                const auto r = run_jobmachine_trial(*plan, kind, seed, alpha);
                TrialOutput out;
                const std::vector<double> v{d(r.final_load), r.max_target, d(r.rounds_over_two), d(r.recourse),
                                            d(r.adversarial_samples), d(r.algorithm_samples)};
                out.rows.push_back({plan->horizon, v});
                out.metrics = {{"final_load", v[0]}, {"max_target", v[1]}, {"rounds_over_two", v[2]},
                               {"recourse", v[3]}, {"adversarial_samples", v[4]}, {"algorithm_samples", v[5]}};
                return out;
            },
            [plan, kind](const std::vector<TrialOutput>& ts) {
                Outcome o;
                const double load = mean_of(ts, "final_load");
                o.results["mean_final_load"] = load;
                o.results["expected_target_max"] = plan->max_expected_target();
                o.results["realized_target_max"] = max_of(ts, "max_target");
                o.results["horizon"] = plan->horizon;
                o.checks.push_back(check_at_most("designed target(S) trace", plan->max_expected_target(), 2.0));
                if (kind == SchedulerKind::proactive) {
                    o.checks.push_back(check_at_least("mean final load(S)", load, 0.5 * std::sqrt(d(plan->n))));
                } else if (kind != SchedulerKind::none) {
                    o.checks.push_back(check_at_most("mean final load(S)", load, jobmachine_bound(kind, *plan)));
                }
                return o;
            });
    };
    return e;
}

Experiment scheduler_separation() {
    Experiment e;
    e.name = "scheduler_separation";
    e.description = "the job-machine attack under proactive, landmark and GTA on paired seeds";
    e.anchor = "landmark and GTA keep load(S) within L log T and L log n; proactive does not";
    e.criteria = {3};
    e.defaults = {{"n", 64}, {"window", 0}};
    e.trials = 200;
    e.columns = {"proactive_load", "landmark_load", "gta_load"};
    e.make = [](const RunContext& ctx) {
        auto plan = std::make_shared<const JobMachinePlan>(build_jobmachine_attack(ctx.u64("n"), ctx.u64("window")));
        return runner(
            [plan](std::uint64_t, std::uint64_t seed) {
                TrialOutput out;
                std::vector<double> v;
                for (auto kind : {SchedulerKind::proactive, SchedulerKind::landmark, SchedulerKind::gta}) {
                    v.push_back(d(run_jobmachine_trial(*plan, kind, seed, 2.0).final_load));
                }
                out.rows.push_back({plan->horizon, v});
                out.metrics = {{"proactive_load", v[0]}, {"landmark_load", v[1]}, {"gta_load", v[2]}};
                return out;
            },
            [plan](const std::vector<TrialOutput>& ts) {
                Outcome o;
                const double pro = mean_of(ts, "proactive_load");
                const double lm = mean_of(ts, "landmark_load");
                const double gta = mean_of(ts, "gta_load");
                o.results["proactive_mean"] = pro;
                o.results["landmark_mean"] = lm;
                o.results["gta_mean"] = gta;
                o.results["landmark_bound"] = jobmachine_bound(SchedulerKind::landmark, *plan);
                o.results["gta_bound"] = jobmachine_bound(SchedulerKind::gta, *plan);
                o.checks.push_back(
                    check_at_most("landmark mean load(S)", lm, jobmachine_bound(SchedulerKind::landmark, *plan)));
                o.checks.push_back(check_at_most("GTA mean load(S)", gta, jobmachine_bound(SchedulerKind::gta, *plan)));
                o.checks.push_back(check_below("landmark mean against proactive mean", lm, pro));
                o.checks.push_back(check_below("GTA mean against proactive mean", gta, pro));
                return o;
            });
    };
    return e;
}

// Landmarks ---------------------------------------------------------------------------

Experiment landmark_arithmetic() {
    Experiment e;
    e.name = "landmark_arithmetic";
    e.description = "exhaustive landmark set sizes, window maxima and sequence gaps";
    e.anchor = "|landmarks(T)| <= 8 (floor(log2 T) + 4) with unique window maxima";
    e.criteria = {4};
    e.defaults = {{"max_T", 65536}};
    e.audit_every = 256;
    e.columns = {"landmarks", "bound"};
    e.make = [](const RunContext& ctx) {
        const TimeStep max_t = ctx.u64("max_T");
        const std::uint64_t every = ctx.audit_every;
        return runner(
            [max_t, every](std::uint64_t, std::uint64_t) {
                TrialOutput out;
                double size_bad = 0, worst = 0;
                sweep_landmarks(max_t, [&](TimeStep T, std::span<const std::uint32_t>, std::size_t count) {
                    const double bound = 8.0 * (std::floor(std::log2(d(T))) + 4.0);
                    if (d(count) > bound) ++size_bad;
                    worst = std::max(worst, d(count) / bound);
                    if (T % every == 0 || T == max_t) out.rows.push_back({T, {d(count), bound}});
                });
                // Each window [a + 2^i, a + 2^(i+1)] has one element with the
                // most trailing zeros, and landmark_next returns it.
                double window_bad = 0;
                for (TimeStep a = 1; a <= max_t; ++a) {
                    for (unsigned i = 0; a + (TimeStep{2} << i) <= max_t; ++i) {
                        const TimeStep lo = a + (TimeStep{1} << i), hi = a + (TimeStep{2} << i);
                        unsigned z = 0;
                        while ((hi >> (z + 1)) > ((lo - 1) >> (z + 1))) ++z;
                        const TimeStep multiples = (hi >> z) - ((lo - 1) >> z);
                        const TimeStep pick = ((lo + (TimeStep{1} << z) - 1) >> z) << z;
                        if (multiples != 1 || landmark_next(a, i) != pick) ++window_bad;
                    }
                }
                double gap_bad = 0;
                for (TimeStep t0 = 1; t0 <= max_t; ++t0) {
                    TimeStep prev = t0;
                    unsigned i = 1;
                    for (TimeStep t : landmark_sequence(t0, max_t)) {
                        const TimeStep gap = t - prev;
                        if (gap < (TimeStep{1} << i) || gap > (TimeStep{2} << i)) ++gap_bad;
                        prev = t;
                        ++i;
                    }
                }
                out.metrics = {{"size_violations", size_bad}, {"worst_size_ratio", worst},
                               {"window_violations", window_bad}, {"gap_violations", gap_bad}};
                return out;
            },
            [max_t](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["max_T"] = max_t;
                o.results["worst_size_ratio"] = max_of(ts, "worst_size_ratio");
                o.checks.push_back(check_at_most("T with too many landmarks", sum_of(ts, "size_violations"), 0));
                o.checks.push_back(check_at_most("windows without a unique maximum", sum_of(ts, "window_violations"), 0));
                o.checks.push_back(check_at_most("sequence gaps outside [2^i, 2^(i+1)]", sum_of(ts, "gap_violations"), 0));
                return o;
            });
    };
    return e;
}

// GTA budgets -------------------------------------------------------------------------

struct GtaTrace {
    std::uint64_t q = 0;
    std::uint64_t algorithm = 0;
    std::size_t max_groups = 0;
};

// Adversarial samples until q are spent: one to four per round, half the time
// taken from the current largest group to keep splitting it.
GtaTrace drive_gta(double alpha, std::size_t n, std::uint64_t q, RandomSource& rng, std::uint64_t every,
                   std::vector<MetricRow>* rows) {
    GtaScheduler gta(alpha);
    const TimeStep horizon = q + 2;
    gta.start(n, horizon);
    GtaTrace out;
    out.max_groups = gta.group_count();
    std::vector<ObjectId> largest;
    for (TimeStep t = 2; out.q < q; ++t) {
        if ((t - 2) % 64 == 0) {
            largest.clear();
            for (const auto& [origin, members] : gta.groups()) {
                if (members.size() > largest.size()) largest = members;
            }
        }
        std::vector<ObjectId> adv;
        const auto want = std::min<std::uint64_t>(1 + rng.below(4), q - out.q);
        for (std::uint64_t i = 0; i < want; ++i) {
            if (rng.bernoulli(0.5) && !largest.empty()) {
                adv.push_back(largest[rng.below(largest.size())]);
            } else {
                adv.push_back(static_cast<ObjectId>(rng.below(n)));
            }
        }
        std::sort(adv.begin(), adv.end());
        adv.erase(std::unique(adv.begin(), adv.end()), adv.end());
        out.q += adv.size();
        for (ObjectId u : gta.on_round(t, adv)) {
            if (!std::binary_search(adv.begin(), adv.end(), u)) ++out.algorithm;
        }
        out.max_groups = std::max(out.max_groups, gta.group_count());
        if (rows && t % every == 0) rows->push_back({t, {alpha, d(gta.group_count()), d(out.q), d(out.algorithm)}});
    }
    return out;
}

Experiment gta_budget_experiment() {
    Experiment e;
    e.name = "gta_budget";
    e.description = "GTA resample budgets and group counts on random adaptive traces";
    e.anchor = "GTA pays q (log_{3/2} n + 4) samples with at most floor(log2 n) + 1 groups";
    e.criteria = {5};
    e.defaults = {{"max_n", 1024}, {"max_q", 10000}};
    e.trials = 100;
    e.audit_every = 500;
    e.columns = {"alpha", "groups", "q", "algorithm_samples"};
    e.make = [](const RunContext& ctx) {
        const auto max_n = ctx.u64("max_n");
        const auto max_q = ctx.u64("max_q");
        const auto every = ctx.audit_every;
        return runner(
            [max_n, max_q, every](std::uint64_t k, std::uint64_t seed) {
                RandomSource rng(seed, streams::adversary);
                const std::size_t n = 2 + rng.below(max_n - 1);
                const std::uint64_t q = 1 + rng.below(max_q);
                TrialOutput out;
                const auto basic = drive_gta(2.0, n, q, rng, every, &out.rows);
                const double basic_budget = d(basic.q) * (std::log(d(n)) / std::log(1.5) + 4.0);
                // Parameterized variant with alpha = n^eps.
                const double eps = 0.25 * d(1 + k % 3);
                const double alpha = std::max(std::pow(d(n), eps), 1.0 + 1e-9);
                const auto param = drive_gta(alpha, n, q, rng, every, &out.rows);
                out.metrics = {
                    {"n", d(n)},
                    {"q", d(basic.q)},
                    {"basic_budget_ratio", d(basic.algorithm) / std::max(basic_budget, 1e-300)},
                    {"basic_group_excess", d(basic.max_groups) - d(gta_group_bound(2.0, n))},
                    {"param_budget_ratio", d(param.algorithm) / std::max(gta_budget(alpha, n, param.q), 1e-300)},
                    {"param_group_excess", d(param.max_groups) - d(gta_group_bound(alpha, n))},
                };
                return out;
            },
            [](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["basic_budget_ratio_max"] = max_of(ts, "basic_budget_ratio");
                o.results["param_budget_ratio_max"] = max_of(ts, "param_budget_ratio");
                o.checks.push_back(check_at_most("basic samples / q(log_{3/2} n + 4)", max_of(ts, "basic_budget_ratio"), 1));
                o.checks.push_back(check_at_most("basic groups over floor(log2 n) + 1", max_of(ts, "basic_group_excess"), 0));
                o.checks.push_back(check_at_most("alpha = n^eps samples / budget", max_of(ts, "param_budget_ratio"), 1));
                o.checks.push_back(
                    check_at_most("alpha = n^eps groups over floor(log_alpha n) + 1", max_of(ts, "param_group_excess"), 0));
                return o;
            });
    };
    return e;
}

// Balls and bins ------------------------------------------------------------------------

Experiment bins_recourse() {
    Experiment e;
    e.name = "bins_recourse";
    e.description = "heaviest-bin deletion until one bin is left";
    e.anchor = "balls and bins total recourse O(n log n)";
    e.criteria = {6};
    e.defaults = {{"n", 512}};
    e.trials = 20;
    e.columns = {"total_recourse", "max_step", "bound"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n");
        const double bound = kBinsRecourseFactor * d(n) * std::log(d(n));
        return runner(
            [n, bound](std::uint64_t, std::uint64_t seed) {
                const auto r = run_heaviest_bin_attack(n, seed);
                TrialOutput out;
                out.rows.push_back({n, {d(r.total_recourse), d(r.max_step), bound}});
                out.metrics = {{"total_recourse", d(r.total_recourse)}, {"max_step", d(r.max_step)}};
                return out;
            },
            [bound](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["bound"] = bound;
                o.results["max_recourse"] = max_of(ts, "total_recourse");
                o.checks.push_back(check_at_most("worst total recourse", max_of(ts, "total_recourse"), bound));
                return o;
            });
    };
    return e;
}

// Participant groups ---------------------------------------------------------------------

Experiment cuckoo_majority() {
    Experiment e;
    e.name = "cuckoo_majority";
    e.description = "malicious rejoin pressure on group 0 under the cuckoo rule";
    e.anchor = "cuckoo rule keeps an honest majority in every group";
    e.criteria = {7};
    e.defaults = {{"n", 4096}, {"g", 16}, {"beta", 0.1}, {"k", 4}, {"rounds", 100000}, {"rule", "cuckoo"}, {"honest_churn", 1}};
    e.trials = 20;
    e.columns = {"max_fraction", "max_target_fraction", "ever_majority"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), g = ctx.u64("g"), k = ctx.u64("k"), rounds = ctx.u64("rounds");
        const auto churn = ctx.u64("honest_churn");
        const double beta = ctx.num("beta");
        const JoinRule rule = parse_rule(ctx.str("rule"));
        return runner(
            [=](std::uint64_t, std::uint64_t seed) {
                const auto r = honest_majority_run(n, g, beta, k, rounds, rule, seed, churn);
                TrialOutput out;
                out.rows.push_back({rounds, {r.max_fraction, r.max_target_fraction, r.ever_majority ? 1.0 : 0.0}});
                out.metrics = {{"max_fraction", r.max_fraction},
                               {"max_target_fraction", r.max_target_fraction},
                               {"ever_majority", r.ever_majority ? 1.0 : 0.0},
                               {"tallies_ok", r.tallies_ok ? 1.0 : 0.0},
                               {"min_group_size", d(r.min_group_size)}};
                return out;
            },
            [](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["max_fraction"] = max_of(ts, "max_fraction");
                o.results["min_group_size"] = min_of(ts, "min_group_size");
                o.checks.push_back(check_at_most("seeds reaching a malicious majority", sum_of(ts, "ever_majority"), 0));
                o.checks.push_back(check_at_least("seeds with consistent tallies", min_of(ts, "tallies_ok"), 1));
                return o;
            });
    };
    return e;
}

Experiment gather_attack_experiment() {
    Experiment e;
    e.name = "gather_attack";
    e.description = "n/(2kg) participants gather in one group by rejoining";
    e.anchor = "the gather attack succeeds within 12n/g steps";
    e.criteria = {8};
    e.defaults = {{"n", 4096}, {"g", 16}, {"beta", 0.1}, {"k", 4}, {"rule", "cuckoo"}};
    e.trials = 50;
    e.audit_every = 16;
    e.columns = {"inside", "malicious_in_target"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), g = ctx.u64("g"), k = ctx.u64("k");
        const double beta = ctx.num("beta");
        const JoinRule rule = parse_rule(ctx.str("rule"));
        const std::size_t q_size = std::max<std::size_t>(1, n / (2 * k * g));
        const std::uint64_t budget = (12 * n + g - 1) / g;
        const auto every = ctx.audit_every;
        return runner(
            [=](std::uint64_t, std::uint64_t seed) {
                RandomSource setup(seed, streams::setup), rng(seed, streams::adversary);
                GroupState gs(n, g, beta, setup);
                std::vector<std::size_t> q(q_size);
                std::iota(q.begin(), q.end(), 0);
                const auto r = gather_attack(gs, q, 0, budget, rule, k, rng);
                TrialOutput out;
                for (std::size_t i = 0; i < r.inside.size(); ++i) {
                    if ((i + 1) % every == 0 || i + 1 == r.inside.size()) {
                        out.rows.push_back({i + 1, {d(r.inside[i]), d(r.malicious_in_target[i])}});
                    }
                }
                out.metrics = {{"success", r.success ? 1.0 : 0.0},
                               {"rounds", d(r.rounds)},
                               {"tallies_ok", r.tallies_ok ? 1.0 : 0.0}};
                return out;
            },
            [q_size, budget](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["q_size"] = q_size;
                o.results["budget"] = budget;
                o.results["success_rate"] = mean_of(ts, "success");
                o.checks.push_back(check_at_least("success rate", mean_of(ts, "success"), kGatherSuccessRate));
                o.checks.push_back(check_at_least("seeds with consistent tallies", min_of(ts, "tallies_ok"), 1));
                return o;
            });
    };
    return e;
}

// Walks -----------------------------------------------------------------------------------

Experiment static_congestion() {
    Experiment e;
    e.name = "static_congestion";
    e.description = "fresh walk sets on one random regular graph";
    e.anchor = "static walks: mean edge congestion at most l, max O(l log n)";
    e.criteria = {9};
    e.defaults = {{"n", 512}, {"degree", 4}, {"k", 2}, {"length", 8}};
    e.trials = 1000;
    e.columns = {"max_congestion", "mean_congestion"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), deg = ctx.u64("degree"), k = ctx.u64("k"), l = ctx.u64("length");
        RandomSource setup(ctx.config.seed, streams::setup);
        auto g = std::make_shared<const DynGraph>(random_regular_graph(n, deg, setup));
        const double bound = kStaticCongestionFactor * d(l) * std::log(d(n));
        return runner(
            [g, k, l](std::uint64_t, std::uint64_t seed) {
                RandomSource rng(seed, streams::realization);
                std::vector<Walk> walks;
                for (Vertex v = 0; v < g->vertex_count(); ++v) {
                    for (std::size_t i = 0; i < k; ++i) walks.push_back(sample_walk(*g, v, l, rng));
                }
                const auto s = summarize(*g, count_traversals(*g, walks));
                TrialOutput out;
                out.rows.push_back({1, {d(s.max), s.mean}});
                out.metrics = {{"max_congestion", d(s.max)}, {"mean_congestion", s.mean}};
                return out;
            },
            [bound, l](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["max_bound"] = bound;
                o.results["worst_max"] = max_of(ts, "max_congestion");
                o.results["mean_of_means"] = mean_of(ts, "mean_congestion");
                o.checks.push_back(check_at_most("worst max congestion", max_of(ts, "max_congestion"), bound));
                o.checks.push_back(check_at_most("mean congestion", mean_of(ts, "mean_congestion"), d(l) + 1e-9));
                return o;
            });
    };
    return e;
}

// Deletes the most congested edge whose endpoints can spare it, else inserts.
class HeavyEdgeAdversary final : public GraphUpdateAdversary {
   public:
    HeavyEdgeAdversary(DynGraph& g, WalkStore& s, std::size_t lo, std::size_t hi, std::uint64_t seed)
        : GraphUpdateAdversary(g, s), lo_(lo), hi_(hi), rng_(seed, streams::adversary) {}

   protected:
    std::optional<GraphUpdate> choose(const History<Walk>&) override {
        auto& g = graph();
        EdgeKey best = 0;
        std::uint32_t best_c = 0;
        for (const auto& [key, c] : store().congestion_map()) {
            const auto [u, v] = DynGraph::endpoints(key);
            if (g.degree(u) > lo_ && g.degree(v) > lo_ && (c > best_c || (c == best_c && key < best))) {
                best = key;
                best_c = c;
            }
        }
        if (best_c > 0) {
            const auto [u, v] = DynGraph::endpoints(best);
            return GraphUpdate{GraphUpdate::Kind::remove, u, v};
        }
        for (int tries = 0; tries < 200; ++tries) {
            const auto u = static_cast<Vertex>(rng_.below(g.vertex_count()));
            const auto v = static_cast<Vertex>(rng_.below(g.vertex_count()));
            if (u != v && !g.has_edge(u, v) && g.degree(u) < hi_ && g.degree(v) < hi_) {
                return GraphUpdate{GraphUpdate::Kind::insert, u, v};
            }
        }
        return std::nullopt;
    }

   private:
    std::size_t lo_, hi_;
    RandomSource rng_;
};

Experiment dynamic_congestion() {
    Experiment e;
    e.name = "dynamic_congestion";
    e.description = "heaviest-edge deletions against walks kept by a resampling scheduler";
    e.anchor = "landmark resampling keeps congestion within O(log T log n l)";
    e.criteria = {10};
    e.defaults = {{"n", 512}, {"degree", 4}, {"k", 2}, {"length", 8}, {"min_degree", 2}};
    e.trials = 5;
    e.scheduler = SchedulerKind::landmark;
    e.takes_horizon = true;
    e.audit_every = 16;
    e.columns = {"max_congestion", "mean_congestion", "bound"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), deg = ctx.u64("degree"), k = ctx.u64("k"), l = ctx.u64("length");
        const auto lo = ctx.u64("min_degree");
        const TimeStep T = ctx.horizon.value_or(4096);
        const auto kind = ctx.scheduler;
        const double alpha = ctx.alpha;
        const auto every = ctx.audit_every;
        const double bound = kDynamicCongestionFactor * std::log(d(T)) * std::log(d(n)) * d(l);
        return runner(
            [=](std::uint64_t, std::uint64_t seed) {
                RandomSource setup(seed, streams::setup);
                DynGraph g = random_regular_graph(n, deg, setup);
                WalkStore store(g, k, WalkLength{l, std::nullopt});
                auto sched = make_scheduler(kind, alpha);
                World<Walk> w(store.distributions(), *sched, {T, seed, HistoryMode::last_row}, store.listener());
                HeavyEdgeAdversary adv(g, store, lo, deg, seed);
                TrialOutput out;
                double worst = d(store.congestion_summary().max);
                for (TimeStep t = 2; t <= T; ++t) {
                    w.step(adv, t);
                    if (t % every == 0 || t == T) {
                        const auto s = store.congestion_summary();
                        worst = std::max(worst, d(s.max));
                        out.rows.push_back({t, {d(s.max), s.mean, bound}});
                    }
                }
                out.metrics = {{"worst_max", worst},
                               {"audit_ok", store.audit() ? 1.0 : 0.0},
                               {"deletions", d(adv.deletions())}};
                return out;
            },
            [bound](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["bound"] = bound;
                o.results["worst_max"] = max_of(ts, "worst_max");
                o.checks.push_back(check_at_most("worst audited max congestion", max_of(ts, "worst_max"), bound));
                o.checks.push_back(check_at_least("incremental counts match a recount", min_of(ts, "audit_ok"), 1));
                return o;
            });
    };
    return e;
}

// Tree gadget ----------------------------------------------------------------------------

Experiment tree_separation() {
    Experiment e;
    e.name = "tree_separation";
    e.description = "ternary tree gadget: adaptive cuts, direct and replayed under proactive resampling";
    e.anchor = "adaptive walk cutting beats every static draw on the tree gadget";
    e.criteria = {11};
    e.defaults = {{"upper", 1}, {"lower", 3}, {"clique", 64}};
    e.trials = 10000;
    e.columns = {"direct_hits", "replay_hits", "subtrees"};
    e.make = [](const RunContext& ctx) {
        auto replay = std::make_shared<const ReplayGadget>(
            build_replay_gadget(ctx.u64("upper"), ctx.u64("lower"), ctx.u64("clique")));
        return runner(
            [replay](std::uint64_t, std::uint64_t seed) {
                RandomSource rng(seed, streams::adversary);
                const auto direct = run_tree_attack_direct(replay->tree, rng);
                const auto rep = run_replay_trial(*replay, seed);
                const double dh = d(std::count(direct.success.begin(), direct.success.end(), true));
                const double rh = d(std::count(rep.success.begin(), rep.success.end(), true));
                TrialOutput out;
                out.rows.push_back({1, {dh, rh, d(direct.success.size())}});
                out.metrics = {{"direct_hits", dh}, {"replay_hits", rh}, {"subtrees", d(direct.success.size())}};
                return out;
            },
            [replay](const std::vector<TrialOutput>& ts) {
                Outcome o;
                const double runs = sum_of(ts, "subtrees");
                const double direct = sum_of(ts, "direct_hits") / runs;
                const double rep = sum_of(ts, "replay_hits") / runs;
                const double static_all = tree_static_probability(replay->tree, false);
                const double static_leaves = tree_static_probability(replay->tree, true);
                o.results["direct_rate"] = direct;
                o.results["replay_rate"] = rep;
                o.results["static_all"] = static_all;
                o.results["static_leaves"] = static_leaves;
                o.results["adaptive_exact"] = tree_adaptive_probability(replay->tree, false);
                o.checks.push_back(check_at_least("direct hit rate", direct, kTreeSeparation * static_all));
                o.checks.push_back(check_at_least("replay hit rate", rep, kTreeSeparation * static_leaves));
                return o;
            });
    };
    return e;
}

// PageRank ---------------------------------------------------------------------------------

// Pushes PageRank mass toward vertex 0: deletes the busiest edge not ending at
// 0 (keeping out-degree >= 1) and adds edges into 0, alternately.
class PagerankAdversary final : public GraphUpdateAdversary {
   public:
    PagerankAdversary(DynGraph& g, WalkStore& s, std::uint64_t seed)
        : GraphUpdateAdversary(g, s), rng_(seed, streams::adversary) {}

   protected:
    std::optional<GraphUpdate> choose(const History<Walk>& h) override {
        auto& g = graph();
        if (h.next_time() % 2 == 0) {
            EdgeKey best = 0;
            std::uint32_t best_c = 0;
            for (const auto& [key, c] : store().congestion_map()) {
                const auto [u, v] = DynGraph::endpoints(key);
                if (v != 0 && g.has_edge(u, v) && g.degree(u) > 1 && (c > best_c || (c == best_c && key < best))) {
                    best = key;
                    best_c = c;
                }
            }
            if (best_c > 0) {
                const auto [u, v] = DynGraph::endpoints(best);
                return GraphUpdate{GraphUpdate::Kind::remove, u, v};
            }
        }
        for (int tries = 0; tries < 50; ++tries) {
            const auto u = static_cast<Vertex>(1 + rng_.below(g.vertex_count() - 1));
            if (!g.has_edge(u, 0)) return GraphUpdate{GraphUpdate::Kind::insert, u, 0};
        }
        return std::nullopt;
    }

   private:
    RandomSource rng_;
};

Experiment pagerank_experiment() {
    Experiment e;
    e.name = "pagerank";
    e.description = "walk-based PageRank: static accuracy, then estimates under adversarial updates";
    e.anchor = "estimates stay within O(log T) of the maximal historical PageRank";
    e.criteria = {12};
    e.defaults = {{"n", 100}, {"lambda", 0.2}, {"out_degree", 3}, {"walk_factor", 50}};
    e.trials = 3;
    e.scheduler = SchedulerKind::landmark;
    e.takes_horizon = true;
    e.audit_every = 16;
    e.columns = {"max_ratio", "target_estimate", "target_oracle"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), out_deg = ctx.u64("out_degree"), factor = ctx.u64("walk_factor");
        const double lambda = ctx.num("lambda");
        const std::size_t k = factor * static_cast<std::size_t>(std::ceil(std::log(d(n))));
        const TimeStep T = ctx.horizon.value_or(1024);
        const auto kind = ctx.scheduler;
        const double alpha = ctx.alpha;
        const auto every = ctx.audit_every;
        const double limit = kPagerankHistoryFactor * std::log(d(T));
        return runner(
            [=](std::uint64_t, std::uint64_t seed) {
                RandomSource setup(seed, streams::setup);
                DynGraph g = random_out_graph(n, out_deg, setup);
                WalkStore store(g, k, WalkLength{0, lambda});
                auto sched = make_scheduler(kind, alpha);
                World<Walk> w(store.distributions(), *sched, {T, seed, HistoryMode::last_row}, store.listener());
                auto oracle = pagerank_oracle(g, lambda);
                double static_err = 0.0;
                for (Vertex v = 0; v < n; ++v) {
                    if (oracle[v] >= 2.0 / d(n)) {
                        static_err = std::max(static_err, std::abs(pagerank_estimate(store, v) - oracle[v]) / oracle[v]);
                    }
                }
                std::vector<double> hist = oracle;
                PagerankAdversary adv(g, store, seed);
                TrialOutput out;
                double worst = 0.0;
                for (TimeStep t = 2; t <= T; ++t) {
                    w.step(adv, t);
                    oracle = pagerank_oracle(g, lambda);
                    for (Vertex v = 0; v < n; ++v) hist[v] = std::max(hist[v], oracle[v]);
                    if (t % every == 0 || t == T) {
                        double ratio = 0.0;
                        for (Vertex v = 0; v < n; ++v) ratio = std::max(ratio, pagerank_estimate(store, v) / hist[v]);
                        worst = std::max(worst, ratio);
                        out.rows.push_back({t, {ratio, pagerank_estimate(store, 0), oracle[0]}});
                    }
                }
                out.metrics = {{"static_error", static_err}, {"worst_ratio", worst}};
                return out;
            },
            [limit](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["ratio_limit"] = limit;
                o.results["worst_ratio"] = max_of(ts, "worst_ratio");
                o.results["worst_static_error"] = max_of(ts, "static_error");
                o.checks.push_back(check_at_most("static relative error", max_of(ts, "static_error"), kPagerankStaticError));
                o.checks.push_back(check_at_most("estimate / max historical PageRank", max_of(ts, "worst_ratio"), limit));
                return o;
            });
    };
    return e;
}

// Palettes -----------------------------------------------------------------------------------

Experiment palette_experiment() {
    Experiment e;
    e.name = "palette";
    e.description = "palette sparsification kept by parameterized GTA under edge churn";
    e.anchor = "O(Delta / eps) colors in use with list-colorable batches";
    e.criteria = {13};
    e.defaults = {{"n", 200}, {"delta", 20}, {"epsilon", 0.5}, {"insert_bias", 0.75}};
    e.trials = 3;
    e.takes_horizon = true;
    e.audit_every = 100;
    e.columns = {"ranges_in_use", "colors_in_use", "batches", "colorable", "not_colorable", "indeterminate"};
    e.make = [](const RunContext& ctx) {
        const auto n = ctx.u64("n"), delta = ctx.u64("delta");
        const double eps = ctx.num("epsilon"), bias = ctx.num("insert_bias");
        const TimeStep T = ctx.horizon.value_or(2000);
        const auto every = ctx.audit_every;
        const double range_cap = std::ceil(1.0 / eps) + 1.0;
        return runner(
            [=](std::uint64_t, std::uint64_t seed) {
                PaletteParams p;
                p.n = n;
                p.delta = delta;
                p.epsilon = eps;
                PaletteMaintenance pm(DynGraph(n, false), p, T, seed);
                RandomSource rng(seed, streams::adversary);
                TrialOutput out;
                double max_ranges = d(pm.state().ranges_in_use());
                double failed = 0.0;
                for (TimeStep t = 2; t <= T; ++t) {
                    const auto& g = pm.graph();
                    std::optional<GraphUpdate> up;
                    for (int tries = 0; tries < 50 && !up; ++tries) {
                        const auto u = static_cast<Vertex>(rng.below(n));
                        auto v = static_cast<Vertex>(rng.below(n));
                        // Half the time aim inside u's batch, where colors clash.
                        if (rng.bernoulli(0.5)) {
                            for (const auto& batch : pm.state().batches()) {
                                if (std::find(batch.begin(), batch.end(), u) != batch.end()) {
                                    v = batch[rng.below(batch.size())];
                                    break;
                                }
                            }
                        }
                        if (u == v) continue;
                        if (g.has_edge(u, v)) {
                            if (!rng.bernoulli(bias)) up = GraphUpdate{GraphUpdate::Kind::remove, u, v};
                        } else if (g.degree(u) < delta && g.degree(v) < delta) {
                            up = GraphUpdate{GraphUpdate::Kind::insert, u, v};
                        }
                    }
                    pm.step(up);
                    max_ranges = std::max(max_ranges, d(pm.state().ranges_in_use()));
                    if (t % every == 0 || t == T) {
                        const auto a = pm.audit();
                        failed += d(a.not_colorable + a.indeterminate);
                        out.rows.push_back({t,
                                            {d(a.ranges_in_use), d(a.colors_in_use), d(a.batches), d(a.colorable),
                                             d(a.not_colorable), d(a.indeterminate)}});
                    }
                }
                const double budget = gta_budget(pm.alpha(), n, pm.adversarial_samples());
                out.metrics = {{"max_ranges", max_ranges},
                               {"failed_batches", failed},
                               {"algorithm_samples", d(pm.algorithm_samples())},
                               {"budget_ratio", d(pm.algorithm_samples()) / std::max(budget, 1e-300)},
                               {"max_degree", d(pm.graph().max_degree())}};
                return out;
            },
            [range_cap](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["range_cap"] = range_cap;
                o.results["max_ranges"] = max_of(ts, "max_ranges");
                o.checks.push_back(check_at_most("ranges in use", max_of(ts, "max_ranges"), range_cap));
                o.checks.push_back(check_at_most("batches not list-colorable", sum_of(ts, "failed_batches"), 0));
                o.checks.push_back(check_at_most("palette resamples / budget", max_of(ts, "budget_ratio"), 1));
                return o;
            });
    };
    return e;
}

// Table games --------------------------------------------------------------------------------

Experiment table_games_experiment() {
    Experiment e;
    e.name = "table_games";
    e.description = "live worlds against their table-game translations, two coins";
    e.anchor = "table games induce the same joint distribution as the live setting";
    e.criteria = {14};
    e.defaults = {{"samples", 100000}, {"horizon", 3}};
    e.columns = {"tv_gta", "noise_gta", "tv_landmark", "noise_landmark", "tv_proactive", "noise_proactive"};
    e.make = [](const RunContext& ctx) {
        const auto samples = ctx.u64("samples");
        const TimeStep T = ctx.u64("horizon");
        return runner(
            [samples, T](std::uint64_t, std::uint64_t seed) {
                TrialOutput out;
                std::vector<double> row;
                for (auto kind : {SchedulerKind::gta, SchedulerKind::landmark, SchedulerKind::proactive}) {
                    const auto rep = simulate_equivalence(coin_setup(kind, T), samples,
                                                          derive_seed(seed, static_cast<std::uint64_t>(kind)));
                    const std::string name(to_string(kind));
                    row.push_back(rep.tv);
                    row.push_back(rep.noise_bound);
                    out.metrics["tv_" + name] = rep.tv;
                    out.metrics["noise_" + name] = rep.noise_bound;
                    out.metrics["illegal_" + name] = d(samples - rep.legal_selections);
                    out.metrics["origins_outside_" + name] = rep.live_origins_fixed ? 0.0 : 1.0;
                }
                out.rows.push_back({T, row});
                return out;
            },
            [](const std::vector<TrialOutput>& ts) {
                Outcome o;
                for (const char* name : {"gta", "landmark", "proactive"}) {
                    o.results[std::string("tv_") + name] = max_of(ts, std::string("tv_") + name);
                    o.results[std::string("noise_") + name] = max_of(ts, std::string("noise_") + name);
                }
                o.checks.push_back(check_at_most("GTA total variation", max_of(ts, "tv_gta"), kTableTvLimit));
                o.checks.push_back(check_at_most("landmark total variation", max_of(ts, "tv_landmark"), kTableTvLimit));
                o.checks.push_back(check_at_most("illegal selections",
                                                 sum_of(ts, "illegal_gta") + sum_of(ts, "illegal_landmark") +
                                                     sum_of(ts, "illegal_proactive"),
                                                 0));
                o.checks.push_back(
                    check_at_most("live landmark origins outside the fixed columns", sum_of(ts, "origins_outside_landmark"), 0));
                return o;
            });
    };
    return e;
}

// Charging sums -----------------------------------------------------------------------------

Experiment charging_sum() {
    Experiment e;
    e.name = "charging_sum";
    e.description = "random nested families with elements charged at most twice";
    e.anchor = "sum |S_i| / |U_i| = O(log n) for nested charging";
    e.criteria = {15};
    e.defaults = {{"max_n", 4096}};
    e.trials = 1000;
    e.columns = {"n", "sets", "sum", "bound"};
    e.make = [](const RunContext& ctx) {
        const auto max_n = ctx.u64("max_n");
        return runner(
            [max_n](std::uint64_t, std::uint64_t seed) {
                RandomSource rng(seed, streams::setup);
                const std::size_t n = 1 + rng.below(max_n);
                std::vector<std::uint32_t> alive(n);
                std::iota(alive.begin(), alive.end(), 0u);
                rng.shuffle(alive);
                // U_i shrinks by a random block R_i. S_i holds R_i and, with
                // some probability per element, part of R_{i+1}, so every
                // element is charged at most twice.
                std::vector<std::vector<std::uint32_t>> universes, removed;
                while (!alive.empty()) {
                    universes.push_back(alive);
                    const std::size_t cut = 1 + rng.below(std::max<std::size_t>(1, alive.size() / (1 + rng.below(8))));
                    const std::size_t take = std::min(cut, alive.size());
                    removed.emplace_back(alive.end() - static_cast<std::ptrdiff_t>(take), alive.end());
                    alive.resize(alive.size() - take);
                }
                std::vector<std::vector<std::uint32_t>> charged(universes.size());
                const double share = rng.uniform01();
                for (std::size_t i = 0; i < universes.size(); ++i) {
                    charged[i] = removed[i];
                    if (i + 1 < universes.size()) {
                        for (auto x : removed[i + 1]) {
                            if (rng.bernoulli(share)) charged[i].push_back(x);
                        }
                    }
                }
                const double sum = nested_charging_sum(universes, charged);
                const double bound = 2.0 * harmonic(n);
                TrialOutput out;
                out.rows.push_back({1, {d(n), d(universes.size()), sum, bound}});
                out.metrics = {{"ratio", sum / bound}, {"n", d(n)}};
                return out;
            },
            [](const std::vector<TrialOutput>& ts) {
                Outcome o;
                o.results["worst_ratio"] = max_of(ts, "ratio");
                o.checks.push_back(check_at_most("charging sum / 2 H_n", max_of(ts, "ratio"), 1.0));
                return o;
            });
    };
    return e;
}

}  // namespace

const std::vector<Experiment>& registry() {
    static const std::vector<Experiment> all = {
        star_exact(),         jobmachine_attack(),  scheduler_separation(),   landmark_arithmetic(),
        gta_budget_experiment(), bins_recourse(),   cuckoo_majority(),        gather_attack_experiment(),
        static_congestion(),  dynamic_congestion(), tree_separation(),        pagerank_experiment(),
        palette_experiment(), table_games_experiment(), charging_sum(),
    };
    return all;
}

}  // namespace resample
