#include "resample/attacks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <string>

namespace resample {

// Star -----------------------------------------------------------------------------

StarGraph::StarGraph() {
    graph.add_edge(top, center);
    for (Vertex leaf : leaves) graph.add_edge(center, leaf);
}

namespace {

struct WeightedWalk {
    Walk walk;
    Rational p;
};

void enumerate_walks(const DynGraph& g, Walk& prefix, Rational p, std::size_t remaining, std::vector<WeightedWalk>& out) {
    const Vertex at = prefix.path.back();
    const auto next = g.neighbors(at);
    if (remaining == 0 || next.empty()) {
        out.push_back({prefix, p});
        return;
    }
    const Rational step(1, static_cast<std::int64_t>(next.size()));
    for (Vertex v : next) {
        prefix.path.push_back(v);
        enumerate_walks(g, prefix, p * step, remaining - 1, out);
        prefix.path.pop_back();
    }
}

std::vector<WeightedWalk> all_walks(const DynGraph& g, Vertex v, std::size_t length) {
    Walk w;
    w.path.push_back(v);
    std::vector<WeightedWalk> out;
    enumerate_walks(g, w, Rational(1), length, out);
    return out;
}

bool crosses_star_edge(const Walk& w) {
    for (std::size_t i = 0; i + 1 < w.path.size(); ++i) {
        const auto a = w.path[i], b = w.path[i + 1];
        if ((a == StarGraph::center && b == StarGraph::top) || (a == StarGraph::top && b == StarGraph::center)) {
            return true;
        }
    }
    return false;
}

constexpr std::size_t kStarWalkLength = 2;

Rational star_adaptive_from(const DynGraph& g, std::size_t leaf_index) {
    if (leaf_index == 3) return Rational(0);
    const Vertex leaf = StarGraph::leaves[leaf_index];
    DynGraph cut = g;
    cut.remove_edge(StarGraph::center, leaf);
    const Rational after_failure = star_adaptive_from(cut, leaf_index + 1);
    Rational total(0);
    for (const auto& [walk, p] : all_walks(g, leaf, kStarWalkLength)) {
        total += crosses_star_edge(walk) ? p : p * after_failure;
    }
    return total;
}

}  // namespace

Rational exact_walk_probability(const DynGraph& g, Vertex v, std::size_t length,
                                const std::function<bool(const Walk&)>& hit) {
    Rational total(0);
    for (const auto& [walk, p] : all_walks(g, v, length)) {
        if (hit(walk)) total += p;
    }
    return total;
}

StarExact star_attack_exact() {
    const StarGraph star;
    StarExact out;
    // Joint outcomes of the three simultaneous walks.
    const auto wa = all_walks(star.graph, StarGraph::leaves[0], kStarWalkLength);
    const auto wb = all_walks(star.graph, StarGraph::leaves[1], kStarWalkLength);
    const auto wc = all_walks(star.graph, StarGraph::leaves[2], kStarWalkLength);
    Rational joint(0);
    for (const auto& a : wa) {
        for (const auto& b : wb) {
            for (const auto& c : wc) {
                if (crosses_star_edge(a.walk) || crosses_star_edge(b.walk) || crosses_star_edge(c.walk)) {
                    joint += a.p * b.p * c.p;
                }
            }
        }
    }
    out.static_prob = joint;
    out.adaptive_prob = star_adaptive_from(star.graph, 0);
    return out;
}

StarEstimate star_attack_monte_carlo(std::uint64_t trials, std::uint64_t seed) {
    if (trials == 0) throw ConfigError("star: need at least one trial");
    const StarGraph star;
    RandomSource rng(seed, streams::realization);
    std::uint64_t static_hits = 0, adaptive_hits = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        bool hit = false;
        for (Vertex leaf : StarGraph::leaves) {
            hit = crosses_star_edge(sample_walk(star.graph, leaf, kStarWalkLength, rng)) || hit;
        }
        static_hits += hit;

        DynGraph g = star.graph;
        for (Vertex leaf : StarGraph::leaves) {
            if (crosses_star_edge(sample_walk(g, leaf, kStarWalkLength, rng))) {
                ++adaptive_hits;
                break;
            }
            g.remove_edge(StarGraph::center, leaf);
        }
    }
    return {static_cast<double>(static_hits) / static_cast<double>(trials),
            static_cast<double>(adaptive_hits) / static_cast<double>(trials)};
}

// Balls and bins ----------------------------------------------------------------------

std::size_t heaviest_bin_adversary(const BinsState& b) {
    if (b.alive_count() < 2) throw SettingError("heaviest bin: fewer than two bins alive");
    std::size_t best = SIZE_MAX;
    for (std::size_t bin : b.alive_bins()) {
        if (best == SIZE_MAX || b.occupancy(bin) > b.occupancy(best) ||
            (b.occupancy(bin) == b.occupancy(best) && bin < best)) {
            best = bin;
        }
    }
    return best;
}

BinsAttackResult run_heaviest_bin_attack(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("bins attack: need at least two bins");
    RandomSource setup(seed, streams::setup);
    RandomSource rng(seed, streams::realization);
    BinsState bins(n, n, setup);
    BinsAttackResult out;
    while (bins.alive_count() > 1) {
        const std::size_t moved = bins_delete(bins, heaviest_bin_adversary(bins), rng);
        out.max_step = std::max(out.max_step, moved);
    }
    out.total_recourse = bins.total_recourse();
    return out;
}

// Groups --------------------------------------------------------------------------------

RejoinOutcome resample_until_successful(GroupState& gs, std::size_t p, std::size_t target, std::uint64_t budget,
                                        JoinRule rule, std::size_t k, RandomSource& rng) {
    if (target >= gs.group_count()) throw ConfigError("target group out of range");
    RejoinOutcome out;
    while (gs.group_of(p) != target) {
        if (out.rounds == budget) return out;
        gs.rejoin(p, rule, k, rng);
        ++out.rounds;
    }
    out.success = true;
    return out;
}

GatherOutcome gather_attack(GroupState& gs, std::span<const std::size_t> q, std::size_t target, std::uint64_t budget,
                            JoinRule rule, std::size_t k, RandomSource& rng) {
    if (target >= gs.group_count()) throw ConfigError("target group out of range");
    std::vector<std::size_t> members(q.begin(), q.end());
    std::sort(members.begin(), members.end());
    GatherOutcome out;
    auto outside = [&]() -> std::optional<std::size_t> {
        for (std::size_t p : members) {
            if (gs.group_of(p) != target) return p;
        }
        return std::nullopt;
    };
    constexpr std::uint64_t kAuditEvery = 64;
    while (true) {
        const auto next = outside();
        if (!next) {
            out.success = true;
            break;
        }
        if (out.rounds == budget) break;
        gs.rejoin(*next, rule, k, rng);
        ++out.rounds;
        std::uint32_t inside = 0;
        for (std::size_t p : members) inside += gs.group_of(p) == target;
        out.inside.push_back(inside);
        out.malicious_in_target.push_back(static_cast<std::uint32_t>(gs.malicious_in(target)));
        if (out.rounds % kAuditEvery == 0) out.tallies_ok = out.tallies_ok && gs.tallies_consistent();
    }
    out.tallies_ok = out.tallies_ok && gs.tallies_consistent();
    return out;
}

MajorityRun honest_majority_run(std::size_t n, std::size_t g, double beta, std::size_t k, std::uint64_t rounds,
                                JoinRule rule, std::uint64_t seed, std::size_t honest_churn) {
    RandomSource setup(seed, streams::setup);
    RandomSource churn = setup.fork(streams::realization);
    RandomSource adversary(seed, streams::adversary);
    RandomSource joins(seed, streams::algorithm);
    GroupState gs(n, g, beta, setup);
    std::vector<std::size_t> bad;
    for (std::size_t p = 0; p < n; ++p) {
        if (gs.malicious(p)) bad.push_back(p);
    }
    MajorityRun out;
    if (bad.empty()) return out;
    constexpr std::size_t kTarget = 0;
    auto note = [&] {
        out.ever_majority = out.ever_majority || gs.has_malicious_majority();
        out.max_fraction = std::max(out.max_fraction, gs.max_malicious_fraction());
        out.min_group_size = std::min(out.min_group_size, gs.min_group_size());
        if (gs.group_size(kTarget) > 0) {
            out.max_target_fraction =
                std::max(out.max_target_fraction, static_cast<double>(gs.malicious_in(kTarget)) /
                                                      static_cast<double>(gs.group_size(kTarget)));
        }
    };
    note();
    for (std::uint64_t r = 1; r <= rounds; ++r) {
        if (gs.malicious_in(kTarget) == bad.size()) break;
        std::size_t p;
        do {
            p = bad[adversary.below(bad.size())];
        } while (gs.group_of(p) == kTarget);
        gs.rejoin(p, rule, k, joins);
        for (std::size_t c = 0; c < honest_churn && bad.size() < n; ++c) {
            std::size_t h;
            do {
                h = churn.below(n);
            } while (gs.malicious(h));
            gs.rejoin(h, rule, k, joins);
        }
        note();
        if (r % 1024 == 0) out.tallies_ok = out.tallies_ok && gs.tallies_consistent();
    }
    out.tallies_ok = out.tallies_ok && gs.tallies_consistent();
    return out;
}

// Job-machine temporal selection --------------------------------------------------------

double JobMachinePlan::max_expected_target() const {
    return expected_target.empty() ? 0.0 : *std::max_element(expected_target.begin(), expected_target.end());
}

JobMachinePlan build_jobmachine_attack(std::size_t n, std::uint64_t window) {
    const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (n < 16 || root * root != n) throw ConfigError("jobmachine attack: n must be a perfect square >= 16");
    if (window == 0) window = static_cast<std::uint64_t>(n) * n * n;

    JobMachinePlan plan;
    plan.n = n;
    plan.root = root;
    // Rounds between the end of one group's triggers and the next group's:
    // posttrim of the previous group plus pretrim of the next.
    const std::uint64_t spacing = root - 1 + n * root - n;
    plan.gap = spacing + root;
    plan.wait = 1;
    while (plan.wait <= window) plan.wait *= 2;
    plan.first_sample = plan.sample_time(0, 0);
    plan.horizon = plan.first_sample + window;
    const std::size_t per_job = n - 1 - root;
    plan.pretrim_len = root * per_job;

    const TimeStep last_trigger = plan.trigger_time(root - 1, root - 1);
    const TimeStep last_sample = plan.sample_time(root - 1, root - 1);
    if (last_trigger + plan.wait / 2 >= plan.first_sample - plan.pretrim_len) {
        throw ConfigError("jobmachine attack: window too short, earlier proactive samples overlap the pretrim");
    }
    if (last_sample + 1 > plan.horizon) throw ConfigError("jobmachine attack: window too short for the last group");

    plan.event.assign(plan.horizon + 1, JobEvent::skip);
    plan.job.assign(plan.horizon + 1, 0);
    auto put = [&](TimeStep t, JobEvent e, std::size_t j) {
        if (plan.event[t] != JobEvent::skip) throw ConfigError("jobmachine attack: two events in round " + std::to_string(t));
        plan.event[t] = e;
        plan.job[t] = static_cast<std::uint32_t>(j);
    };
    for (std::size_t grp = 0; grp < root; ++grp) {
        for (std::size_t m = 0; m < root; ++m) {
            const std::size_t j = grp * root + m;
            put(plan.trigger_time(grp, m), JobEvent::trigger, j);
            put(plan.sample_time(grp, m) + 1, JobEvent::posttrim, j);
        }
        const TimeStep start = plan.sample_time(grp, 0) - plan.pretrim_len;
        for (std::uint64_t slot = 0; slot < plan.pretrim_len; ++slot) {
            put(start + slot, JobEvent::pretrim, grp * root + slot / per_job);
        }
    }

    plan.pool = static_cast<std::size_t>(plan.horizon - 1 - n - n * per_job);
    plan.s_machine = static_cast<MachineId>(n * n);
    auto h = std::make_shared<Hypergraph>(n, n * n + 1 + plan.pool);
    for (JobId j = 0; j < n; ++j) {
        for (std::size_t i = 0; i + 1 < n; ++i) h->add_routine(j, {plan.machine(j, i)});
        h->add_routine(j, {plan.machine(j, n - 1), plan.s_machine});
    }
    plan.graph = std::move(h);

    // Expected target(S): job j contributes P(S routine alive) / |alive|
    // until its posttrim, when only a chosen S routine survives.
    struct JobState {
        double p_alive = 1.0;
        double alive;
        double contrib;
    };
    std::vector<JobState> jobs(n, JobState{1.0, static_cast<double>(n), 1.0 / static_cast<double>(n)});
    double total = 0.0;
    for (const auto& js : jobs) total += js.contrib;
    plan.change_at.push_back(1);
    plan.expected_target.push_back(total);
    for (TimeStep t = 2; t <= plan.horizon; ++t) {
        if (plan.event[t] == JobEvent::skip) continue;
        auto& js = jobs[plan.job[t]];
        total -= js.contrib;
        switch (plan.event[t]) {
            case JobEvent::trigger:
                js.p_alive *= 1.0 - 1.0 / js.alive;
                js.alive -= 1.0;
                js.contrib = js.p_alive / js.alive;
                break;
            case JobEvent::pretrim:
                js.alive -= 1.0;
                js.contrib = js.p_alive / js.alive;
                break;
            case JobEvent::posttrim:
                js.p_alive /= js.alive;
                js.contrib = js.p_alive / js.alive;
                break;
            case JobEvent::skip: break;
        }
        total += js.contrib;
        plan.change_at.push_back(t);
        plan.expected_target.push_back(total);
    }
    return plan;
}

JobMachineAttack::JobMachineAttack(JobMachine& setting, const JobMachinePlan& plan)
    : MachineDeletionAdversary(setting), plan_(plan) {
    target_ = setting.target_load(plan.s_machine);
    max_target_ = target_;
}

MachineId JobMachineAttack::pool_machine() {
    if (next_pool_ >= plan_.pool) throw ConfigError("jobmachine attack: pool B exhausted");
    return static_cast<MachineId>(plan_.n * plan_.n + 1 + next_pool_++);
}

void JobMachineAttack::refresh(TimeStep t) {
    if (target_ > 2.0) over_two_ += t - last_change_;
    target_ = setting().target_load(plan_.s_machine);
    max_target_ = std::max(max_target_, target_);
    last_change_ = t;
    pending_refresh_ = false;
}

void JobMachineAttack::finish(TimeStep horizon) {
    if (pending_refresh_) refresh(horizon);
    if (target_ > 2.0) over_two_ += horizon + 1 - last_change_;
    last_change_ = horizon + 1;
}

std::optional<MachineId> JobMachineAttack::choose(const History<RoutineId>& h) {
    const TimeStep t = h.next_time();
    // The previous round's deletion has been applied by now.
    if (pending_refresh_) refresh(t - 1);
    if (t >= plan_.event.size()) return std::nullopt;
    const JobId j = plan_.job[t];
    const auto& g = setting().graph();
    switch (plan_.event[t]) {
        case JobEvent::skip: return pool_machine();
        case JobEvent::trigger: {
            pending_refresh_ = true;
            const auto current = setting().assigned(j);
            if (!current) throw SettingError("jobmachine attack: job without assignment");
            // Every routine holds one job machine; deleting it forces the job.
            return g.routine(*current).machines.front();
        }
        case JobEvent::pretrim: {
            const auto current = setting().assigned(j);
            if (g.alive_routines(j).size() > plan_.root) {
                for (std::size_t i = 0; i + 1 < plan_.n; ++i) {
                    const MachineId x = plan_.machine(j, i);
                    if (g.machine_alive(x) && current != static_cast<RoutineId>(j * plan_.n + i)) {
                        pending_refresh_ = true;
                        return x;
                    }
                }
            }
            return pool_machine();
        }
        case JobEvent::posttrim: {
            const RoutineId s_route = plan_.s_route(j);
            if (setting().assigned(j) != s_route && g.routine_alive(s_route)) {
                pending_refresh_ = true;
                return plan_.machine(j, plan_.n - 1);
            }
            return pool_machine();
        }
    }
    return std::nullopt;
}

JobMachineTrial run_jobmachine_trial(const JobMachinePlan& plan, SchedulerKind kind, std::uint64_t seed, double alpha) {
    JobMachine setting(*plan.graph);
    auto scheduler = make_scheduler(kind, alpha);
    World<RoutineId> world(job_distributions(setting.graph()), *scheduler,
                           WorldOptions{plan.horizon, seed, HistoryMode::last_row}, assignment_listener(setting));
    JobMachineAttack attack(setting, plan);
    for (TimeStep t = 2; t <= plan.horizon; ++t) world.step(attack, t);
    attack.finish(plan.horizon);
    if (!setting.assignment_valid()) throw SettingError("jobmachine attack: assignment invalid at the horizon");
    JobMachineTrial out;
    out.final_load = setting.machine_load(plan.s_machine);
    out.max_target = attack.max_target();
    out.rounds_over_two = attack.rounds_over_two();
    out.recourse = setting.recourse();
    out.adversarial_samples = world.adversarial_samples();
    out.algorithm_samples = world.algorithm_samples();
    return out;
}

// Tree gadget -------------------------------------------------------------------------------

Vertex TreeGadget::parent(Vertex v) const {
    if (v == top || v > tree_size) throw ConfigError("tree: vertex has no parent");
    if (v == root) return top;
    return static_cast<Vertex>((v - 2) / 3 + 1);
}

std::size_t TreeGadget::depth_of(Vertex v) const {
    if (v == top || v > tree_size) throw ConfigError("tree: not a tree vertex");
    std::size_t d = 0;
    for (std::size_t i = v - 1; i > 0; i = (i - 1) / 3) ++d;
    return d;
}

std::vector<Vertex> TreeGadget::children(Vertex v) const {
    if (depth_of(v) == depth) return {};
    const std::size_t i = v - 1;
    return {static_cast<Vertex>(3 * i + 2), static_cast<Vertex>(3 * i + 3), static_cast<Vertex>(3 * i + 4)};
}

std::vector<Vertex> TreeGadget::subtree_roots() const {
    std::vector<Vertex> level{root};
    for (std::size_t d = 0; d < upper; ++d) {
        std::vector<Vertex> next;
        for (Vertex v : level) {
            for (Vertex c : children(v)) next.push_back(c);
        }
        level = std::move(next);
    }
    return level;
}

std::vector<Vertex> TreeGadget::post_order(Vertex subtree_root) const {
    std::vector<Vertex> out;
    std::function<void(Vertex)> visit = [&](Vertex v) {
        for (Vertex c : children(v)) visit(c);
        out.push_back(v);
    };
    visit(subtree_root);
    return out;
}

std::vector<Vertex> TreeGadget::leaves(Vertex subtree_root) const {
    std::vector<Vertex> out;
    for (Vertex v : post_order(subtree_root)) {
        if (is_leaf(v)) out.push_back(v);
    }
    return out;
}

TreeGadget build_tree_gadget(std::size_t upper, std::size_t lower) {
    if (upper < 1 || lower < 1) throw ConfigError("tree gadget: both depths must be >= 1");
    TreeGadget t;
    t.upper = upper;
    t.lower = lower;
    t.depth = upper + lower;
    std::size_t size = 0, level = 1;
    for (std::size_t d = 0; d <= t.depth; ++d, level *= 3) size += level;
    if (size > 100'000) throw ConfigError("tree gadget: more than 1e5 tree vertices");
    t.tree_size = size;
    t.graph = DynGraph(size + 1, false);
    t.graph.add_edge(TreeGadget::top, TreeGadget::root);
    for (Vertex v = 2; v <= size; ++v) t.graph.add_edge(t.parent(v), v);
    return t;
}

bool climbs_to_top(const TreeGadget& t, const Walk& w) {
    if (w.path.empty() || w.path[0] == TreeGadget::top || w.path[0] > t.tree_size) return false;
    const std::size_t d = t.depth_of(w.path[0]);
    if (w.path.size() < d + 2) return false;
    for (std::size_t i = 0; i <= d; ++i) {
        if (!w.uses_edge_at(i) || w.path[i + 1] != t.parent(w.path[i])) return false;
    }
    return true;
}

double climb_probability(const TreeGadget& t, const DynGraph& g, Vertex v) {
    if (t.depth_of(v) + 1 > t.walk_length()) return 0.0;
    double p = 1.0;
    for (Vertex at = v; at != TreeGadget::top; at = t.parent(at)) {
        if (!g.has_edge(at, t.parent(at))) return 0.0;
        p /= static_cast<double>(g.degree(at));
    }
    return p;
}

std::vector<CutStep> recourse_delete_sequence(const TreeGadget& t, Vertex subtree_root, bool leaves_only) {
    DynGraph g = t.graph;
    std::vector<CutStep> out;
    for (Vertex v : t.post_order(subtree_root)) {
        if (!leaves_only || t.is_leaf(v)) out.push_back({v, climb_probability(t, g, v)});
        g.remove_edge(v, t.parent(v));
    }
    return out;
}

double tree_adaptive_probability(const TreeGadget& t, bool leaves_only) {
    double miss = 1.0;
    for (const auto& step : recourse_delete_sequence(t, t.subtree_roots().front(), leaves_only)) {
        miss *= 1.0 - step.probability;
    }
    return 1.0 - miss;
}

double tree_static_probability(const TreeGadget& t, bool leaves_only) {
    double miss = 1.0;
    for (Vertex v : t.post_order(t.subtree_roots().front())) {
        if (!leaves_only || t.is_leaf(v)) miss *= 1.0 - climb_probability(t, t.graph, v);
    }
    return 1.0 - miss;
}

TreeTrial run_tree_attack_direct(const TreeGadget& t, RandomSource& rng) {
    TreeTrial out;
    out.launched_at.assign(t.tree_size + 1, 0);
    TimeStep round = 1;
    for (Vertex r : t.subtree_roots()) {
        DynGraph g = t.graph;
        std::function<bool(Vertex)> recourse_delete = [&](Vertex v) {
            for (Vertex c : t.children(v)) {
                if (recourse_delete(c)) return true;
            }
            const Walk w = sample_walk(g, v, t.walk_length(), rng, OnIsolated::stay);
            out.launched_at[v] = ++round;
            ++out.walks;
            if (climbs_to_top(t, w)) return true;
            g.remove_edge(v, t.parent(v));
            return false;
        };
        out.success.push_back(recourse_delete(r));
    }
    return out;
}

// Proactive replay -----------------------------------------------------------------------------

ReplayGadget build_replay_gadget(std::size_t upper, std::size_t lower, std::size_t clique) {
    if (clique < 2) throw ConfigError("replay: clique size must be >= 2");
    ReplayGadget r;
    r.tree = build_tree_gadget(upper, lower);
    r.clique = clique;
    const auto& tree = r.tree;
    const std::size_t k = tree.leaves(tree.subtree_roots().front()).size();
    r.leaves_per_subtree = k;

    // Early samples must dodge the initial proactive times 1 + 2^j: with the
    // no-reset flag a coincident sample would keep the old schedule.
    auto initial_due = [](TimeStep t) { return t >= 2 && std::has_single_bit(t - 1); };
    TimeStep s0 = 1;
    for (;; ++s0) {
        bool clear = true;
        for (TimeStep i = 1; i <= k && clear; ++i) clear = !initial_due(s0 + i);
        if (clear) break;
    }
    r.early_start = s0;
    // 2^(R-1) >= tree_size keeps the previous proactive sample of every
    // early leaf before the replay starts.
    TimeStep span = 2;
    while (span / 2 < tree.tree_size + 1 || span / 2 < k) span *= 2;
    r.wait = s0 + span;
    r.horizon = r.wait + k + 1;

    const std::size_t total_leaves = tree.leaves(TreeGadget::root).size();
    const std::size_t path_vertices = r.wait - k;  // one edge per idle round in [2, W]
    const std::size_t n = tree.tree_size + 1 + total_leaves * clique + path_vertices;
    r.graph = DynGraph(n, false);
    for (const auto& [u, v] : tree.graph.edges()) r.graph.add_edge(u, v);
    r.clique_of.assign(tree.tree_size + 1, {});
    Vertex next = static_cast<Vertex>(tree.tree_size + 1);
    for (Vertex leaf : tree.leaves(TreeGadget::root)) {
        auto& members = r.clique_of[leaf];
        for (std::size_t i = 0; i < clique; ++i) members.push_back(next++);
        for (std::size_t a = 0; a < clique; ++a) {
            r.graph.add_edge(leaf, members[a]);
            for (std::size_t b = a + 1; b < clique; ++b) r.graph.add_edge(members[a], members[b]);
        }
    }
    for (std::size_t i = 0; i + 1 < path_vertices; ++i) {
        r.path_edges.emplace_back(next + i, next + i + 1);
        r.graph.add_edge(next + i, next + i + 1);
    }
    for (Vertex v = 0; v <= tree.tree_size; ++v) r.sources.push_back(v);
    return r;
}

namespace {

class ReplayAdversary final : public Adversary<Walk> {
   public:
    ReplayAdversary(const ReplayGadget& r, DynGraph& g, WalkStore& store) : r_(r), g_(g), store_(store) {
        for (Vertex root : r.tree.subtree_roots()) {
            Subtree s;
            s.order = r.tree.post_order(root);
            s.leaves = r.tree.leaves(root);
            subtrees_.push_back(std::move(s));
        }
    }

    std::vector<DistributionSpec<Walk>> next_distributions(const History<Walk>& h) override {
        const TimeStep t = h.next_time();
        forced_.clear();
        const TimeStep s0 = r_.early_start;
        const std::size_t k = r_.leaves_per_subtree;
        if (t > s0 && t <= s0 + k) {
            for (const auto& s : subtrees_) forced_.push_back(store_.label(s.leaves[t - s0 - 1], 0));
        } else if (t <= r_.wait) {
            const auto& [u, v] = r_.path_edges.at(next_path_++);
            cut(u, v);
        } else if (t <= r_.horizon) {
            const std::size_t i = t - r_.wait;
            for (auto& s : subtrees_) {
                if (s.done) continue;
                if (i >= 2) evaluate(s, i - 2, t - 1);
                if (s.done) continue;
                if (i <= k) {
                    const Vertex leaf = s.leaves[i - 1];
                    for (Vertex c : r_.clique_of[leaf]) cut(leaf, c);
                }
            }
        }
        return {};
    }

    std::vector<ObjectId> pick_samples(const History<Walk>&) override { return forced_; }

    std::vector<bool> successes() const {
        std::vector<bool> out;
        for (const auto& s : subtrees_) out.push_back(s.success);
        return out;
    }
    std::uint64_t evaluated() const { return evaluated_; }
    std::uint64_t on_time() const { return on_time_; }

   private:
    struct Subtree {
        std::vector<Vertex> order;
        std::vector<Vertex> leaves;
        std::size_t cursor = 0;
        bool done = false;
        bool success = false;
    };

    void cut(Vertex u, Vertex v) {
        for (ObjectId label : store_.walks_through(u, v)) forced_.push_back(label);
        g_.remove_edge(u, v);
    }

    // The walk of leaf `rank` should have been drawn at `due`.
    void evaluate(Subtree& s, std::size_t rank, TimeStep due) {
        const Vertex leaf = s.leaves[rank];
        const ObjectId label = store_.label(leaf, 0);
        ++evaluated_;
        const bool fresh = store_.origin(label) == due;
        on_time_ += fresh;
        if (fresh && climbs_to_top(r_.tree, store_.walk(label))) {
            s.done = s.success = true;
            return;
        }
        if (s.order.at(s.cursor) != leaf) throw ConfigError("replay: leaf order out of step");
        // Cut the leaf, then every inner vertex whose children are all cut;
        // inner vertices have no replayed walk and count as failures.
        cut(leaf, r_.tree.parent(leaf));
        ++s.cursor;
        while (s.cursor < s.order.size() && !r_.tree.is_leaf(s.order[s.cursor])) {
            const Vertex v = s.order[s.cursor++];
            cut(v, r_.tree.parent(v));
        }
        if (s.cursor == s.order.size()) s.done = true;
    }

    const ReplayGadget& r_;
    DynGraph& g_;
    WalkStore& store_;
    std::vector<Subtree> subtrees_;
    std::vector<ObjectId> forced_;
    std::size_t next_path_ = 0;
    std::uint64_t evaluated_ = 0;
    std::uint64_t on_time_ = 0;
};

}  // namespace

ReplayTrial run_replay_trial(const ReplayGadget& r, std::uint64_t seed) {
    DynGraph g = r.graph;
    WalkStore store(g, 1, WalkLength{r.tree.walk_length(), std::nullopt}, OnIsolated::stay, r.sources);
    ProactiveScheduler scheduler(false);
    ReplayTrial out;
    auto track = store.listener();
    auto listener = [&](ObjectId label, const Walk* old_value, const Walk& fresh, TimeStep t) {
        track(label, old_value, fresh, t);
        const Vertex src = store.source(label);
        if (t <= r.early_start || t > r.wait || src == TreeGadget::top || !r.tree.is_leaf(src)) return;
        ++out.early_samples;
        const auto& clique = r.clique_of[src];
        const bool entered = fresh.path.size() > 1 && std::find(clique.begin(), clique.end(), fresh.path[1]) != clique.end();
        const bool stayed = std::find(fresh.path.begin() + 1, fresh.path.end(), src) == fresh.path.end();
        out.escaped += entered && stayed;
    };
    World<Walk> world(store.distributions(), scheduler, WorldOptions{r.horizon, seed, HistoryMode::last_row},
                      listener);
    ReplayAdversary adversary(r, g, store);
    for (TimeStep t = 2; t <= r.horizon; ++t) world.step(adversary, t);

    out.success = adversary.successes();
    out.evaluated = adversary.evaluated();
    out.on_time = adversary.on_time();
    const EdgeKey e = g.key(TreeGadget::top, TreeGadget::root);
    for (Vertex leaf : r.tree.leaves(TreeGadget::root)) {
        for_each_traversal(g, store.walk(store.label(leaf, 0)), [&](EdgeKey key) { out.congestion_e += key == e; });
    }
    return out;
}

}  // namespace resample
