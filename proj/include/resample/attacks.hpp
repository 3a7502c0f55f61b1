#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <boost/rational.hpp>

#include "resample/assignment.hpp"
#include "resample/graph.hpp"
#include "resample/schedulers.hpp"

namespace resample {

using Rational = boost::rational<std::int64_t>;

// Five-vertex star -------------------------------------------------------------
//
// Center with an edge e up to a top vertex and three leaves a, b, c. Walks of
// length 2 from the leaves try to cross e, either all at once or one at a time
// with the edge to a failed leaf cut before the next walk.

struct StarGraph {
    static constexpr Vertex top = 0;
    static constexpr Vertex center = 1;
    static constexpr Vertex leaves[3] = {2, 3, 4};
    DynGraph graph{5, false};
    StarGraph();
};

struct StarExact {
    Rational static_prob;
    Rational adaptive_prob;
};
// Exact enumeration over every walk outcome.
StarExact star_attack_exact();

struct StarEstimate {
    double static_rate = 0.0;
    double adaptive_rate = 0.0;
};
StarEstimate star_attack_monte_carlo(std::uint64_t trials, std::uint64_t seed);

// Exact probability that a walk of `length` steps from v on g satisfies `hit`,
// by enumerating every walk. Stops at vertices without neighbors.
Rational exact_walk_probability(const DynGraph& g, Vertex v, std::size_t length,
                                const std::function<bool(const Walk&)>& hit);

// Balls and bins ---------------------------------------------------------------

// Alive bin with the most balls, lowest id on ties. Needs two alive bins.
std::size_t heaviest_bin_adversary(const BinsState& b);

// n bins and n balls; the heaviest bin is deleted until one remains.
struct BinsAttackResult {
    std::uint64_t total_recourse = 0;
    std::size_t max_step = 0;
};
BinsAttackResult run_heaviest_bin_attack(std::size_t n, std::uint64_t seed);

// Participant groups -------------------------------------------------------------

struct RejoinOutcome {
    bool success = false;
    std::uint64_t rounds = 0;
};
// Rejoins p until it lands in target or `budget` rounds are spent.
RejoinOutcome resample_until_successful(GroupState& gs, std::size_t p, std::size_t target, std::uint64_t budget,
                                        JoinRule rule, std::size_t k, RandomSource& rng);

struct GatherOutcome {
    bool success = false;
    std::uint64_t rounds = 0;
    // Members of Q inside the target group after each round.
    std::vector<std::uint32_t> inside;
    // Malicious count of the target group after each round.
    std::vector<std::uint32_t> malicious_in_target;
    bool tallies_ok = true;
};
// Each round one member of Q outside the target (the lowest id) rejoins.
// Succeeds once all of Q sit in the target together.
GatherOutcome gather_attack(GroupState& gs, std::span<const std::size_t> q, std::size_t target, std::uint64_t budget,
                            JoinRule rule, std::size_t k, RandomSource& rng);

struct MajorityRun {
    bool ever_majority = false;
    double max_fraction = 0.0;
    double max_target_fraction = 0.0;
    bool tallies_ok = true;
    std::size_t min_group_size = SIZE_MAX;
};
// Every round a random malicious participant outside group 0 rejoins, trying
// to pile into group 0, then `honest_churn` random honest participants rejoin.
// Without honest churn nobody ever leaves group 0 voluntarily, so it keeps
// growing and the other groups shrink until a handful of members tie.
// Majority is checked over all groups after each round.
MajorityRun honest_majority_run(std::size_t n, std::size_t g, double beta, std::size_t k, std::uint64_t rounds,
                                JoinRule rule, std::uint64_t seed, std::size_t honest_churn = 1);

// Job-machine temporal selection -------------------------------------------------
//
// Jobs come in sqrt(n) groups of sqrt(n). Job j has machines a_0..a_{n-1}, one
// routine per machine, and the last one also uses the shared machine S. Each
// job is triggered once early; its proactive sample 2^r later falls after a
// pretrim that leaves it sqrt(n) routines (one with S), and the round after
// that sample the S routine is deleted unless chosen. Idle rounds delete
// fresh machines from the pool B.

enum class JobEvent : std::uint8_t { skip, trigger, pretrim, posttrim };

struct JobMachinePlan {
    std::size_t n = 0;
    std::size_t root = 0;         // sqrt(n)
    std::uint64_t gap = 0;        // rounds between the triggers of consecutive groups
    std::uint64_t wait = 0;       // 2^r, the proactive offset of the decisive sample
    std::uint64_t first_sample = 0;
    TimeStep horizon = 0;
    std::uint64_t pretrim_len = 0;  // rounds of pretrim per group
    MachineId s_machine = 0;
    std::size_t pool = 0;  // |B|
    // Per round t (index t), the scripted event and its job.
    std::vector<JobEvent> event;
    std::vector<std::uint32_t> job;
    // Expected target(S) under the designed timeline: value from round
    // change_at[i] on is expected_target[i].
    std::vector<TimeStep> change_at;
    std::vector<double> expected_target;
    std::shared_ptr<const Hypergraph> graph;

    MachineId machine(JobId j, std::size_t i) const { return static_cast<MachineId>(j * n + i); }
    RoutineId s_route(JobId j) const { return static_cast<RoutineId>(j * n + n - 1); }
    TimeStep trigger_time(std::size_t group, std::size_t member) const { return 2 + gap * group + member; }
    TimeStep sample_time(std::size_t group, std::size_t member) const {
        return trigger_time(group, member) + wait;
    }
    double max_expected_target() const;
};

// n a perfect square >= 16. `window` is how long the decisive samples must
// stay untouched (n^3 when 0).
JobMachinePlan build_jobmachine_attack(std::size_t n, std::uint64_t window = 0);

// Replays the plan against the live assignment, choosing machines from the
// current routines.
class JobMachineAttack final : public MachineDeletionAdversary {
   public:
    JobMachineAttack(JobMachine& setting, const JobMachinePlan& plan);

    std::uint64_t pool_used() const { return next_pool_; }
    double max_target() const { return max_target_; }
    // Rounds whose target(S) exceeded 2; complete after finish().
    std::uint64_t rounds_over_two() const { return over_two_; }
    // Accounts for the rounds up to the horizon.
    void finish(TimeStep horizon);

   protected:
    std::optional<MachineId> choose(const History<RoutineId>& h) override;

   private:
    MachineId pool_machine();
    void refresh(TimeStep t);

    const JobMachinePlan& plan_;
    std::uint64_t next_pool_ = 0;
    double target_ = 0.0;
    double max_target_ = 0.0;
    TimeStep last_change_ = 1;
    std::uint64_t over_two_ = 0;
    bool pending_refresh_ = false;
};

struct JobMachineTrial {
    std::size_t final_load = 0;
    double max_target = 0.0;
    std::uint64_t rounds_over_two = 0;
    std::uint64_t recourse = 0;
    std::uint64_t adversarial_samples = 0;
    std::uint64_t algorithm_samples = 0;
};
JobMachineTrial run_jobmachine_trial(const JobMachinePlan& plan, SchedulerKind kind, std::uint64_t seed,
                                     double alpha = 2.0);

// Ternary tree gadget ----------------------------------------------------------
//
// Vertex 0 is the top, joined to the root (vertex 1) by the target edge e.
// Tree index i has children 3i+1..3i+3 and lives at vertex i+1. A walk hits
// when its first depth+1 steps climb straight through e.

struct TreeGadget {
    std::size_t upper = 0;  // depth of the attacked subtree roots
    std::size_t lower = 0;  // depth of those subtrees
    std::size_t depth = 0;
    std::size_t tree_size = 0;
    DynGraph graph{0, false};

    static constexpr Vertex top = 0;
    static constexpr Vertex root = 1;
    Vertex parent(Vertex v) const;
    std::size_t depth_of(Vertex v) const;
    std::vector<Vertex> children(Vertex v) const;
    bool is_leaf(Vertex v) const { return depth_of(v) == depth; }
    std::size_t walk_length() const { return depth + 1; }
    std::vector<Vertex> subtree_roots() const;
    // Children first, left to right; the subtree root comes last.
    std::vector<Vertex> post_order(Vertex subtree_root) const;
    std::vector<Vertex> leaves(Vertex subtree_root) const;
};

TreeGadget build_tree_gadget(std::size_t upper, std::size_t lower);

bool climbs_to_top(const TreeGadget& t, const Walk& w);
// Probability that a fresh walk from v climbs to the top on graph g.
double climb_probability(const TreeGadget& t, const DynGraph& g, Vertex v);

struct CutStep {
    Vertex vertex;
    double probability;  // climb probability at its turn, all earlier walks failed
};
// The cut sequence of one subtree when every walk fails, on a private copy of
// the gadget graph. With leaves_only, inner vertices are cut without a walk.
std::vector<CutStep> recourse_delete_sequence(const TreeGadget& t, Vertex subtree_root, bool leaves_only = false);
// Exact probability that one subtree succeeds: 1 - prod(1 - p) over the
// sequence above.
double tree_adaptive_probability(const TreeGadget& t, bool leaves_only = false);
// Every walk of the subtree launched at once on the intact gadget.
double tree_static_probability(const TreeGadget& t, bool leaves_only = false);

struct TreeTrial {
    std::vector<bool> success;  // per subtree root
    // Round at which each vertex's walk was launched, 0 if never.
    std::vector<TimeStep> launched_at;
    std::uint64_t walks = 0;
};
// RecourseDelete on each subtree separately, walks launched one per round.
TreeTrial run_tree_attack_direct(const TreeGadget& t, RandomSource& rng);

// Proactive replay: leaves carry escape cliques, a waiting path B sets the
// clock, and leaves sampled early come back at W + i under proactive
// resampling while the subtrees are trimmed around them.
struct ReplayGadget {
    TreeGadget tree;
    DynGraph graph{0, false};
    std::size_t clique = 0;
    std::size_t leaves_per_subtree = 0;
    std::vector<std::vector<Vertex>> clique_of;  // indexed by tree vertex
    std::vector<std::pair<Vertex, Vertex>> path_edges;
    std::vector<Vertex> sources;  // top and tree vertices
    TimeStep early_start = 0;     // s_0; leaf rank i is sampled at s_0 + i
    TimeStep wait = 0;            // W
    TimeStep horizon = 0;
    bool is_clique_vertex(Vertex v) const { return v > tree.tree_size && v <= tree.tree_size + clique_count(); }
    std::size_t clique_count() const { return clique * tree.leaves(TreeGadget::root).size(); }
};

ReplayGadget build_replay_gadget(std::size_t upper, std::size_t lower, std::size_t clique);

struct ReplayTrial {
    std::vector<bool> success;  // per subtree
    std::uint32_t congestion_e = 0;  // leaf walks across e at the end
    std::uint64_t early_samples = 0;  // leaf walks drawn before W
    std::uint64_t escaped = 0;        // of those, entered the clique and stayed
    std::uint64_t evaluated = 0;
    std::uint64_t on_time = 0;  // evaluated walks drawn exactly at W + i
};
ReplayTrial run_replay_trial(const ReplayGadget& r, std::uint64_t seed);

}  // namespace resample
