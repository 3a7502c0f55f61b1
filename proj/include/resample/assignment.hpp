#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resample/core.hpp"

namespace resample {

using JobId = std::uint32_t;
using MachineId = std::uint32_t;
using RoutineId = std::uint32_t;

// Job-machine hypergraphs -----------------------------------------------------

struct Routine {
    JobId job;
    std::vector<MachineId> machines;
};

// Jobs, machines and routines (one job plus a set of machines each). A routine
// is alive while all its machines are.
class Hypergraph {
   public:
    Hypergraph(std::size_t jobs, std::size_t machines);

    RoutineId add_routine(JobId job, std::vector<MachineId> machines);

    std::size_t job_count() const { return alive_of_job_.size(); }
    std::size_t machine_count() const { return machine_alive_.size(); }
    std::size_t routine_count() const { return routines_.size(); }
    const Routine& routine(RoutineId r) const { return routines_.at(r); }
    bool machine_alive(MachineId x) const { return machine_alive_.at(x); }
    bool routine_alive(RoutineId r) const { return routine_alive_.at(r); }
    // Alive routines of a job; order is deterministic but not sorted.
    std::span<const RoutineId> alive_routines(JobId j) const { return alive_of_job_.at(j); }
    // Every routine (alive or dead) that uses machine x.
    std::span<const RoutineId> routines_using(MachineId x) const { return using_machine_.at(x); }
    // Largest initial number of routines of a job.
    std::size_t max_degree() const { return max_degree_; }

    // Marks x dead and returns the routines that died with it.
    std::vector<RoutineId> kill_machine(MachineId x);

    // sum over jobs j of |R(x) & R(j)| / |R(j)|, alive routines only.
    double target_load(MachineId x) const;

   private:
    std::vector<Routine> routines_;
    std::vector<bool> machine_alive_;
    std::vector<bool> routine_alive_;
    std::vector<std::vector<RoutineId>> alive_of_job_;
    std::vector<std::size_t> slot_in_job_;
    std::vector<std::vector<RoutineId>> using_machine_;
    std::size_t max_degree_ = 0;
};

// Hypergraph plus the current assignment and the recourse counter.
class JobMachine {
   public:
    explicit JobMachine(Hypergraph h);

    const Hypergraph& graph() const { return graph_; }
    // Routine currently used by j; nullopt before the first assignment.
    std::optional<RoutineId> assigned(JobId j) const;
    void assign(JobId j, RoutineId r);

    // Deletes machine x. Returns the jobs whose assigned routine died (they must
    // be resampled) and adds their number to the recourse. Throws SettingError
    // if some job is left without an alive routine.
    std::vector<JobId> delete_machine(MachineId x);
    // Jobs whose set of alive routines changed in the last delete_machine.
    std::span<const JobId> last_changed_jobs() const { return changed_; }

    // Uniform alive routine of j, also recorded as the assignment.
    RoutineId resample_job(JobId j, RandomSource& rng);

    std::size_t machine_load(MachineId x) const { return load_.at(x); }
    double target_load(MachineId x) const { return graph_.target_load(x); }
    std::uint64_t recourse() const { return recourse_; }
    // Every job holds exactly one alive incident routine.
    bool assignment_valid() const;

   private:
    Hypergraph graph_;
    std::vector<RoutineId> chosen_;
    std::vector<bool> has_choice_;
    std::vector<std::size_t> load_;
    std::vector<JobId> changed_;
    std::uint64_t recourse_ = 0;
};

// Distribution of job j: uniform over its currently alive routines.
Distribution<RoutineId> job_distribution(const Hypergraph& h, JobId j);
std::vector<Distribution<RoutineId>> job_distributions(const Hypergraph& h);

// Adversary that deletes at most one machine per round. Subclasses choose the
// machine; the base installs new distributions for touched jobs and forces
// the jobs that lost their routine.
class MachineDeletionAdversary : public Adversary<RoutineId> {
   public:
    explicit MachineDeletionAdversary(JobMachine& setting) : setting_(setting) {}

    std::vector<DistributionSpec<RoutineId>> next_distributions(const History<RoutineId>& h) final;
    std::vector<ObjectId> pick_samples(const History<RoutineId>& h) final;

    std::uint64_t deletions() const { return deletions_; }

   protected:
    virtual std::optional<MachineId> choose(const History<RoutineId>& h) = 0;
    JobMachine& setting() { return setting_; }

   private:
    JobMachine& setting_;
    std::vector<ObjectId> forced_;
    std::uint64_t deletions_ = 0;
};

// Listener keeping a JobMachine's assignment in sync with a world.
World<RoutineId>::Listener assignment_listener(JobMachine& setting);

// Instance and script loaded from JSON:
// {"jobs": [ids], "machines": [ids], "routines": [{"job": id, "machines": [ids]}],
//  "script": [{"delete_machine": id} | {"idle": true}]}
struct JobMachineInstance {
    Hypergraph graph;
    // One entry per round from t = 2; nullopt is an idle round.
    std::vector<std::optional<MachineId>> script;
    std::vector<std::int64_t> job_ids;
    std::vector<std::int64_t> machine_ids;
};
JobMachineInstance parse_jobmachine_instance(const std::string& json_text);

// Balls and bins ------------------------------------------------------------------

class BinsState {
   public:
    // `balls` balls, each placed uniformly among `bins` bins.
    BinsState(std::size_t bins, std::size_t balls, RandomSource& rng);

    std::size_t bin_count() const { return contents_.size(); }
    std::size_t alive_count() const { return alive_.size(); }
    bool alive(std::size_t bin) const { return alive_slot_.at(bin) != kDead; }
    std::size_t occupancy(std::size_t bin) const { return contents_.at(bin).size(); }
    std::size_t bin_of(std::size_t ball) const { return ball_bin_.at(ball); }
    std::span<const std::size_t> alive_bins() const { return alive_; }
    const std::vector<std::size_t>& recourse_log() const { return log_; }
    std::uint64_t total_recourse() const { return total_; }

    // Deletes a bin and throws its balls uniformly over the remaining bins.
    std::size_t delete_bin(std::size_t bin, RandomSource& rng);

   private:
    static constexpr std::size_t kDead = static_cast<std::size_t>(-1);
    std::vector<std::vector<std::size_t>> contents_;
    std::vector<std::size_t> ball_bin_;
    std::vector<std::size_t> alive_;
    std::vector<std::size_t> alive_slot_;
    std::vector<std::size_t> log_;
    std::uint64_t total_ = 0;
};

std::size_t bins_delete(BinsState& b, std::size_t bin, RandomSource& rng);

// Participant groups ------------------------------------------------------------

enum class JoinRule { plain, cuckoo, rotation };

class GroupState {
   public:
    // n participants, g groups, the first round(beta * n) participants are
    // malicious; everyone starts in a uniform group.
    GroupState(std::size_t n, std::size_t g, double beta, RandomSource& rng);
    GroupState(std::size_t n, std::size_t g, std::vector<bool> malicious, RandomSource& rng);

    std::size_t size() const { return group_of_.size(); }
    std::size_t group_count() const { return members_.size(); }
    std::size_t group_of(std::size_t p) const { return group_of_.at(p); }
    bool malicious(std::size_t p) const { return malicious_.at(p); }
    std::size_t group_size(std::size_t grp) const { return members_.at(grp).size(); }
    std::size_t malicious_in(std::size_t grp) const { return bad_.at(grp); }
    std::span<const std::size_t> members(std::size_t grp) const { return members_.at(grp); }

    void move(std::size_t p, std::size_t grp);
    // p leaves and rejoins under the rule; returns everyone reassigned.
    std::vector<std::size_t> rejoin(std::size_t p, JoinRule rule, std::size_t k, RandomSource& rng);

    // Some group with at least half of its members malicious.
    bool has_malicious_majority() const;
    double max_malicious_fraction() const;
    std::size_t min_group_size() const;
    std::size_t max_group_size() const;
    // Recount of the per-group tallies from the assignment.
    bool tallies_consistent() const;

   private:
    std::vector<std::size_t> group_of_;
    std::vector<std::size_t> slot_;
    std::vector<bool> malicious_;
    std::vector<std::vector<std::size_t>> members_;
    std::vector<std::size_t> bad_;
};

std::vector<std::size_t> cuckoo_join(GroupState& gs, std::size_t p, std::size_t k, RandomSource& rng);
std::vector<std::size_t> rotation_join(GroupState& gs, std::size_t p, std::size_t k, RandomSource& rng);

// Nested charging ------------------------------------------------------------------

// sum_i |S_i| / |U_i| for nested U_1 >= U_2 >= ... with S_i inside U_i and
// every element in at most two of the S_i. Throws ConfigError otherwise.
double nested_charging_sum(const std::vector<std::vector<std::uint32_t>>& universes,
                           const std::vector<std::vector<std::uint32_t>>& charged);

double harmonic(std::size_t n);

}  // namespace resample
