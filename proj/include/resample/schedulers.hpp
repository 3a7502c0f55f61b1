#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <span>
#include <string_view>
#include <vector>

#include "resample/core.hpp"

namespace resample {

// Landmark arithmetic ---------------------------------------------------------

// Throws std::domain_error for m = 0.
int trailing_zeros(std::uint64_t m);

// The t in [t_prev + 2^i, t_prev + 2^(i+1)] with the most trailing zeros
// (smallest such t on ties, which cannot occur).
TimeStep landmark_next(TimeStep t_prev, unsigned i);

// t1 = landmark_next(t0, 1), t_i = landmark_next(t_{i-1}, i), cut at horizon.
std::vector<TimeStep> landmark_sequence(TimeStep t0, TimeStep horizon);

// Origins possible at time T, sorted. O(T log T).
std::vector<TimeStep> landmarks(TimeStep T);

// Sweep over T = 1..max_T. The callback receives T and the multiplicity table
// `count` indexed by origin (count[x] > 0 iff x is in landmarks(T)) together
// with the number of distinct origins.
void sweep_landmarks(TimeStep max_T,
                     const std::function<void(TimeStep, std::span<const std::uint32_t>, std::size_t)>& visit);

// Temporal aggregation bounds ---------------------------------------------------

// q * (log_{1+1/alpha} n + 2 / ln(1 + 1/alpha)).
double gta_budget(double alpha, std::size_t n, std::uint64_t q);
// Largest number of groups a stable partition of n objects can have:
// floor(log_alpha n) + 1 for alpha > 1.
std::size_t gta_group_bound(double alpha, std::size_t n);

// Schedulers -------------------------------------------------------------------

class NoResampling final : public Scheduler {
   public:
    std::string_view name() const override { return "none"; }
    void start(std::size_t, TimeStep) override {}
    std::vector<ObjectId> on_round(TimeStep, std::span<const ObjectId>) override { return {}; }
};

// Resamples an object at t0 + 2^i, i >= 0, after each adversarial sample at t0.
class ProactiveScheduler final : public Scheduler {
   public:
    // With reset_on_coincident = false, an adversarial sample landing on a round
    // where the object is already due keeps the running schedule.
    explicit ProactiveScheduler(bool reset_on_coincident = true) : reset_on_coincident_(reset_on_coincident) {}

    std::string_view name() const override { return "proactive"; }
    void start(std::size_t n, TimeStep horizon) override;
    std::vector<ObjectId> on_round(TimeStep t, std::span<const ObjectId> adversarial) override;

    // Replace obj's schedule by t+1, t+2, t+4, ... <= horizon.
    void on_sample(ObjectId obj, TimeStep t);
    // Remaining due times of obj, ascending.
    std::vector<TimeStep> pending(ObjectId obj) const;

   private:
    struct Slot {
        TimeStep anchor = 0;
        unsigned exponent = 0;
        std::uint32_t generation = 0;
        bool active = false;
    };
    struct Item {
        TimeStep due;
        ObjectId obj;
        std::uint32_t generation;
        bool operator>(const Item& o) const { return due != o.due ? due > o.due : obj > o.obj; }
    };
    void push_next(ObjectId obj);

    bool reset_on_coincident_;
    TimeStep horizon_ = 0;
    std::vector<Slot> slots_;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue_;
};

// Greedy temporal aggregation with merge band [1/alpha, alpha]; alpha = 2 is
// the basic variant. Objects are grouped by origin.
class GtaScheduler final : public Scheduler {
   public:
    explicit GtaScheduler(double alpha = 2.0, bool instrument = false);

    std::string_view name() const override { return "gta"; }
    void start(std::size_t n, TimeStep horizon) override;
    std::vector<ObjectId> on_round(TimeStep t, std::span<const ObjectId> adversarial) override;

    // Move adversarially sampled objects into group t.
    void move_to_group(TimeStep t, std::span<const ObjectId> objs);
    // Merge qualifying pairs into group t until none is left. Returns every
    // object resampled, sorted.
    std::vector<ObjectId> stabilize(TimeStep t);

    double alpha() const { return alpha_; }
    std::size_t group_count() const { return groups_.size(); }
    TimeStep group_of(ObjectId u) const { return group_of_[u]; }
    // Group origin -> sorted members.
    std::map<TimeStep, std::vector<ObjectId>> groups() const;
    bool is_stable() const;

    // Coin bookkeeping, only maintained when constructed with instrument=true.
    // potential(u) = log_{1+1/alpha} |group(u)| + coins(u).
    double coins(ObjectId u) const { return coins_.at(u); }
    double potential(ObjectId u) const;
    std::uint64_t merges() const { return merges_; }

   private:
    struct Group {
        std::vector<ObjectId> members;
    };
    void detach(ObjectId u);
    void attach(ObjectId u, TimeStep t);

    double alpha_;
    bool instrument_;
    std::size_t n_ = 0;
    std::map<TimeStep, Group> groups_;
    std::vector<TimeStep> group_of_;
    std::vector<std::size_t> slot_of_;
    std::vector<double> coins_;
    std::uint64_t merges_ = 0;
};

// Resamples at landmark times t_1 < t_2 < ... after each adversarial sample.
class LandmarkScheduler final : public Scheduler {
   public:
    explicit LandmarkScheduler(bool reset_on_coincident = true) : reset_on_coincident_(reset_on_coincident) {}

    std::string_view name() const override { return "landmark"; }
    void start(std::size_t n, TimeStep horizon) override;
    std::vector<ObjectId> on_round(TimeStep t, std::span<const ObjectId> adversarial) override;

    void on_sample(ObjectId obj, TimeStep t0);
    // Objects due at t; advances their schedules.
    std::vector<ObjectId> due(TimeStep t);
    // 0 when nothing is pending before the horizon.
    TimeStep next_due(ObjectId obj) const { return slots_.at(obj).next_due; }

   private:
    struct Slot {
        unsigned index = 0;
        TimeStep next_due = 0;
    };
    void schedule(ObjectId obj, TimeStep from, unsigned index);

    bool reset_on_coincident_;
    TimeStep horizon_ = 0;
    std::vector<Slot> slots_;
    std::map<TimeStep, std::vector<ObjectId>> by_time_;
};

enum class SchedulerKind { none, proactive, gta, landmark };

// Throws ConfigError on an unknown name.
SchedulerKind parse_scheduler(std::string_view name);
std::string_view to_string(SchedulerKind kind);
std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double alpha = 2.0);

}  // namespace resample
