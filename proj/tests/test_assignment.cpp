#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "resample/assignment.hpp"
#include "resample/schedulers.hpp"

using namespace resample;

namespace {

// Job 0 with routines {a}, {b}, {S}; machines a=0, b=1, S=2.
Hypergraph three_way(std::size_t jobs) {
    Hypergraph h(jobs, 2 * jobs + 1);
    const MachineId s = static_cast<MachineId>(2 * jobs);
    for (JobId j = 0; j < jobs; ++j) {
        h.add_routine(j, {2 * j});
        h.add_routine(j, {2 * j + 1});
        h.add_routine(j, {s});
    }
    return h;
}

// Random instance with routines of one or two machines.
Hypergraph random_instance(std::size_t jobs, std::size_t machines, std::size_t degree, RandomSource& rng) {
    Hypergraph h(jobs, machines);
    for (JobId j = 0; j < jobs; ++j) {
        for (std::size_t d = 0; d < degree; ++d) {
            std::vector<MachineId> ms{static_cast<MachineId>(rng.below(machines))};
            if (rng.bernoulli(0.5)) ms.push_back(static_cast<MachineId>(rng.below(machines)));
            h.add_routine(j, ms);
        }
    }
    return h;
}

// Deleting x leaves every job with an alive routine.
bool safe_to_delete(const Hypergraph& h, MachineId x) {
    if (!h.machine_alive(x)) return false;
    std::map<JobId, std::size_t> lost;
    for (RoutineId r : h.routines_using(x)) {
        if (h.routine_alive(r)) ++lost[h.routine(r).job];
    }
    for (const auto& [j, count] : lost) {
        if (count >= h.alive_routines(j).size()) return false;
    }
    return true;
}

// Deletes the most loaded machine it can delete safely.
class GreedyDeleter final : public MachineDeletionAdversary {
   public:
    using MachineDeletionAdversary::MachineDeletionAdversary;
    std::optional<MachineId> choose(const History<RoutineId>&) override {
        std::optional<MachineId> best;
        std::size_t best_load = 0;
        const auto& h = setting().graph();
        for (MachineId x = 0; x < h.machine_count(); ++x) {
            if (!safe_to_delete(h, x)) continue;
            const auto load = setting().machine_load(x);
            if (!best || load > best_load) {
                best = x;
                best_load = load;
            }
        }
        if (best) {
            deleted.push_back(*best);
            load_at_deletion.push_back(best_load);
        }
        return best;
    }
    std::vector<MachineId> deleted;
    std::vector<std::size_t> load_at_deletion;
};

}  // namespace

TEST_CASE("deleting the machine of an assigned routine forces the job") {
    Hypergraph h(1, 2);
    const auto r0 = h.add_routine(0, {0});
    h.add_routine(0, {1});
    JobMachine jm(std::move(h));
    jm.assign(0, r0);
    CHECK(jm.delete_machine(0) == std::vector<JobId>{0});
    CHECK(jm.recourse() == 1);
}

TEST_CASE("deleting an unused machine forces nobody") {
    Hypergraph h(1, 3);
    const auto r0 = h.add_routine(0, {0});
    h.add_routine(0, {1});
    JobMachine jm(std::move(h));
    jm.assign(0, r0);
    CHECK(jm.delete_machine(2).empty());
    CHECK(jm.delete_machine(1).empty());
    CHECK(jm.recourse() == 0);
    CHECK_THROWS_AS(jm.delete_machine(1), SettingError);
}

TEST_CASE("a job losing its last routine is unrecoverable") {
    Hypergraph h(1, 1);
    h.add_routine(0, {0});
    JobMachine jm(std::move(h));
    jm.assign(0, 0);
    CHECK_THROWS_AS(jm.delete_machine(0), SettingError);
}

TEST_CASE("resample_job is uniform over alive routines") {
    SUBCASE("single routine") {
        Hypergraph h(1, 1);
        h.add_routine(0, {0});
        JobMachine jm(std::move(h));
        RandomSource rng(1, 0);
        CHECK(jm.resample_job(0, rng) == 0);
    }
    SUBCASE("three routines") {
        JobMachine jm(three_way(1));
        RandomSource rng(2, 0);
        std::map<RoutineId, int> hist;
        for (int i = 0; i < 10000; ++i) ++hist[jm.resample_job(0, rng)];
        REQUIRE(hist.size() == 3);
        for (const auto& [r, c] : hist) CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) <= 0.02);
    }
    SUBCASE("dead routines are never drawn") {
        Hypergraph h(1, 5);
        for (MachineId x = 0; x < 5; ++x) h.add_routine(0, {x});
        JobMachine jm(std::move(h));
        jm.assign(0, 0);
        jm.delete_machine(1);
        jm.delete_machine(2);
        jm.delete_machine(3);
        RandomSource rng(3, 0);
        std::set<RoutineId> seen;
        for (int i = 0; i < 10000; ++i) seen.insert(jm.resample_job(0, rng));
        CHECK(seen == std::set<RoutineId>{0, 4});
    }
}

TEST_CASE("target load formula") {
    {
        JobMachine jm(three_way(1));
        CHECK(jm.target_load(2) == doctest::Approx(1.0 / 3.0));
    }
    {
        JobMachine jm(three_way(2));
        CHECK(jm.target_load(4) == doctest::Approx(2.0 / 3.0));
        jm.assign(0, 2);
        jm.assign(1, 5);
        jm.delete_machine(0);
        jm.delete_machine(1);
        CHECK(jm.target_load(4) == doctest::Approx(1.0 + 1.0 / 3.0));
    }
}

TEST_CASE("machine load is an integer count of assigned routines") {
    JobMachine jm(three_way(3));
    CHECK(jm.machine_load(6) == 0);
    jm.assign(0, 2);
    jm.assign(1, 5);
    jm.assign(2, 6);
    CHECK(jm.machine_load(6) == 2);
    CHECK(jm.machine_load(4) == 1);
    CHECK(jm.machine_load(6) <= jm.graph().job_count());
}

TEST_CASE("static machine load matches the target in expectation") {
    RandomSource setup(9, 0);
    Hypergraph h = random_instance(50, 20, 4, setup);
    const MachineId probe = 3;
    const double target = h.target_load(probe);
    NoResampling none;
    World<RoutineId> w(job_distributions(h), none, {.horizon = 1, .seed = 4});
    RandomSource rng(10, 0);
    double sum = 0, sq = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        double load = 0;
        for (RoutineId r : static_sample(w, rng)) {
            const auto& ms = h.routine(r).machines;
            load += std::count(ms.begin(), ms.end(), probe);
        }
        sum += load;
        sq += load * load;
    }
    const double mean = sum / draws;
    const double sd = std::sqrt(sq / draws - mean * mean);
    CHECK(std::abs(mean - target) <= 3 * sd / std::sqrt(draws) + 1e-12);
}

TEST_CASE("greedy deletions under every scheduler keep the assignment valid") {
    for (auto kind : {SchedulerKind::none, SchedulerKind::proactive, SchedulerKind::gta, SchedulerKind::landmark}) {
        RandomSource setup(21, 0);
        JobMachine jm(random_instance(40, 30, 5, setup));
        const auto dists = job_distributions(jm.graph());
        auto sched = make_scheduler(kind);
        World<RoutineId> w(dists, *sched, {.horizon = 200, .seed = 22}, assignment_listener(jm));
        GreedyDeleter adv(jm);
        std::uint64_t sum_loads = 0;
        for (TimeStep t = 2; t <= 200; ++t) {
            const auto before = adv.deleted.size();
            run_round(w, adv, t);
            if (adv.deleted.size() > before) sum_loads += adv.load_at_deletion.back();
            REQUIRE(jm.assignment_valid());
            for (JobId j = 0; j < jm.graph().job_count(); ++j) REQUIRE(w.state()[j].value == *jm.assigned(j));
        }
        CHECK(adv.deletions() > 10);
        CHECK(jm.recourse() == sum_loads);
        CHECK(w.adversarial_samples() == sum_loads);
    }
}

TEST_CASE("load versus historical target under temporal aggregation") {
    // Routines of at most two machines. With
    //   ratio = load(x_t) / (log2|J| * log2 T * (max_{t'<=t} target_{t'}(x_t) + 1)),
    // a pilot over these seeds peaked well below 0.5; the constant is frozen at 1.
    constexpr double kLoadTargetConstant = 1.0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        RandomSource setup(seed, 0);
        const std::size_t jobs = 60;
        JobMachine jm(random_instance(jobs, 40, 6, setup));
        GtaScheduler gta(2.0);
        const TimeStep T = 120;
        World<RoutineId> w(job_distributions(jm.graph()), gta, {.horizon = T, .seed = seed}, assignment_listener(jm));
        GreedyDeleter adv(jm);
        std::vector<double> max_target(jm.graph().machine_count(), 0.0);
        auto track = [&] {
            for (MachineId x = 0; x < jm.graph().machine_count(); ++x) {
                if (jm.graph().machine_alive(x)) max_target[x] = std::max(max_target[x], jm.target_load(x));
            }
        };
        track();
        double charged = 0.0;
        for (TimeStep t = 2; t <= T; ++t) {
            const auto before = adv.deleted.size();
            run_round(w, adv, t);
            if (adv.deleted.size() > before) {
                const MachineId x = adv.deleted.back();
                const double load = static_cast<double>(adv.load_at_deletion.back());
                const double scale = std::log2(static_cast<double>(jobs)) * std::log2(static_cast<double>(T)) *
                                     (max_target[x] + 1.0);
                worst = std::max(worst, load / scale);
                REQUIRE(load <= kLoadTargetConstant * scale);
                charged += max_target[x];
            }
            track();
        }
        // Sum over deletions of the historical target of the deleted machine.
        CHECK(charged <= 2.0 * harmonic(jm.graph().max_degree()) * static_cast<double>(jobs) + 1e-9);
    }
    MESSAGE("worst load/target ratio: " << worst);
}

TEST_CASE("instances load from JSON") {
    const std::string text = R"({
        "jobs": [10, 11],
        "machines": [1, 2, 3],
        "routines": [{"job": 10, "machines": [1]}, {"job": 10, "machines": [2, 3]},
                     {"job": 11, "machines": [3]}, {"job": 11, "machines": [1]}],
        "script": [{"delete_machine": 2}, {"idle": true}, {"delete_machine": 1}]
    })";
    const auto inst = parse_jobmachine_instance(text);
    CHECK(inst.graph.job_count() == 2);
    CHECK(inst.graph.machine_count() == 3);
    CHECK(inst.graph.routine_count() == 4);
    CHECK(inst.graph.routine(1).machines == std::vector<MachineId>{1, 2});
    REQUIRE(inst.script.size() == 3);
    CHECK(inst.script[0] == std::optional<MachineId>(1));
    CHECK_FALSE(inst.script[1].has_value());
    CHECK_THROWS_AS(parse_jobmachine_instance(R"({"jobs": [1], "machines": [], "routines": [], "extra": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_jobmachine_instance(R"({"jobs": [1], "machines": [2], "routines": [{"job": 5, "machines": [2]}]})"),
                    ConfigError);
}

TEST_CASE("balls and bins") {
    RandomSource rng(5, 0);
    BinsState b(3, 0, rng);
    CHECK(b.delete_bin(0, rng) == 0);
    CHECK(b.alive_count() == 2);
    CHECK_THROWS_AS(b.delete_bin(0, rng), SettingError);
    b.delete_bin(1, rng);
    CHECK_THROWS_AS(b.delete_bin(2, rng), SettingError);

    SUBCASE("balls spread uniformly over the survivors") {
        std::map<std::size_t, int> hist;
        for (int trial = 0; trial < 3000; ++trial) {
            RandomSource r(100 + trial, 0);
            BinsState s(3, 3, r);
            const auto occ = s.occupancy(0);
            CHECK(s.delete_bin(0, r) == occ);
            for (std::size_t ball = 0; ball < 3; ++ball) {
                CHECK(s.alive(s.bin_of(ball)));
                ++hist[s.bin_of(ball)];
            }
            CHECK(s.recourse_log().back() == occ);
        }
        CHECK(std::abs(hist[1] - hist[2]) < 300);
    }
}

TEST_CASE("cuckoo rule") {
    RandomSource rng(8, 0);
    SUBCASE("one group") {
        GroupState gs(10, 1, 0.0, rng);
        const auto moved = cuckoo_join(gs, 3, 2, rng);
        CHECK(moved.size() == 3);
        CHECK(gs.group_size(0) == 10);
    }
    SUBCASE("k = 0") {
        GroupState gs(10, 3, 0.0, rng);
        CHECK(cuckoo_join(gs, 3, 0, rng) == std::vector<std::size_t>{3});
    }
    SUBCASE("k + 1 reassignments in large groups") {
        GroupState gs(400, 4, 0.2, rng);
        for (int i = 0; i < 200; ++i) {
            const auto moved = cuckoo_join(gs, rng.below(400), 3, rng);
            CHECK(moved.size() == 4);
            CHECK(std::set<std::size_t>(moved.begin(), moved.end()).size() == 4);
        }
        std::size_t total = 0;
        for (std::size_t g = 0; g < 4; ++g) total += gs.group_size(g);
        CHECK(total == 400);
        CHECK(gs.tallies_consistent());
    }
}

TEST_CASE("rotation rule") {
    RandomSource rng(9, 0);
    GroupState gs(50, 5, 0.1, rng);
    std::vector<std::size_t> before(5);
    for (std::size_t g = 0; g < 5; ++g) before[g] = gs.group_size(g);
    const std::size_t p = 7;
    const auto old_group = gs.group_of(p);
    const auto moved = rotation_join(gs, p, 1, rng);
    CHECK(moved.size() == 2);
    CHECK(moved[0] == p);
    // Labels only change by p's old label leaving and one fresh label arriving.
    const auto fresh = gs.group_of(moved[1]);
    std::vector<std::size_t> expected(before);
    --expected[old_group];
    ++expected[fresh];
    for (std::size_t g = 0; g < 5; ++g) CHECK(gs.group_size(g) == expected[g]);
    for (int i = 0; i < 100; ++i) {
        const auto chain = rotation_join(gs, rng.below(50), 4, rng);
        CHECK(chain.size() == 5);
        CHECK(std::set<std::size_t>(chain.begin(), chain.end()).size() == 5);
    }
    CHECK(gs.tallies_consistent());
}

TEST_CASE("charging sum examples") {
    CHECK(nested_charging_sum({{1, 2, 3, 4}, {1, 2}}, {{1, 2}, {1, 2}}) == doctest::Approx(1.5));
    CHECK(nested_charging_sum({{1, 2, 3}, {1, 2}}, {{}, {}}) == 0.0);
    CHECK_THROWS_AS(nested_charging_sum({{1, 2}, {1, 2}, {1, 2}}, {{1}, {1}, {1}}), ConfigError);
    CHECK_THROWS_AS(nested_charging_sum({{1, 2}, {1, 3}}, {{}, {}}), ConfigError);
    CHECK_THROWS_AS(nested_charging_sum({{1, 2}}, {{5}}), ConfigError);
    CHECK(harmonic(1) == 1.0);
    CHECK(harmonic(4) == doctest::Approx(25.0 / 12.0));
}
