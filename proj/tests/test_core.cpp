#include <array>
#include <map>
#include <sstream>

#include "doctest.h"
#include "resample/core.hpp"
#include "resample/schedulers.hpp"

using namespace resample;

namespace {

std::vector<Distribution<int>> uniform_bits(std::size_t n) {
    return std::vector<Distribution<int>>(n, uniform_over<int>({0, 1}));
}

FunctionAdversary<int> idle() { return FunctionAdversary<int>({}, {}); }

}  // namespace

TEST_CASE("initialization samples every object at t = 1") {
    NoResampling none;
    World<int> w(uniform_bits(1), none, {.horizon = 1, .seed = 7});
    CHECK(w.time() == 1);
    REQUIRE(w.state().size() == 1);
    CHECK(w.state()[0].origin == 1);
    CHECK((w.state()[0].value == 0 || w.state()[0].value == 1));
}

TEST_CASE("adversarial sample under proactive scheduling sets origin and schedule") {
    ProactiveScheduler pro;
    World<int> w(uniform_bits(4), pro, {.horizon = 20, .seed = 1});
    FunctionAdversary<int> adv({}, [](const History<int>& h) {
        return h.next_time() == 5 ? std::vector<ObjectId>{3} : std::vector<ObjectId>{};
    });
    for (TimeStep t = 2; t <= 5; ++t) run_round(w, adv, t);
    CHECK(w.state()[3].origin == 5);
    CHECK(pro.pending(3) == std::vector<TimeStep>{6, 7, 9, 13});
}

TEST_CASE("identical seeds replay an identical history") {
    auto run = [](std::uint64_t seed) {
        GtaScheduler gta(2.0);
        World<int> w(uniform_bits(6), gta, {.horizon = 40, .seed = seed});
        RandomSource adv_rng(seed, streams::adversary);
        FunctionAdversary<int> adv(
            [&](const History<int>& h) {
                std::vector<DistributionSpec<int>> out;
                if (h.next_time() % 3 == 0) out.push_back({1, point_mass(5)});
                return out;
            },
            [&](const History<int>& h) {
                std::vector<ObjectId> out;
                const auto* last = h.last();
                if (last && !last->realized.empty() && last->realized.front().second == 0) out.push_back(0);
                out.push_back(static_cast<ObjectId>(adv_rng.below(6)));
                return out;
            });
        for (TimeStep t = 2; t <= 40; ++t) run_round(w, adv, t);
        std::ostringstream os;
        write_history(os, w.history());
        return os.str();
    };
    const auto a = run(99);
    CHECK(a == run(99));
    CHECK(a != run(100));
    CHECK(a.size() > 100);
}

TEST_CASE("unknown object ids are configuration errors") {
    NoResampling none;
    World<int> w(uniform_bits(2), none, {.horizon = 5, .seed = 1});
    FunctionAdversary<int> bad_dist([](const History<int>&) {
        return std::vector<DistributionSpec<int>>{{7, point_mass(1)}};
    }, {});
    CHECK_THROWS_AS(run_round(w, bad_dist, 2), ConfigError);

    NoResampling none2;
    World<int> w2(uniform_bits(2), none2, {.horizon = 5, .seed = 1});
    FunctionAdversary<int> bad_pick({}, [](const History<int>&) { return std::vector<ObjectId>{2}; });
    CHECK_THROWS_AS(run_round(w2, bad_pick, 2), ConfigError);
}

TEST_CASE("rounds must be consecutive and inside the horizon") {
    NoResampling none;
    World<int> w(uniform_bits(2), none, {.horizon = 2, .seed = 1});
    auto adv = idle();
    CHECK_THROWS_AS(run_round(w, adv, 3), ConfigError);
    run_round(w, adv, 2);
    CHECK_THROWS_AS(run_round(w, adv, 3), ConfigError);
}

TEST_CASE("static_sample is a pure product draw") {
    SUBCASE("point masses") {
        NoResampling none;
        World<int> w(std::vector<Distribution<int>>(5, point_mass(4)), none, {.horizon = 1, .seed = 3});
        RandomSource rng(3, 9);
        CHECK(static_sample(w, rng) == std::vector<int>(5, 4));
    }
    SUBCASE("product measure frequency") {
        NoResampling none;
        World<char> w(std::vector<Distribution<char>>(2, uniform_over<char>({'A', 'B'})), none,
                      {.horizon = 1, .seed = 3});
        const auto before = w.state();
        RandomSource rng(11, 0);
        int both_a = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            const auto v = static_sample(w, rng);
            both_a += (v[0] == 'A' && v[1] == 'A');
        }
        CHECK(std::abs(static_cast<double>(both_a) / draws - 0.25) <= 0.01);
        for (ObjectId u = 0; u < 2; ++u) {
            CHECK(w.state()[u].origin == before[u].origin);
            CHECK(w.state()[u].value == before[u].value);
        }
    }
}

TEST_CASE("supports are normalized") {
    CHECK(support_is_normalized(uniform_over<int>({1, 2, 3})));
    CHECK(support_is_normalized(point_mass(2)));
    Distribution<int> no_support;
    CHECK_FALSE(support_is_normalized(no_support));
}

TEST_CASE("evaluate_load applies the load in object order") {
    NoResampling none;
    World<int> w(std::vector<Distribution<int>>(6, point_mass(3)), none, {.horizon = 1, .seed = 1});
    CHECK(evaluate_load(count_equal(3), w.state()) == 6.0);
    CHECK(evaluate_load(count_equal(4), w.state()) == 0.0);
}

TEST_CASE("splices of two vectors are bounded by the sum of loads") {
    const std::vector<int> x{1, 1, 0, 0};
    const std::vector<int> y{1, 0, 1, 1};
    const auto f = count_equal(1);
    std::array<std::vector<int>, 2> src{x, y};
    for (unsigned mask = 0; mask < 16; ++mask) {
        std::vector<std::size_t> choice(4);
        for (int i = 0; i < 4; ++i) choice[i] = (mask >> i) & 1u;
        const auto z = splice<int>(src, choice);
        CHECK(f(z) <= f(x) + f(y));
    }
}

TEST_CASE("k-way splices obey the k*L bound, exhaustively for n=4, k=3") {
    // Binary universe, load = number of ones. Every triple of vectors with
    // load <= L and every one of the 3^4 splices.
    const auto f = count_equal(1);
    std::vector<std::vector<int>> all;
    for (unsigned m = 0; m < 16; ++m) {
        std::vector<int> v(4);
        for (int i = 0; i < 4; ++i) v[i] = (m >> i) & 1u;
        all.push_back(v);
    }
    std::size_t checked = 0;
    for (int L = 0; L <= 4; ++L) {
        std::vector<std::vector<int>> light;
        for (const auto& v : all) {
            if (f(v) <= L) light.push_back(v);
        }
        for (const auto& a : light) {
            for (const auto& b : light) {
                for (const auto& c : light) {
                    std::array<std::vector<int>, 3> src{a, b, c};
                    for (int code = 0; code < 81; ++code) {
                        std::vector<std::size_t> choice(4);
                        int r = code;
                        for (int i = 0; i < 4; ++i, r /= 3) choice[i] = static_cast<std::size_t>(r % 3);
                        const auto z = splice<int>(src, choice);
                        REQUIRE(f(z) <= 3.0 * L);
                        ++checked;
                    }
                }
            }
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("random splice triples never break subadditivity of the counting load") {
    RandomSource rng(2024, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(12);
        std::array<std::vector<int>, 2> src;
        for (auto& v : src) {
            v.resize(n);
            for (auto& x : v) x = static_cast<int>(rng.below(3));
        }
        std::vector<std::size_t> choice(n);
        for (auto& c : choice) c = rng.below(2);
        const auto z = splice<int>(src, choice);
        const auto f = count_equal(static_cast<int>(rng.below(3)));
        REQUIRE(f(z) <= f(src[0]) + f(src[1]));
    }
}

TEST_CASE("origins equal the last round an object was sampled") {
    for (auto kind : {SchedulerKind::none, SchedulerKind::proactive, SchedulerKind::gta, SchedulerKind::landmark}) {
        auto sched = make_scheduler(kind);
        const std::size_t n = 9;
        World<int> w(uniform_bits(n), *sched, {.horizon = 80, .seed = 5});
        RandomSource rng(5, streams::adversary);
        FunctionAdversary<int> adv({}, [&](const History<int>&) {
            std::vector<ObjectId> out;
            if (rng.bernoulli(0.5)) out.push_back(static_cast<ObjectId>(rng.below(n)));
            return out;
        });
        for (TimeStep t = 2; t <= 80; ++t) run_round(w, adv, t);
        std::vector<TimeStep> last(n, 0);
        for (const auto& row : w.history().rows()) {
            for (ObjectId u : row.adversarial) last[u] = row.time;
            for (ObjectId u : row.algorithm) last[u] = row.time;
        }
        for (ObjectId u = 0; u < n; ++u) CHECK(w.state()[u].origin == last[u]);
    }
}

TEST_CASE("an object both adversarial and due is sampled once") {
    ProactiveScheduler pro;
    World<int> w(uniform_bits(2), pro, {.horizon = 10, .seed = 5});
    // Object 0 is proactively due at t = 2 (1 + 2^0).
    FunctionAdversary<int> adv({}, [](const History<int>&) { return std::vector<ObjectId>{0}; });
    run_round(w, adv, 2);
    const auto* row = w.history().last();
    CHECK(row->adversarial == std::vector<ObjectId>{0});
    CHECK(row->algorithm == std::vector<ObjectId>{1});
    CHECK(row->realized.size() == 2);
}

TEST_CASE("last_row history keeps only the newest row") {
    NoResampling none;
    World<int> w(uniform_bits(3), none, {.horizon = 10, .seed = 5, .history = HistoryMode::last_row});
    FunctionAdversary<int> adv({}, [](const History<int>& h) {
        return std::vector<ObjectId>{static_cast<ObjectId>(h.next_time() % 3)};
    });
    for (TimeStep t = 2; t <= 10; ++t) run_round(w, adv, t);
    CHECK(w.history().rows().empty());
    CHECK(w.history().last()->time == 10);
    CHECK(w.history().last_time() == 10);
}

TEST_CASE("random source is a function of seed and stream") {
    RandomSource a(5, 1), b(5, 1), c(5, 2);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs |= (x != c.next_u64());
    }
    CHECK(differs);
    RandomSource r(1, 1);
    std::map<std::uint64_t, int> hist;
    for (int i = 0; i < 60000; ++i) ++hist[r.below(3)];
    for (const auto& [k, v] : hist) CHECK(std::abs(v - 20000) < 600);
    const auto picks = r.sample_without_replacement(10, 10);
    std::vector<std::size_t> sorted(picks);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("geometric draws have the right mean") {
    RandomSource r(3, 3);
    double sum = 0;
    const int draws = 200000;
    for (int i = 0; i < draws; ++i) sum += static_cast<double>(r.geometric(0.2));
    // Mean (1 - p) / p = 4, sd sqrt(1-p)/p ~ 4.47.
    CHECK(std::abs(sum / draws - 4.0) < 5 * 4.47 / std::sqrt(draws));
}
