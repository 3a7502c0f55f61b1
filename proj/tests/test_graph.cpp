#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "resample/graph.hpp"

using namespace resample;

namespace {

DynGraph from_edges(std::size_t n, bool directed, std::initializer_list<std::pair<Vertex, Vertex>> edges) {
    DynGraph g(n, directed);
    for (auto [u, v] : edges) g.add_edge(u, v);
    return g;
}

// Random deletions and insertions that keep every degree in [lo, hi].
class ChurnAdversary final : public GraphUpdateAdversary {
   public:
    ChurnAdversary(DynGraph& g, WalkStore& s, std::size_t lo, std::size_t hi, std::uint64_t seed)
        : GraphUpdateAdversary(g, s), lo_(lo), hi_(hi), rng_(seed, streams::adversary) {}

   protected:
    std::optional<GraphUpdate> choose(const History<Walk>&) override {
        auto& g = graph();
        for (int tries = 0; tries < 100; ++tries) {
            const Vertex u = static_cast<Vertex>(rng_.below(g.vertex_count()));
            const Vertex v = static_cast<Vertex>(rng_.below(g.vertex_count()));
            if (u == v) continue;
            if (g.has_edge(u, v) && g.degree(u) > lo_ && g.degree(v) > lo_) {
                return GraphUpdate{GraphUpdate::Kind::remove, u, v};
            }
            if (!g.has_edge(u, v) && g.degree(u) < hi_ && g.degree(v) < hi_) {
                return GraphUpdate{GraphUpdate::Kind::insert, u, v};
            }
        }
        return std::nullopt;
    }

   private:
    std::size_t lo_, hi_;
    RandomSource rng_;
};

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
        for (const auto& [k, c] : store().congestion_map()) {
            const auto [u, v] = DynGraph::endpoints(k);
            if (g.degree(u) > lo_ && g.degree(v) > lo_ && (c > best_c || (c == best_c && k < best))) {
                best = k;
                best_c = c;
            }
        }
        if (best_c > 0) {
            const auto [u, v] = DynGraph::endpoints(best);
            return GraphUpdate{GraphUpdate::Kind::remove, u, v};
        }
        for (int tries = 0; tries < 200; ++tries) {
            const Vertex u = static_cast<Vertex>(rng_.below(g.vertex_count()));
            const Vertex v = static_cast<Vertex>(rng_.below(g.vertex_count()));
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

}  // namespace

TEST_CASE("graph basics") {
    DynGraph g(4, false);
    g.add_edge(2, 0);
    CHECK(g.has_edge(0, 2));
    CHECK(g.neighbors(0)[0] == 2);
    CHECK_THROWS_AS(g.add_edge(1, 1), ConfigError);
    CHECK_THROWS_AS(g.add_edge(0, 2), SettingError);
    CHECK_THROWS_AS(g.remove_edge(0, 1), SettingError);
    CHECK(g.key(0, 2) == g.key(2, 0));
    DynGraph d(3, true);
    d.add_edge(0, 1);
    CHECK_FALSE(d.has_edge(1, 0));
    CHECK(d.key(0, 1) != d.key(1, 0));
}

TEST_CASE("random regular graphs are simple and regular") {
    RandomSource rng(3, 0);
    const auto g = random_regular_graph(512, 4, rng);
    CHECK(g.min_degree() == 4);
    CHECK(g.max_degree() == 4);
    CHECK(g.edge_count() == 1024);
}

TEST_CASE("walk on a path") {
    const auto g = from_edges(2, false, {{0, 1}});
    RandomSource rng(1, 0);
    CHECK(sample_walk(g, 0, 1, rng).path == std::vector<Vertex>{0, 1});
}

TEST_CASE("star center walks hit each leaf uniformly") {
    const auto g = from_edges(5, false, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    RandomSource rng(2, 0);
    std::map<Vertex, int> hist;
    for (int i = 0; i < 10000; ++i) ++hist[sample_walk(g, 0, 1, rng).path[1]];
    for (Vertex leaf = 1; leaf <= 4; ++leaf) CHECK(std::abs(hist[leaf] / 10000.0 - 0.25) <= 0.02);
}

TEST_CASE("length-2 walk probabilities match path enumeration") {
    const auto g = from_edges(5, false, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {1, 4}});
    for (Vertex v = 0; v < 5; ++v) {
        std::map<std::vector<Vertex>, double> exact;
        double total = 0;
        for (Vertex a : g.neighbors(v)) {
            for (Vertex b : g.neighbors(a)) {
                const double p = 1.0 / (static_cast<double>(g.degree(v)) * static_cast<double>(g.degree(a)));
                exact[{v, a, b}] = p;
                total += p;
                CHECK(walk_probability(g, Walk{{v, a, b}, {}}) == doctest::Approx(p));
            }
        }
        CHECK(total == doctest::Approx(1.0));
        RandomSource rng(10 + v, 0);
        std::map<std::vector<Vertex>, int> hist;
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) ++hist[sample_walk(g, v, 2, rng).path];
        for (const auto& [path, count] : hist) REQUIRE(exact.count(path) == 1);
        for (const auto& [path, p] : exact) {
            const double sd = std::sqrt(p * (1 - p) / draws);
            CHECK(std::abs(hist[path] / static_cast<double>(draws) - p) <= 4 * sd);
        }
    }
}

TEST_CASE("isolated vertices") {
    DynGraph g(3, false);
    g.add_edge(0, 1);
    RandomSource rng(1, 0);
    CHECK_THROWS_AS(sample_walk(g, 2, 3, rng), SettingError);
    const auto w = sample_walk(g, 2, 3, rng, OnIsolated::stay);
    CHECK(w.path == std::vector<Vertex>{2, 2, 2, 2});
    CHECK(count_traversals(g, std::vector<Walk>{w}).empty());
}

TEST_CASE("congestion of a single walk") {
    const auto g = from_edges(3, false, {{0, 1}, {1, 2}});
    const std::vector<Walk> walks{Walk{{0, 1}, {}}};
    CHECK(congestion(g, walks, 0, 1) == 1);
    CHECK(congestion(g, walks, 1, 0) == 1);
    CHECK(congestion(g, walks, 1, 2) == 0);
    const std::vector<Walk> back{Walk{{0, 1, 0, 1}, {}}};
    CHECK(congestion(g, back, 0, 1) == 3);
}

TEST_CASE("static congestion means") {
    RandomSource setup(5, 0);
    const auto g = random_regular_graph(40, 4, setup);
    const std::size_t l = 6;
    const int resamples = 10000;
    SUBCASE("k = deg/2: undirected mean congestion is at most l") {
        // Every walk takes exactly l steps, so the mean is n k l / m.
        const std::size_t k = 2;
        std::vector<Walk> walks;
        RandomSource rng(6, 0);
        double sum = 0, sq = 0;
        const EdgeKey probe = g.key(g.edges()[0].first, g.edges()[0].second);
        for (int r = 0; r < resamples; ++r) {
            walks.clear();
            for (Vertex v = 0; v < g.vertex_count(); ++v) {
                for (std::size_t i = 0; i < k; ++i) walks.push_back(sample_walk(g, v, l, rng));
            }
            const auto counts = count_traversals(g, walks);
            CHECK(summarize(g, counts).mean <= static_cast<double>(l) + 1e-12);
            const auto it = counts.find(probe);
            const double c = it == counts.end() ? 0.0 : it->second;
            sum += c;
            sq += c * c;
        }
        const double mean = sum / resamples;
        const double sd = std::sqrt(sq / resamples - mean * mean);
        CHECK(mean <= static_cast<double>(l) + 3 * sd / std::sqrt(resamples));
    }
    SUBCASE("k = deg: each direction is at most l") {
        const std::size_t k = 4;
        RandomSource rng(7, 0);
        const auto [a, b] = g.edges()[3];
        double forward = 0;
        for (int r = 0; r < 2000; ++r) {
            for (Vertex v = 0; v < g.vertex_count(); ++v) {
                for (std::size_t i = 0; i < k; ++i) {
                    const auto w = sample_walk(g, v, l, rng);
                    for (std::size_t s = 0; s + 1 < w.path.size(); ++s) forward += w.path[s] == a && w.path[s + 1] == b;
                }
            }
        }
        CHECK(forward / 2000 <= static_cast<double>(l) * 1.05);
    }
}

TEST_CASE("deleting edges invalidates exactly the crossing walks") {
    RandomSource setup(8, 0);
    DynGraph g = random_regular_graph(30, 4, setup);
    WalkStore store(g, 2, WalkLength{5, std::nullopt});
    std::vector<GraphUpdate> script;
    NoResampling none;
    World<Walk> w(store.distributions(), none, {.horizon = 50, .seed = 9}, store.listener());
    REQUIRE(store.audit());

    EdgeKey idle = 0;
    bool have_idle = false;
    EdgeKey busy = 0;
    std::uint32_t busy_c = 0;
    for (auto [u, v] : g.edges()) {
        const auto c = store.congestion(u, v);
        if (c == 0 && !have_idle) {
            idle = g.key(u, v);
            have_idle = true;
        }
        if (c > busy_c) {
            busy = g.key(u, v);
            busy_c = c;
        }
    }
    const auto [bu, bv] = DynGraph::endpoints(busy);
    std::set<ObjectId> crossing;
    for (ObjectId label = 0; label < store.walk_count(); ++label) {
        if (congestion(g, std::vector<Walk>{store.walk(label)}, bu, bv) > 0) crossing.insert(label);
    }
    if (have_idle) {
        const auto [iu, iv] = DynGraph::endpoints(idle);
        script.push_back({GraphUpdate::Kind::remove, iu, iv});
    }
    script.push_back({GraphUpdate::Kind::remove, bu, bv});
    ScriptedGraphAdversary adv(g, store, script_rounds(script).rounds);
    TimeStep t = 2;
    if (have_idle) {
        run_round(w, adv, t++);
        CHECK(w.history().rows().back().adversarial.empty());
    }
    run_round(w, adv, t);
    const auto& forced = w.history().rows().back().adversarial;
    CHECK(std::set<ObjectId>(forced.begin(), forced.end()) == crossing);
    CHECK(store.congestion(bu, bv) == 0);
    CHECK(store.audit());
    for (ObjectId label = 0; label < store.walk_count(); ++label) CHECK(store.walk(label) == w.state()[label].value);
}

TEST_CASE("text formats") {
    const auto g = parse_edge_list("# tiny\n3 2 undirected\n0 1\n1 2\n");
    CHECK(g.edge_count() == 2);
    CHECK_FALSE(g.directed());
    CHECK_THROWS_AS(parse_edge_list("3 2 undirected\n0 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_edge_list("3 1 sideways\n0 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_edge_list("3 1 directed\n0 5\n"), ConfigError);
    CHECK_THROWS_AS(parse_edge_list("3 1 directed\n1 1\n"), ConfigError);

    const auto script = parse_update_script("AUDIT\nDEL 0 1\nINS 0 2\nAUDIT\nAUDIT\nDEL 1 2\n");
    REQUIRE(script.size() == 6);
    const auto sched = script_rounds(script);
    CHECK(sched.audit_at_start);
    REQUIRE(sched.rounds.size() == 3);
    CHECK(sched.rounds[1].audit_after);
    CHECK_FALSE(sched.rounds[2].audit_after);
    CHECK(sched.rounds[1].update->kind == GraphUpdate::Kind::insert);
    CHECK_THROWS_AS(parse_update_script("DROP 1 2\n"), ConfigError);
}

TEST_CASE("incremental congestion equals the recount under every scheduler") {
    for (auto kind : {SchedulerKind::none, SchedulerKind::proactive, SchedulerKind::gta, SchedulerKind::landmark}) {
        RandomSource setup(11, 0);
        DynGraph g = random_regular_graph(60, 4, setup);
        WalkStore store(g, 2, WalkLength{4, std::nullopt});
        auto sched = make_scheduler(kind);
        const TimeStep T = 300;
        World<Walk> w(store.distributions(), *sched, {.horizon = T, .seed = 12}, store.listener());
        ChurnAdversary adv(g, store, 2, 6, 13);
        for (TimeStep t = 2; t <= T; ++t) {
            run_round(w, adv, t);
            if (t % 25 == 0) {
                REQUIRE(store.audit());
                for (ObjectId label = 0; label < store.walk_count(); ++label) {
                    REQUIRE(store.walk(label) == w.state()[label].value);
                }
            }
        }
        CHECK(adv.degree_violations() == 0);
        CHECK(adv.deletions() > 50);
    }
}

TEST_CASE("landmark congestion stays low against a heavy-edge adversary") {
    // Pilot: max congestion / (log T * log n * l) peaked near 0.15.
    constexpr double kCongestionConstant = 0.25;
    RandomSource setup(14, 0);
    DynGraph g = random_regular_graph(128, 4, setup);
    const std::size_t l = 6;
    WalkStore store(g, 2, WalkLength{l, std::nullopt});
    LandmarkScheduler lm;
    const TimeStep T = 1024;
    World<Walk> w(store.distributions(), lm, {.horizon = T, .seed = 15, .history = HistoryMode::last_row},
                  store.listener());
    HeavyEdgeAdversary adv(g, store, 2, 4, 16);
    const double bound = kCongestionConstant * std::log(static_cast<double>(T)) * std::log(128.0) * l;
    double worst = 0;
    for (TimeStep t = 2; t <= T; ++t) {
        run_round(w, adv, t);
        const double c = store.congestion_summary().max;
        worst = std::max(worst, c);
        REQUIRE(c <= bound);
    }
    CHECK(store.audit());
    MESSAGE("max congestion " << worst << " against bound " << bound);
}

TEST_CASE("mixing: some walk escapes the adversary's small sets") {
    const std::size_t n = 64;
    const TimeStep T = 256;
    const auto k = static_cast<std::size_t>(std::ceil(20 * std::log(static_cast<double>(n))));
    // |S_v| <= n / (c log2 T) with c = 2.
    const std::size_t s_size = n / (2 * 8);
    int good = 0;
    const int trials = 10;
    for (int trial = 0; trial < trials; ++trial) {
        RandomSource setup(100 + trial, 0);
        DynGraph g = random_regular_graph(n, 6, setup);
        // S_v: v and its lowest-numbered neighbors, fixed up front.
        std::vector<std::set<Vertex>> s(n);
        for (Vertex v = 0; v < n; ++v) {
            s[v].insert(v);
            for (Vertex u : g.neighbors(v)) {
                if (s[v].size() < s_size) s[v].insert(u);
            }
        }
        WalkStore store(g, k, WalkLength{8, std::nullopt});
        LandmarkScheduler lm;
        World<Walk> w(store.distributions(), lm, {.horizon = T, .seed = 200 + static_cast<std::uint64_t>(trial),
                                                  .history = HistoryMode::last_row},
                      store.listener());
        ChurnAdversary adv(g, store, 3, 8, 300 + trial);
        for (TimeStep t = 2; t <= T; ++t) run_round(w, adv, t);
        bool all = true;
        for (Vertex v = 0; v < n; ++v) {
            bool escaped = false;
            for (std::size_t i = 0; i < k && !escaped; ++i) {
                escaped = s[v].count(store.walk(store.label(v, i)).path.back()) == 0;
            }
            all = all && escaped;
        }
        good += all;
    }
    CHECK(good >= trials * 99 / 100);
}

TEST_CASE("pagerank oracle") {
    CHECK(pagerank_oracle(DynGraph(1, true), 0.2) == std::vector<double>{1.0});
    const auto pair = pagerank_oracle(from_edges(2, true, {{0, 1}, {1, 0}}), 0.2);
    CHECK(pair[0] == doctest::Approx(0.5));
    CHECK(pair[1] == doctest::Approx(0.5));
    for (double p : pagerank_oracle(from_edges(3, true, {{0, 1}, {1, 2}, {2, 0}}), 0.15)) {
        CHECK(p == doctest::Approx(1.0 / 3.0));
    }
    // Dangling vertex: oracle matches the closed form for 0 -> 1.
    // p1 = lambda/2 + (1-lambda)(p0 + p1/2), p0 = lambda/2 + (1-lambda) p1/2.
    const double lambda = 0.3;
    const auto dang = pagerank_oracle(from_edges(2, true, {{0, 1}}), lambda);
    const double p0 = dang[0];
    CHECK(p0 == doctest::Approx(lambda / 2 + (1 - lambda) * dang[1] / 2));
    CHECK(dang[0] + dang[1] == doctest::Approx(1.0));
}

TEST_CASE("pagerank estimate formula and static accuracy") {
    {
        // H_v = 10, n = 5, k = 4, lambda = 0.2.
        const auto g = from_edges(5, true, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
        WalkStore store(g, 4, {.lambda = 0.2});
        auto listen = store.listener();
        for (ObjectId label = 0; label < store.walk_count(); ++label) {
            Walk w{{store.source(label)}, {}};
            if (label < 10) w.path = {store.source(label), 2};
            if (store.source(label) == 2) w.path = {2};
            listen(label, nullptr, w, 1);
        }
        // Walks from 0 and 1 (8 of them) end at 2, plus the 4 walks from 2.
        CHECK(store.visits(2) == 12);
        CHECK(pagerank_estimate(store, 2) == doctest::Approx(12.0 / 100.0));
    }
    RandomSource setup(21, 0);
    const auto g = random_out_graph(60, 3, setup);
    const double lambda = 0.2;
    const auto oracle = pagerank_oracle(g, lambda);
    WalkStore store(g, 200, {.lambda = lambda});
    NoResampling none;
    World<Walk> w(store.distributions(), none, {.horizon = 1, .seed = 22}, store.listener());
    for (Vertex v = 0; v < 60; ++v) {
        if (oracle[v] >= 2.0 / 60) CHECK(std::abs(pagerank_estimate(store, v) - oracle[v]) <= 0.2 * oracle[v]);
    }
}

TEST_CASE("geometric walk lengths") {
    const auto g = from_edges(3, true, {{0, 1}, {1, 2}, {2, 0}});
    RandomSource rng(23, 0);
    const double lambda = 0.25;
    std::map<std::size_t, int> hist;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) ++hist[sample_geometric_walk(g, 0, lambda, rng).steps()];
    for (std::size_t m = 0; m < 6; ++m) {
        const double p = lambda * std::pow(1 - lambda, static_cast<double>(m));
        CHECK(std::abs(hist[m] / static_cast<double>(draws) - p) <= 4 * std::sqrt(p * (1 - p) / draws));
    }
}

TEST_CASE("list coloring") {
    CHECK(list_colorable(DynGraph(0, false), {}).verdict == ColorVerdict::colorable);
    const DynGraph edgeless(4, false);
    CHECK(list_colorable(edgeless, {{7}, {7}, {7}, {7}}).verdict == ColorVerdict::colorable);
    const auto tri = from_edges(3, false, {{0, 1}, {1, 2}, {0, 2}});
    CHECK(list_colorable(tri, {{1}, {1}, {1}}).verdict == ColorVerdict::not_colorable);
    CHECK(list_colorable(tri, {{1, 2}, {1, 2}, {1, 2}}).verdict == ColorVerdict::not_colorable);
    const auto ok = list_colorable(tri, {{1, 2}, {2, 3}, {1, 3}});
    REQUIRE(ok.verdict == ColorVerdict::colorable);
    CHECK(coloring_proper(tri, {{1, 2}, {2, 3}, {1, 3}}, ok.coloring));
    // Only the subset is constrained.
    const std::vector<Vertex> two{0, 1};
    CHECK(list_colorable(tri, {{1, 2}, {1, 2}, {1, 2}}, two).verdict == ColorVerdict::colorable);

    SUBCASE("agrees with brute force on small random instances") {
        RandomSource rng(24, 0);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng.below(6);
            DynGraph g(n, false);
            for (Vertex u = 0; u < n; ++u) {
                for (Vertex v = u + 1; v < n; ++v) {
                    if (rng.bernoulli(0.5)) g.add_edge(u, v);
                }
            }
            std::vector<std::vector<Color>> pal(n);
            for (auto& p : pal) {
                for (std::size_t c : rng.sample_without_replacement(4, 1 + rng.below(3))) p.push_back(static_cast<Color>(c));
            }
            // Enumerate every choice of one color per vertex.
            bool any = false;
            std::vector<std::size_t> idx(n, 0);
            while (true) {
                std::vector<Color> col(n);
                for (Vertex v = 0; v < n; ++v) col[v] = pal[v][idx[v]];
                any = any || coloring_proper(g, pal, col);
                std::size_t pos = 0;
                while (pos < n && ++idx[pos] == pal[pos].size()) idx[pos++] = 0;
                if (pos == n) break;
            }
            const auto res = list_colorable(g, pal);
            REQUIRE(res.verdict == (any ? ColorVerdict::colorable : ColorVerdict::not_colorable));
            if (any) REQUIRE(coloring_proper(g, pal, res.coloring));
        }
    }
    SUBCASE("budget exhaustion is indeterminate") {
        // K5 with four shared colors needs a full search to refute.
        DynGraph k5(5, false);
        for (Vertex u = 0; u < 5; ++u) {
            for (Vertex v = u + 1; v < 5; ++v) k5.add_edge(u, v);
        }
        std::vector<std::vector<Color>> pal(5, std::vector<Color>{0, 1, 2, 3});
        CHECK(list_colorable(k5, pal, {}, 3).verdict == ColorVerdict::indeterminate);
        CHECK(list_colorable(k5, pal).verdict == ColorVerdict::not_colorable);
    }
}

TEST_CASE("palette ranges") {
    PaletteParams p{.n = 10, .delta = 3, .epsilon = 0.5};
    PaletteState ps(p);
    RandomSource rng(25, 0);
    std::vector<Vertex> all{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    palette_resample(ps, all, 1, rng);
    CHECK(ps.ranges_in_use() == 1);
    CHECK(ps.colors_in_use() == 4);
    // Palette size ceil(8 ln 10) exceeds the width: the whole range.
    CHECK(ps.palette(0).size() == 4);
    std::vector<Vertex> some{2, 5};
    palette_resample(ps, some, 2, rng);
    CHECK(ps.ranges_in_use() == 2);
    CHECK(ps.range_of(2) == 1);
    CHECK(ps.palette(5).front() >= 4);
    CHECK(ps.ranges_consistent());

    PaletteParams tf{.n = 100, .delta = 16, .epsilon = 0.5, .mode = PaletteMode::triangle_free, .size_constant = 0.5};
    PaletteState pt(tf);
    CHECK(pt.range_width() == static_cast<std::size_t>(std::ceil(4.0 * 16 / (0.5 * std::log(16.0)))));
    CHECK(pt.palette_size() == static_cast<std::size_t>(std::ceil(0.5 * (4.0 + std::sqrt(std::log(100.0))))));
}

TEST_CASE("palette maintenance under an inserting adversary") {
    const std::size_t n = 60;
    const std::size_t delta = 6;
    PaletteParams p{.n = n, .delta = delta, .epsilon = 0.5, .size_constant = 0.5};
    RandomSource setup(26, 0);
    const TimeStep T = 400;
    PaletteMaintenance pm(DynGraph(n, false), p, T, 27);
    std::size_t max_ranges = 0;
    std::size_t verdicts = 0;
    for (TimeStep t = 2; t <= T; ++t) {
        const auto& g = pm.graph();
        std::optional<GraphUpdate> up;
        for (int tries = 0; tries < 50 && !up; ++tries) {
            const Vertex u = static_cast<Vertex>(setup.below(n));
            const Vertex v = static_cast<Vertex>(setup.below(n));
            if (u == v) continue;
            if (g.has_edge(u, v)) {
                up = GraphUpdate{GraphUpdate::Kind::remove, u, v};
            } else if (g.degree(u) < delta && g.degree(v) < delta) {
                up = GraphUpdate{GraphUpdate::Kind::insert, u, v};
            }
        }
        pm.step(up);
        REQUIRE(pm.state().ranges_consistent());
        REQUIRE(pm.state().ranges_in_use() == pm.scheduler().group_count());
        max_ranges = std::max(max_ranges, pm.state().ranges_in_use());
        if (t % 40 == 0) {
            const auto a = pm.audit();
            verdicts += a.colorable + a.not_colorable;
            CHECK(a.indeterminate == 0);
        }
    }
    CHECK(max_ranges <= 3);
    CHECK(static_cast<double>(pm.algorithm_samples()) <= gta_budget(pm.alpha(), n, pm.adversarial_samples()));
    CHECK(verdicts > 0);
    CHECK_THROWS_AS(PaletteMaintenance(from_edges(3, false, {{0, 1}, {0, 2}}), PaletteParams{.n = 3, .delta = 1}, 5, 1),
                    SettingError);
}
