#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "resample/core.hpp"
#include "resample/schedulers.hpp"

namespace resample {

using Vertex = std::uint32_t;
using EdgeKey = std::uint64_t;

// Dynamic graphs -------------------------------------------------------------

// Simple graph on a fixed vertex set. Neighbor lists are kept sorted so
// iteration order never depends on the update history.
class DynGraph {
   public:
    DynGraph(std::size_t n, bool directed);

    std::size_t vertex_count() const { return out_.size(); }
    bool directed() const { return directed_; }
    std::size_t edge_count() const { return edges_; }
    std::uint64_t revision() const { return revision_; }

    bool has_edge(Vertex u, Vertex v) const;
    // Self-loops and unknown vertices are ConfigError; duplicates SettingError.
    void add_edge(Vertex u, Vertex v);
    // SettingError if the edge is not alive.
    void remove_edge(Vertex u, Vertex v);

    // Out-neighbors (all neighbors when undirected), sorted.
    std::span<const Vertex> neighbors(Vertex v) const { return out_.at(v); }
    std::size_t degree(Vertex v) const { return out_.at(v).size(); }
    std::size_t min_degree() const;
    std::size_t max_degree() const;
    // Alive edges as (u, v); u < v when undirected. Sorted.
    std::vector<std::pair<Vertex, Vertex>> edges() const;

    // Identifies an edge; orientation-free when undirected.
    EdgeKey key(Vertex u, Vertex v) const;
    static std::pair<Vertex, Vertex> endpoints(EdgeKey k) {
        return {static_cast<Vertex>(k >> 32), static_cast<Vertex>(k & 0xffffffffu)};
    }

   private:
    void check_vertex(Vertex v) const;

    bool directed_;
    std::vector<std::vector<Vertex>> out_;
    std::size_t edges_ = 0;
    std::uint64_t revision_ = 0;
};

// Header `n m directed|undirected`, then m lines `u v`. Blank lines and lines
// starting with '#' are skipped.
DynGraph parse_edge_list(const std::string& text);

struct GraphUpdate {
    enum class Kind { remove, insert, audit };
    Kind kind;
    Vertex u = 0;
    Vertex v = 0;
};

// Lines `DEL u v`, `INS u v`, `AUDIT`.
std::vector<GraphUpdate> parse_update_script(const std::string& text);

// A script cut into rounds t = 2, 3, ...: one edge update each, plus whether
// an audit follows it. Audits before the first update run after t = 1.
struct ScriptRound {
    std::optional<GraphUpdate> update;
    bool audit_after = false;
};
struct UpdateSchedule {
    bool audit_at_start = false;
    std::vector<ScriptRound> rounds;
};
UpdateSchedule script_rounds(std::span<const GraphUpdate> script);

// Uniform simple d-regular graph by pairing with local restarts.
DynGraph random_regular_graph(std::size_t n, std::size_t d, RandomSource& rng);
// Each vertex gets `out` distinct uniform out-neighbors.
DynGraph random_out_graph(std::size_t n, std::size_t out, RandomSource& rng);

// Walks --------------------------------------------------------------------------

struct Walk {
    std::vector<Vertex> path;
    // Steps path[i] -> path[i+1] that use no edge: a stay at an isolated
    // vertex or a uniform jump from a dangling one.
    std::vector<std::uint32_t> off_edge;

    std::size_t steps() const { return path.empty() ? 0 : path.size() - 1; }
    bool uses_edge_at(std::size_t i) const;
    bool operator==(const Walk&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Walk& w);

// What a walk does at a vertex without out-neighbors.
enum class OnIsolated { error, stay };

// `length` uniform neighbor steps from v. With OnIsolated::error a vertex of
// degree 0 aborts with SettingError.
Walk sample_walk(const DynGraph& g, Vertex v, std::size_t length, RandomSource& rng,
                 OnIsolated policy = OnIsolated::error);
// Geom(lambda) steps, P(len = m) = lambda (1 - lambda)^m; dangling vertices jump
// to a uniform vertex.
Walk sample_geometric_walk(const DynGraph& g, Vertex v, double lambda, RandomSource& rng);
// Probability that sample_walk returns exactly this walk.
double walk_probability(const DynGraph& g, const Walk& w);

// Calls f(key) for each edge traversal, with multiplicity.
template <class F>
void for_each_traversal(const DynGraph& g, const Walk& w, F&& f) {
    for (std::size_t i = 0; i + 1 < w.path.size(); ++i) {
        if (w.uses_edge_at(i)) f(g.key(w.path[i], w.path[i + 1]));
    }
}

using EdgeCounts = std::unordered_map<EdgeKey, std::uint32_t>;

EdgeCounts count_traversals(const DynGraph& g, std::span<const Walk> walks);
std::uint32_t congestion(const DynGraph& g, std::span<const Walk> walks, Vertex u, Vertex v);

struct CongestionSummary {
    std::uint32_t max = 0;
    // Average over alive edges, unused edges included.
    double mean = 0.0;
};
CongestionSummary summarize(const DynGraph& g, const EdgeCounts& counts);

struct WalkLength {
    // Fixed number of steps, or geometric with parameter lambda when set.
    std::size_t steps = 0;
    std::optional<double> lambda;
};

// k walks per source vertex, labelled slot * k + index where slot is the
// source's position in the source list (every vertex by default). Tracks
// per-edge congestion and per-vertex visit counts through a world listener,
// and which walks cross each edge so deletions can invalidate them.
class WalkStore {
   public:
    WalkStore(const DynGraph& g, std::size_t k, WalkLength length, OnIsolated policy = OnIsolated::error);
    // Walks only from `sources`, which must be distinct.
    WalkStore(const DynGraph& g, std::size_t k, WalkLength length, OnIsolated policy, std::vector<Vertex> sources);

    std::size_t walks_per_node() const { return k_; }
    std::size_t walk_count() const { return current_.size(); }
    const std::vector<Vertex>& sources() const { return sources_; }
    ObjectId label(Vertex source, std::size_t index) const;
    Vertex source(ObjectId label) const { return sources_[label / k_]; }
    // Round the current walk was drawn in.
    TimeStep origin(ObjectId label) const { return origin_.at(label); }
    const WalkLength& length() const { return length_; }

    // Distributions read the live graph, so they follow its updates.
    std::vector<Distribution<Walk>> distributions() const;
    Distribution<Walk> distribution(ObjectId label) const;
    World<Walk>::Listener listener();

    const Walk& walk(ObjectId label) const { return current_.at(label); }
    std::uint32_t congestion(Vertex u, Vertex v) const;
    const EdgeCounts& congestion_map() const { return congestion_; }
    CongestionSummary congestion_summary() const { return summarize(graph_, congestion_); }
    // H_v: visits to v over all walks, start vertex included.
    std::uint64_t visits(Vertex v) const { return visits_.at(v); }
    std::uint64_t total_visits() const;

    // Labels of walks currently traversing (u, v), sorted.
    std::vector<ObjectId> walks_through(Vertex u, Vertex v);

    // Recounts from scratch; false if the incremental state disagrees or some
    // walk crosses a dead edge.
    bool audit() const;

   private:
    void add(ObjectId label, const Walk& w, int sign);
    static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

    const DynGraph& graph_;
    std::size_t k_;
    WalkLength length_;
    OnIsolated policy_;
    std::vector<Vertex> sources_;
    std::vector<std::uint32_t> slot_;
    std::vector<Walk> current_;
    std::vector<TimeStep> origin_;
    EdgeCounts congestion_;
    std::vector<std::uint64_t> visits_;
    std::unordered_map<EdgeKey, std::vector<ObjectId>> crossing_;
};

// Adversary updating the graph one round at a time. Deleting an edge forces
// every walk crossing it; insertions force nothing.
class GraphUpdateAdversary : public Adversary<Walk> {
   public:
    GraphUpdateAdversary(DynGraph& g, WalkStore& store) : graph_(g), store_(store) {}

    std::vector<DistributionSpec<Walk>> next_distributions(const History<Walk>& h) final;
    std::vector<ObjectId> pick_samples(const History<Walk>& h) final;

    std::uint64_t deletions() const { return deletions_; }
    std::uint64_t insertions() const { return insertions_; }
    // Rounds after which some vertex had fewer than k neighbors.
    std::uint64_t degree_violations() const { return degree_violations_; }

   protected:
    virtual std::optional<GraphUpdate> choose(const History<Walk>& h) = 0;
    DynGraph& graph() { return graph_; }
    WalkStore& store() { return store_; }

   private:
    DynGraph& graph_;
    WalkStore& store_;
    std::vector<ObjectId> forced_;
    std::uint64_t deletions_ = 0;
    std::uint64_t insertions_ = 0;
    std::uint64_t degree_violations_ = 0;
};

class ScriptedGraphAdversary final : public GraphUpdateAdversary {
   public:
    ScriptedGraphAdversary(DynGraph& g, WalkStore& store, std::vector<ScriptRound> rounds)
        : GraphUpdateAdversary(g, store), rounds_(std::move(rounds)) {}

   protected:
    std::optional<GraphUpdate> choose(const History<Walk>& h) override;

   private:
    std::vector<ScriptRound> rounds_;
};

// PageRank ----------------------------------------------------------------------

// H_v / (n k / lambda).
double pagerank_estimate(const WalkStore& store, Vertex v);
// Power iteration with jump probability lambda; dangling mass spreads
// uniformly. NumericError after 1e5 iterations without reaching tol.
std::vector<double> pagerank_oracle(const DynGraph& g, double lambda, double tol = 1e-12);

// Palettes and list coloring ----------------------------------------------------

using Color = std::uint32_t;

enum class PaletteMode { general, triangle_free };

struct PaletteParams {
    std::size_t n = 0;
    std::size_t delta = 0;
    double epsilon = 0.5;
    PaletteMode mode = PaletteMode::general;
    double width_constant = 4.0;
    double size_constant = 8.0;
    double gamma = 0.5;
};

class PaletteState {
   public:
    explicit PaletteState(PaletteParams params);

    const PaletteParams& params() const { return params_; }
    std::size_t range_width() const { return width_; }
    std::size_t palette_size() const { return size_; }
    const std::vector<Color>& palette(Vertex v) const { return palettes_.at(v); }
    const std::vector<std::vector<Color>>& palettes() const { return palettes_; }
    // Range of v's palette; max() before the first resample.
    std::uint64_t range_of(Vertex v) const { return range_.at(v); }
    std::uint64_t ranges_allocated() const { return next_range_; }
    std::size_t ranges_in_use() const;
    std::size_t colors_in_use() const { return ranges_in_use() * width_; }
    // Vertices grouped by range, ascending range id.
    std::vector<std::vector<Vertex>> batches() const;
    // Every palette lies inside its range and ranges are disjoint.
    bool ranges_consistent() const;

    // Fresh range for the whole batch; each vertex gets palette_size()
    // distinct uniform colors from it (the whole range if narrower).
    void resample(std::span<const Vertex> batch, TimeStep t, RandomSource& rng);

   private:
    PaletteParams params_;
    std::size_t width_;
    std::size_t size_;
    std::vector<std::vector<Color>> palettes_;
    std::vector<std::uint64_t> range_;
    std::uint64_t next_range_ = 0;
};

void palette_resample(PaletteState& ps, std::span<const Vertex> batch, TimeStep t, RandomSource& rng);

enum class ColorVerdict { colorable, not_colorable, indeterminate };

struct ColoringResult {
    ColorVerdict verdict = ColorVerdict::indeterminate;
    // Color per vertex; unset() outside the subset or when not colorable.
    std::vector<Color> coloring;
    std::uint64_t nodes = 0;
    static constexpr Color unset() { return std::numeric_limits<Color>::max(); }
};

// Exact backtracking over the induced subgraph on `subset` (all vertices when
// empty): most constrained vertex first, forward checking.
ColoringResult list_colorable(const DynGraph& g, const std::vector<std::vector<Color>>& palettes,
                              std::span<const Vertex> subset = {}, std::uint64_t node_budget = 10'000'000);
bool coloring_proper(const DynGraph& g, const std::vector<std::vector<Color>>& palettes,
                     const std::vector<Color>& coloring);

struct PaletteAudit {
    std::size_t ranges_in_use = 0;
    std::size_t colors_in_use = 0;
    std::size_t batches = 0;
    std::size_t colorable = 0;
    std::size_t not_colorable = 0;
    std::size_t indeterminate = 0;
};

// Palettes over a dynamic graph, maintained by parameterized GTA with
// alpha = n^epsilon. Inserting (u, v) adversarially resamples u and v.
class PaletteMaintenance {
   public:
    PaletteMaintenance(DynGraph g, PaletteParams params, TimeStep horizon, std::uint64_t seed);

    const DynGraph& graph() const { return graph_; }
    const PaletteState& state() const { return state_; }
    const GtaScheduler& scheduler() const { return gta_; }
    TimeStep time() const { return t_; }
    double alpha() const { return alpha_; }

    // One round. SettingError if an insertion would push a degree past delta.
    void step(std::optional<GraphUpdate> update);
    PaletteAudit audit(std::uint64_t node_budget = 10'000'000) const;

    std::uint64_t adversarial_samples() const { return adversarial_; }
    std::uint64_t algorithm_samples() const { return algorithm_; }
    std::uint64_t updates() const { return updates_; }

   private:
    DynGraph graph_;
    PaletteState state_;
    double alpha_;
    GtaScheduler gta_;
    RandomSource rng_;
    TimeStep t_ = 1;
    std::uint64_t adversarial_ = 0;
    std::uint64_t algorithm_ = 0;
    std::uint64_t updates_ = 0;
};

}  // namespace resample
