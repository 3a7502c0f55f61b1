#include "resample/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace resample {

// DynGraph ------------------------------------------------------------------------

DynGraph::DynGraph(std::size_t n, bool directed) : directed_(directed), out_(n) {}

void DynGraph::check_vertex(Vertex v) const {
    if (v >= out_.size()) throw ConfigError("unknown vertex " + std::to_string(v));
}

bool DynGraph::has_edge(Vertex u, Vertex v) const {
    if (u >= out_.size() || v >= out_.size()) return false;
    return std::binary_search(out_[u].begin(), out_[u].end(), v);
}

namespace {
void insert_sorted(std::vector<Vertex>& list, Vertex v) { list.insert(std::lower_bound(list.begin(), list.end(), v), v); }
void erase_sorted(std::vector<Vertex>& list, Vertex v) { list.erase(std::lower_bound(list.begin(), list.end(), v)); }
}  // namespace

void DynGraph::add_edge(Vertex u, Vertex v) {
    check_vertex(u);
    check_vertex(v);
    if (u == v) throw ConfigError("self-loop at vertex " + std::to_string(u));
    if (has_edge(u, v)) {
        throw SettingError("edge " + std::to_string(u) + " " + std::to_string(v) + " already present");
    }
    insert_sorted(out_[u], v);
    if (!directed_) insert_sorted(out_[v], u);
    ++edges_;
    ++revision_;
}

void DynGraph::remove_edge(Vertex u, Vertex v) {
    if (!has_edge(u, v)) {
        throw SettingError("edge " + std::to_string(u) + " " + std::to_string(v) + " is not alive");
    }
    erase_sorted(out_[u], v);
    if (!directed_) erase_sorted(out_[v], u);
    --edges_;
    ++revision_;
}

std::size_t DynGraph::min_degree() const {
    std::size_t best = out_.empty() ? 0 : out_[0].size();
    for (const auto& list : out_) best = std::min(best, list.size());
    return best;
}

std::size_t DynGraph::max_degree() const {
    std::size_t best = 0;
    for (const auto& list : out_) best = std::max(best, list.size());
    return best;
}

std::vector<std::pair<Vertex, Vertex>> DynGraph::edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    for (Vertex u = 0; u < out_.size(); ++u) {
        for (Vertex v : out_[u]) {
            if (directed_ || u < v) out.emplace_back(u, v);
        }
    }
    return out;
}

EdgeKey DynGraph::key(Vertex u, Vertex v) const {
    if (!directed_ && v < u) std::swap(u, v);
    return (static_cast<EdgeKey>(u) << 32) | v;
}

// Text formats ----------------------------------------------------------------------

namespace {

// Non-empty, non-comment lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        out.emplace_back(no, line);
    }
    return out;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

std::uint64_t parse_count(const std::string& tok, std::size_t line_no) {
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != tok.size() || tok.empty() || tok[0] == '-') {
        throw ConfigError("line " + std::to_string(line_no) + ": expected a non-negative integer, got '" + tok + "'");
    }
    return value;
}

}  // namespace

DynGraph parse_edge_list(const std::string& text) {
    const auto lines = content_lines(text);
    if (lines.empty()) throw ConfigError("edge list: missing header");
    const auto header = tokens(lines[0].second);
    if (header.size() != 3 || (header[2] != "directed" && header[2] != "undirected")) {
        throw ConfigError("line " + std::to_string(lines[0].first) + ": header must be 'n m directed|undirected'");
    }
    const auto n = parse_count(header[0], lines[0].first);
    const auto m = parse_count(header[1], lines[0].first);
    if (lines.size() - 1 != m) {
        throw ConfigError("edge list: header promises " + std::to_string(m) + " edges, found " +
                          std::to_string(lines.size() - 1));
    }
    DynGraph g(n, header[2] == "directed");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [no, line] = lines[i];
        const auto tok = tokens(line);
        if (tok.size() != 2) throw ConfigError("line " + std::to_string(no) + ": expected 'u v'");
        const auto u = parse_count(tok[0], no);
        const auto v = parse_count(tok[1], no);
        if (u >= n || v >= n) throw ConfigError("line " + std::to_string(no) + ": vertex out of range");
        try {
            g.add_edge(static_cast<Vertex>(u), static_cast<Vertex>(v));
        } catch (const std::runtime_error& e) {
            throw ConfigError("line " + std::to_string(no) + ": " + e.what());
        }
    }
    return g;
}

std::vector<GraphUpdate> parse_update_script(const std::string& text) {
    std::vector<GraphUpdate> out;
    for (const auto& [no, line] : content_lines(text)) {
        const auto tok = tokens(line);
        if (tok.size() == 1 && tok[0] == "AUDIT") {
            out.push_back({GraphUpdate::Kind::audit});
            continue;
        }
        if (tok.size() == 3 && (tok[0] == "DEL" || tok[0] == "INS")) {
            out.push_back({tok[0] == "DEL" ? GraphUpdate::Kind::remove : GraphUpdate::Kind::insert,
                           static_cast<Vertex>(parse_count(tok[1], no)), static_cast<Vertex>(parse_count(tok[2], no))});
            continue;
        }
        throw ConfigError("line " + std::to_string(no) + ": expected 'DEL u v', 'INS u v' or 'AUDIT'");
    }
    return out;
}

UpdateSchedule script_rounds(std::span<const GraphUpdate> script) {
    UpdateSchedule out;
    for (const auto& u : script) {
        if (u.kind == GraphUpdate::Kind::audit) {
            if (out.rounds.empty()) {
                out.audit_at_start = true;
            } else {
                out.rounds.back().audit_after = true;
            }
        } else {
            out.rounds.push_back({u, false});
        }
    }
    return out;
}

DynGraph random_regular_graph(std::size_t n, std::size_t d, RandomSource& rng) {
    if (d >= n || (n * d) % 2 != 0) throw ConfigError("random_regular_graph: need d < n and n*d even");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        DynGraph g(n, false);
        std::vector<Vertex> points;
        points.reserve(n * d);
        for (Vertex v = 0; v < n; ++v) points.insert(points.end(), d, v);
        int stuck = 0;
        while (!points.empty() && stuck < 200) {
            const std::size_t i = rng.below(points.size());
            const std::size_t j = rng.below(points.size());
            const Vertex a = points[i];
            const Vertex b = points[j];
            if (i == j || a == b || g.has_edge(a, b)) {
                ++stuck;
                continue;
            }
            stuck = 0;
            g.add_edge(a, b);
            // Remove the larger index first so the smaller stays valid.
            for (std::size_t idx : {std::max(i, j), std::min(i, j)}) {
                points[idx] = points.back();
                points.pop_back();
            }
        }
        if (points.empty()) return g;
    }
    throw SettingError("random_regular_graph: pairing kept failing");
}

DynGraph random_out_graph(std::size_t n, std::size_t out, RandomSource& rng) {
    if (out >= n) throw ConfigError("random_out_graph: need out < n");
    DynGraph g(n, true);
    for (Vertex v = 0; v < n; ++v) {
        for (std::size_t idx : rng.sample_without_replacement(n - 1, out)) {
            g.add_edge(v, static_cast<Vertex>(idx >= v ? idx + 1 : idx));
        }
    }
    return g;
}

// Walks ----------------------------------------------------------------------------

bool Walk::uses_edge_at(std::size_t i) const {
    return !std::binary_search(off_edge.begin(), off_edge.end(), static_cast<std::uint32_t>(i));
}

std::ostream& operator<<(std::ostream& os, const Walk& w) {
    for (std::size_t i = 0; i < w.path.size(); ++i) {
        if (i) os << (w.uses_edge_at(i - 1) ? '-' : '~');
        os << w.path[i];
    }
    return os;
}

Walk sample_walk(const DynGraph& g, Vertex v, std::size_t length, RandomSource& rng, OnIsolated policy) {
    if (v >= g.vertex_count()) throw ConfigError("sample_walk: unknown vertex " + std::to_string(v));
    Walk w;
    w.path.reserve(length + 1);
    w.path.push_back(v);
    for (std::size_t i = 0; i < length; ++i) {
        const auto nbrs = g.neighbors(w.path.back());
        if (nbrs.empty()) {
            if (policy == OnIsolated::error) {
                throw SettingError("walk truncated: vertex " + std::to_string(w.path.back()) + " has no neighbors");
            }
            w.off_edge.push_back(static_cast<std::uint32_t>(i));
            w.path.push_back(w.path.back());
            continue;
        }
        w.path.push_back(nbrs[rng.below(nbrs.size())]);
    }
    return w;
}

Walk sample_geometric_walk(const DynGraph& g, Vertex v, double lambda, RandomSource& rng) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("geometric walk: lambda must lie in (0,1)");
    if (v >= g.vertex_count()) throw ConfigError("sample_geometric_walk: unknown vertex " + std::to_string(v));
    const auto length = rng.geometric(lambda);
    Walk w;
    w.path.push_back(v);
    for (std::uint64_t i = 0; i < length; ++i) {
        const auto nbrs = g.neighbors(w.path.back());
        if (nbrs.empty()) {
            w.off_edge.push_back(static_cast<std::uint32_t>(i));
            w.path.push_back(static_cast<Vertex>(rng.below(g.vertex_count())));
        } else {
            w.path.push_back(nbrs[rng.below(nbrs.size())]);
        }
    }
    return w;
}

double walk_probability(const DynGraph& g, const Walk& w) {
    double p = 1.0;
    for (std::size_t i = 0; i + 1 < w.path.size(); ++i) {
        if (!w.uses_edge_at(i)) {
            if (g.degree(w.path[i]) != 0 || w.path[i + 1] != w.path[i]) return 0.0;
            continue;
        }
        if (!g.has_edge(w.path[i], w.path[i + 1])) return 0.0;
        p /= static_cast<double>(g.degree(w.path[i]));
    }
    return p;
}

EdgeCounts count_traversals(const DynGraph& g, std::span<const Walk> walks) {
    EdgeCounts counts;
    for (const auto& w : walks) for_each_traversal(g, w, [&](EdgeKey k) { ++counts[k]; });
    return counts;
}

std::uint32_t congestion(const DynGraph& g, std::span<const Walk> walks, Vertex u, Vertex v) {
    const EdgeKey target = g.key(u, v);
    std::uint32_t total = 0;
    for (const auto& w : walks) for_each_traversal(g, w, [&](EdgeKey k) { total += k == target; });
    return total;
}

CongestionSummary summarize(const DynGraph& g, const EdgeCounts& counts) {
    CongestionSummary s;
    std::uint64_t total = 0;
    for (const auto& [key, c] : counts) {
        s.max = std::max(s.max, c);
        total += c;
    }
    if (g.edge_count() > 0) s.mean = static_cast<double>(total) / static_cast<double>(g.edge_count());
    return s;
}

// WalkStore ------------------------------------------------------------------------

WalkStore::WalkStore(const DynGraph& g, std::size_t k, WalkLength length, OnIsolated policy)
    : WalkStore(g, k, length, policy, [&g] {
          std::vector<Vertex> all(g.vertex_count());
          for (Vertex v = 0; v < all.size(); ++v) all[v] = v;
          return all;
      }()) {}

WalkStore::WalkStore(const DynGraph& g, std::size_t k, WalkLength length, OnIsolated policy,
                     std::vector<Vertex> sources)
    : graph_(g),
      k_(k),
      length_(length),
      policy_(policy),
      sources_(std::move(sources)),
      slot_(g.vertex_count(), kNoSlot),
      current_(sources_.size() * k),
      origin_(sources_.size() * k, 0),
      visits_(g.vertex_count(), 0) {
    if (k == 0) throw ConfigError("WalkStore: need at least one walk per node");
    if (length.lambda && !(*length.lambda > 0.0 && *length.lambda < 1.0)) {
        throw ConfigError("WalkStore: lambda must lie in (0,1)");
    }
    for (std::uint32_t i = 0; i < sources_.size(); ++i) {
        const Vertex v = sources_[i];
        if (v >= g.vertex_count()) throw ConfigError("WalkStore: unknown source vertex " + std::to_string(v));
        if (slot_[v] != kNoSlot) throw ConfigError("WalkStore: repeated source vertex " + std::to_string(v));
        slot_[v] = i;
    }
}

ObjectId WalkStore::label(Vertex source, std::size_t index) const {
    if (source >= graph_.vertex_count() || index >= k_ || slot_[source] == kNoSlot) {
        throw ConfigError("WalkStore: walk label out of range");
    }
    return static_cast<ObjectId>(slot_[source] * k_ + index);
}

Distribution<Walk> WalkStore::distribution(ObjectId label) const {
    const DynGraph* g = &graph_;
    const Vertex src = source(label);
    Distribution<Walk> d;
    if (length_.lambda) {
        const double lambda = *length_.lambda;
        d.sample = [g, src, lambda](RandomSource& rng) { return sample_geometric_walk(*g, src, lambda, rng); };
        d.label = "geom-walk";
    } else {
        const std::size_t steps = length_.steps;
        const OnIsolated policy = policy_;
        d.sample = [g, src, steps, policy](RandomSource& rng) { return sample_walk(*g, src, steps, rng, policy); };
        d.label = "walk";
    }
    return d;
}

std::vector<Distribution<Walk>> WalkStore::distributions() const {
    std::vector<Distribution<Walk>> out;
    out.reserve(current_.size());
    for (ObjectId label = 0; label < current_.size(); ++label) out.push_back(distribution(label));
    return out;
}

void WalkStore::add(ObjectId label, const Walk& w, int sign) {
    for (Vertex v : w.path) visits_[v] += static_cast<std::uint64_t>(sign);
    for_each_traversal(graph_, w, [&](EdgeKey k) {
        if (sign > 0) {
            ++congestion_[k];
            auto& list = crossing_[k];
            if (list.empty() || list.back() != label) list.push_back(label);
        } else {
            auto it = congestion_.find(k);
            if (--it->second == 0) congestion_.erase(it);
        }
    });
}

World<Walk>::Listener WalkStore::listener() {
    return [this](ObjectId label, const Walk* old_value, const Walk& fresh, TimeStep t) {
        if (old_value) add(label, *old_value, -1);
        add(label, fresh, +1);
        current_[label] = fresh;
        origin_[label] = t;
    };
}

std::uint32_t WalkStore::congestion(Vertex u, Vertex v) const {
    auto it = congestion_.find(graph_.key(u, v));
    return it == congestion_.end() ? 0 : it->second;
}

std::uint64_t WalkStore::total_visits() const {
    std::uint64_t total = 0;
    for (auto c : visits_) total += c;
    return total;
}

std::vector<ObjectId> WalkStore::walks_through(Vertex u, Vertex v) {
    const EdgeKey target = graph_.key(u, v);
    auto it = crossing_.find(target);
    if (it == crossing_.end()) return {};
    std::vector<ObjectId> out;
    for (ObjectId label : it->second) {
        bool crosses = false;
        for_each_traversal(graph_, current_[label], [&](EdgeKey k) { crosses = crosses || k == target; });
        if (crosses) out.push_back(label);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    // Drop stale entries while we are here.
    it->second = out;
    return out;
}

bool WalkStore::audit() const {
    const auto recount = count_traversals(graph_, current_);
    if (recount != congestion_) return false;
    std::vector<std::uint64_t> visits(visits_.size(), 0);
    for (const auto& w : current_) {
        for (Vertex v : w.path) ++visits[v];
        for (std::size_t i = 0; i + 1 < w.path.size(); ++i) {
            if (w.uses_edge_at(i) && !graph_.has_edge(w.path[i], w.path[i + 1])) return false;
        }
    }
    return visits == visits_;
}

// Graph adversaries ------------------------------------------------------------------

std::vector<DistributionSpec<Walk>> GraphUpdateAdversary::next_distributions(const History<Walk>& h) {
    forced_.clear();
    const auto update = choose(h);
    if (!update) return {};
    const Vertex u = update->u;
    const Vertex v = update->v;
    switch (update->kind) {
        case GraphUpdate::Kind::remove:
            if (!graph_.has_edge(u, v)) {
                throw SettingError("cannot delete missing edge " + std::to_string(u) + " " + std::to_string(v));
            }
            forced_ = store_.walks_through(u, v);
            graph_.remove_edge(u, v);
            ++deletions_;
            if (graph_.degree(u) < store_.walks_per_node() ||
                (!graph_.directed() && graph_.degree(v) < store_.walks_per_node())) {
                ++degree_violations_;
            }
            break;
        case GraphUpdate::Kind::insert:
            graph_.add_edge(u, v);
            ++insertions_;
            break;
        case GraphUpdate::Kind::audit:
            throw ConfigError("audit markers are not graph updates");
    }
    // Distributions read the live graph; nothing to install.
    return {};
}

std::vector<ObjectId> GraphUpdateAdversary::pick_samples(const History<Walk>&) { return forced_; }

std::optional<GraphUpdate> ScriptedGraphAdversary::choose(const History<Walk>& h) {
    const TimeStep t = h.next_time();
    if (t < 2 || t - 2 >= rounds_.size()) return std::nullopt;
    return rounds_[t - 2].update;
}

// PageRank ---------------------------------------------------------------------------

double pagerank_estimate(const WalkStore& store, Vertex v) {
    if (!store.length().lambda) throw ConfigError("pagerank_estimate: store walks are not geometric");
    const double n = static_cast<double>(store.walk_count() / store.walks_per_node());
    const double k = static_cast<double>(store.walks_per_node());
    return static_cast<double>(store.visits(v)) / (n * k / *store.length().lambda);
}

std::vector<double> pagerank_oracle(const DynGraph& g, double lambda, double tol) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("pagerank_oracle: lambda must lie in (0,1)");
    const std::size_t n = g.vertex_count();
    if (n == 0) return {};
    const double uniform = 1.0 / static_cast<double>(n);
    std::vector<double> p(n, uniform);
    std::vector<double> next(n);
    for (int iter = 0; iter < 100000; ++iter) {
        double dangling = 0.0;
        for (Vertex u = 0; u < n; ++u) {
            if (g.degree(u) == 0) dangling += p[u];
        }
        const double base = lambda * uniform + (1.0 - lambda) * dangling * uniform;
        std::fill(next.begin(), next.end(), base);
        for (Vertex u = 0; u < n; ++u) {
            const auto nbrs = g.neighbors(u);
            if (nbrs.empty()) continue;
            const double share = (1.0 - lambda) * p[u] / static_cast<double>(nbrs.size());
            for (Vertex v : nbrs) next[v] += share;
        }
        double residual = 0.0;
        for (Vertex v = 0; v < n; ++v) residual += std::abs(next[v] - p[v]);
        p.swap(next);
        if (residual <= tol) return p;
    }
    throw NumericError("pagerank_oracle: no convergence after 1e5 iterations");
}

// Palettes ----------------------------------------------------------------------------

namespace {

std::size_t range_width_for(const PaletteParams& p) {
    if (p.mode == PaletteMode::general) return p.delta + 1;
    const double d = static_cast<double>(std::max<std::size_t>(p.delta, 2));
    return static_cast<std::size_t>(std::ceil(p.width_constant * d / (p.gamma * std::log(d))));
}

std::size_t palette_size_for(const PaletteParams& p) {
    const double log_n = std::log(static_cast<double>(std::max<std::size_t>(p.n, 2)));
    if (p.mode == PaletteMode::general) return static_cast<std::size_t>(std::ceil(p.size_constant * log_n));
    const double d = static_cast<double>(p.delta);
    return static_cast<std::size_t>(std::ceil(p.size_constant * (std::pow(d, p.gamma) + std::sqrt(log_n))));
}

}  // namespace

PaletteState::PaletteState(PaletteParams params)
    : params_(params),
      width_(range_width_for(params)),
      size_(palette_size_for(params)),
      palettes_(params.n),
      range_(params.n, std::numeric_limits<std::uint64_t>::max()) {
    if (params.n == 0) throw ConfigError("palettes: n must be positive");
    if (!(params.epsilon > 0.0)) throw ConfigError("palettes: epsilon must be positive");
    if (params.mode == PaletteMode::triangle_free && !(params.gamma > 0.0 && params.gamma < 1.0)) {
        throw ConfigError("palettes: gamma must lie in (0,1)");
    }
}

std::size_t PaletteState::ranges_in_use() const {
    std::set<std::uint64_t> used;
    for (auto r : range_) {
        if (r != std::numeric_limits<std::uint64_t>::max()) used.insert(r);
    }
    return used.size();
}

std::vector<std::vector<Vertex>> PaletteState::batches() const {
    std::map<std::uint64_t, std::vector<Vertex>> by_range;
    for (Vertex v = 0; v < range_.size(); ++v) {
        if (range_[v] != std::numeric_limits<std::uint64_t>::max()) by_range[range_[v]].push_back(v);
    }
    std::vector<std::vector<Vertex>> out;
    for (auto& [r, vs] : by_range) out.push_back(std::move(vs));
    return out;
}

bool PaletteState::ranges_consistent() const {
    for (Vertex v = 0; v < palettes_.size(); ++v) {
        if (range_[v] == std::numeric_limits<std::uint64_t>::max()) {
            if (!palettes_[v].empty()) return false;
            continue;
        }
        const std::uint64_t lo = range_[v] * width_;
        for (Color c : palettes_[v]) {
            if (c < lo || c >= lo + width_) return false;
        }
    }
    return true;
}

void PaletteState::resample(std::span<const Vertex> batch, TimeStep, RandomSource& rng) {
    if (batch.empty()) return;
    const std::uint64_t r = next_range_++;
    const std::uint64_t lo = r * width_;
    if (lo + width_ > std::numeric_limits<Color>::max()) throw NumericError("palettes: color ids exhausted");
    const std::size_t take = std::min(size_, width_);
    for (Vertex v : batch) {
        auto& pal = palettes_.at(v);
        pal.clear();
        for (std::size_t idx : rng.sample_without_replacement(width_, take)) pal.push_back(static_cast<Color>(lo + idx));
        std::sort(pal.begin(), pal.end());
        range_[v] = r;
    }
}

void palette_resample(PaletteState& ps, std::span<const Vertex> batch, TimeStep t, RandomSource& rng) {
    ps.resample(batch, t, rng);
}

// List coloring ------------------------------------------------------------------------

namespace {

class ListColorer {
   public:
    ListColorer(const DynGraph& g, const std::vector<std::vector<Color>>& palettes, std::span<const Vertex> subset,
                std::uint64_t budget)
        : g_(g), budget_(budget) {
        const std::size_t n = g.vertex_count();
        if (palettes.size() != n) throw ConfigError("list_colorable: one palette per vertex");
        in_subset_.assign(n, subset.empty());
        for (Vertex v : subset) in_subset_.at(v) = true;
        for (Vertex v = 0; v < n; ++v) {
            if (in_subset_[v]) vertices_.push_back(v);
        }
        palette_.resize(n);
        blocked_.resize(n);
        available_.assign(n, 0);
        degree_.assign(n, 0);
        for (Vertex v : vertices_) {
            palette_[v] = palettes[v];
            std::sort(palette_[v].begin(), palette_[v].end());
            palette_[v].erase(std::unique(palette_[v].begin(), palette_[v].end()), palette_[v].end());
            blocked_[v].assign(palette_[v].size(), 0);
            available_[v] = palette_[v].size();
            for (Vertex w : g.neighbors(v)) degree_[v] += in_subset_[w];
        }
        color_.assign(n, ColoringResult::unset());
    }

    ColoringResult run() {
        ColoringResult res;
        const bool ok = search(vertices_.size());
        res.nodes = nodes_;
        if (out_of_budget_) {
            res.verdict = ColorVerdict::indeterminate;
        } else if (ok) {
            res.verdict = ColorVerdict::colorable;
            res.coloring = color_;
        } else {
            res.verdict = ColorVerdict::not_colorable;
        }
        return res;
    }

   private:
    // Neighbors in the subset; in directed mode both directions constrain.
    template <class F>
    void for_each_neighbor(Vertex v, F&& f) const {
        for (Vertex w : g_.neighbors(v)) {
            if (in_subset_[w]) f(w);
        }
        if (g_.directed()) {
            for (Vertex w : vertices_) {
                if (w != v && g_.has_edge(w, v) && !g_.has_edge(v, w)) f(w);
            }
        }
    }

    bool search(std::size_t remaining) {
        if (remaining == 0) return true;
        // Fewest options first, then most neighbors.
        Vertex pick = 0;
        bool found = false;
        for (Vertex v : vertices_) {
            if (color_[v] != ColoringResult::unset()) continue;
            if (!found || available_[v] < available_[pick] ||
                (available_[v] == available_[pick] && degree_[v] > degree_[pick])) {
                pick = v;
                found = true;
            }
        }
        for (std::size_t i = 0; i < palette_[pick].size(); ++i) {
            if (blocked_[pick][i] != 0) continue;
            if (++nodes_ > budget_) {
                out_of_budget_ = true;
                return false;
            }
            const Color c = palette_[pick][i];
            color_[pick] = c;
            bool wiped = false;
            std::vector<std::pair<Vertex, std::size_t>> trail;
            for_each_neighbor(pick, [&](Vertex w) {
                if (color_[w] != ColoringResult::unset()) return;
                auto it = std::lower_bound(palette_[w].begin(), palette_[w].end(), c);
                if (it == palette_[w].end() || *it != c) return;
                const auto idx = static_cast<std::size_t>(it - palette_[w].begin());
                if (blocked_[w][idx]++ == 0 && --available_[w] == 0) wiped = true;
                trail.emplace_back(w, idx);
            });
            if (!wiped && search(remaining - 1)) return true;
            for (const auto& [w, idx] : trail) {
                if (--blocked_[w][idx] == 0) ++available_[w];
            }
            color_[pick] = ColoringResult::unset();
            if (out_of_budget_) return false;
        }
        return false;
    }

    const DynGraph& g_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    bool out_of_budget_ = false;
    std::vector<bool> in_subset_;
    std::vector<Vertex> vertices_;
    std::vector<std::vector<Color>> palette_;
    std::vector<std::vector<std::uint32_t>> blocked_;
    std::vector<std::size_t> available_;
    std::vector<std::size_t> degree_;
    std::vector<Color> color_;
};

}  // namespace

ColoringResult list_colorable(const DynGraph& g, const std::vector<std::vector<Color>>& palettes,
                              std::span<const Vertex> subset, std::uint64_t node_budget) {
    return ListColorer(g, palettes, subset, node_budget).run();
}

bool coloring_proper(const DynGraph& g, const std::vector<std::vector<Color>>& palettes,
                     const std::vector<Color>& coloring) {
    if (coloring.size() != g.vertex_count()) return false;
    for (Vertex v = 0; v < coloring.size(); ++v) {
        if (coloring[v] == ColoringResult::unset()) continue;
        if (std::find(palettes[v].begin(), palettes[v].end(), coloring[v]) == palettes[v].end()) return false;
        for (Vertex w : g.neighbors(v)) {
            if (coloring[w] == coloring[v]) return false;
        }
    }
    return true;
}

// Palette maintenance -----------------------------------------------------------------

PaletteMaintenance::PaletteMaintenance(DynGraph g, PaletteParams params, TimeStep horizon, std::uint64_t seed)
    : graph_(std::move(g)),
      state_(params),
      alpha_(std::pow(static_cast<double>(params.n), params.epsilon)),
      gta_(std::max(alpha_, 1.0 + 1e-9)),
      rng_(seed, streams::algorithm) {
    if (graph_.vertex_count() != params.n) throw ConfigError("palettes: graph size differs from n");
    if (graph_.max_degree() > params.delta) throw SettingError("palettes: initial graph exceeds the degree bound");
    gta_.start(params.n, horizon);
    std::vector<Vertex> all(params.n);
    for (Vertex v = 0; v < params.n; ++v) all[v] = v;
    state_.resample(all, 1, rng_);
}

void PaletteMaintenance::step(std::optional<GraphUpdate> update) {
    ++t_;
    std::vector<ObjectId> adversarial;
    if (update) {
        const Vertex u = update->u;
        const Vertex v = update->v;
        switch (update->kind) {
            case GraphUpdate::Kind::insert:
                if (graph_.degree(u) + 1 > state_.params().delta || graph_.degree(v) + 1 > state_.params().delta) {
                    throw SettingError("palettes: inserting " + std::to_string(u) + " " + std::to_string(v) +
                                       " exceeds the degree bound");
                }
                graph_.add_edge(u, v);
                adversarial = {std::min(u, v), std::max(u, v)};
                break;
            case GraphUpdate::Kind::remove:
                graph_.remove_edge(u, v);
                break;
            case GraphUpdate::Kind::audit:
                throw ConfigError("audit markers are not graph updates");
        }
        ++updates_;
    }
    auto chosen = gta_.on_round(t_, adversarial);
    std::vector<Vertex> batch(adversarial.begin(), adversarial.end());
    for (ObjectId u : chosen) {
        if (!std::binary_search(adversarial.begin(), adversarial.end(), u)) {
            batch.push_back(u);
            ++algorithm_;
        }
    }
    adversarial_ += adversarial.size();
    std::sort(batch.begin(), batch.end());
    state_.resample(batch, t_, rng_);
}

PaletteAudit PaletteMaintenance::audit(std::uint64_t node_budget) const {
    PaletteAudit a;
    a.ranges_in_use = state_.ranges_in_use();
    a.colors_in_use = state_.colors_in_use();
    for (const auto& batch : state_.batches()) {
        ++a.batches;
        switch (list_colorable(graph_, state_.palettes(), batch, node_budget).verdict) {
            case ColorVerdict::colorable: ++a.colorable; break;
            case ColorVerdict::not_colorable: ++a.not_colorable; break;
            case ColorVerdict::indeterminate: ++a.indeterminate; break;
        }
    }
    return a;
}

}  // namespace resample
