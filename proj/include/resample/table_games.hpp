#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "resample/core.hpp"
#include "resample/schedulers.hpp"

namespace resample {

// One row per object, one column per round 1..T. The adversary fixes every
// distribution of a column, optionally marks cells of it, and only then sees
// the column's realizations. At the end it picks one cell per row.

template <class V>
struct Cell {
    Distribution<V> dist;
    V value{};
    bool marked = false;
};

template <class V>
class Table {
   public:
    Table(std::size_t rows, TimeStep columns) : rows_(rows), columns_(columns) {
        if (rows == 0) throw ConfigError("Table: no rows");
        if (columns == 0) throw ConfigError("Table: no columns");
        cells_.resize(rows);
    }

    std::size_t rows() const { return rows_; }
    TimeStep columns() const { return columns_; }
    // Columns whose realizations are visible.
    TimeStep revealed() const { return revealed_; }

    const Cell<V>& cell(ObjectId row, TimeStep column) const {
        if (row >= rows_ || column == 0 || column > revealed_) {
            throw ConfigError("Table: cell (" + std::to_string(row) + "," + std::to_string(column) +
                              ") not revealed");
        }
        return cells_[row][column - 1];
    }
    std::size_t marks_in_row(ObjectId row) const { return marks_.at(row); }

    // Driven by play_table_game.
    void open_column(std::vector<Distribution<V>> dists) {
        if (dists.size() != rows_) throw ConfigError("Table: column needs one distribution per row");
        if (revealed_ == columns_) throw ConfigError("Table: all columns already built");
        marks_.resize(rows_, 0);
        for (std::size_t u = 0; u < rows_; ++u) cells_[u].push_back(Cell<V>{std::move(dists[u]), V{}, false});
    }
    void mark(ObjectId row) {
        auto& c = cells_.at(row).back();
        if (!c.marked) {
            c.marked = true;
            ++marks_[row];
        }
    }
    void reveal(RandomSource& rng) {
        for (auto& row : cells_) row.back().value = row.back().dist.sample(rng);
        ++revealed_;
    }

   private:
    std::size_t rows_;
    TimeStep columns_;
    TimeStep revealed_ = 0;
    std::vector<std::vector<Cell<V>>> cells_;
    std::vector<std::size_t> marks_;
};

struct SelectionConstraint {
    enum class Kind { column_budget, fixed_columns, marked_budget };
    Kind kind = Kind::column_budget;
    std::size_t cap = 1;            // distinct columns, or marks per row
    std::vector<TimeStep> columns;  // sorted, fixed_columns only

    static SelectionConstraint column_budget(std::size_t cap) {
        if (cap == 0) throw ConfigError("column_budget: cap must be positive");
        return {Kind::column_budget, cap, {}};
    }
    static SelectionConstraint fixed(std::vector<TimeStep> cols) {
        if (cols.empty()) throw ConfigError("fixed_columns: empty column set");
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        return {Kind::fixed_columns, cols.size(), std::move(cols)};
    }
    static SelectionConstraint marked_budget(std::size_t cap) {
        if (cap == 0) throw ConfigError("marked_budget: cap must be positive");
        return {Kind::marked_budget, cap, {}};
    }
};

std::string_view to_string(SelectionConstraint::Kind kind);

// Defaults matching each scheduler: stable GTA partitions have at most
// floor(log_alpha n) + 1 groups, landmark origins lie in landmarks(T), and a
// proactive row has at most floor(log2 T) + 1 samples with nothing pending.
inline SelectionConstraint gta_constraint(double alpha, std::size_t n) {
    return SelectionConstraint::column_budget(gta_group_bound(alpha, n));
}
inline SelectionConstraint landmark_constraint(TimeStep T) { return SelectionConstraint::fixed(landmarks(T)); }
inline std::size_t proactive_mark_cap(TimeStep T) { return static_cast<std::size_t>(std::bit_width(T)); }
inline SelectionConstraint proactive_constraint(TimeStep T) {
    return SelectionConstraint::marked_budget(proactive_mark_cap(T));
}

template <class V>
class TableAdversary {
   public:
    virtual ~TableAdversary() = default;
    // Distributions of column t, one per row. Columns < t are revealed.
    virtual std::vector<Distribution<V>> column(TimeStep t, const Table<V>& table) = 0;
    // Rows to mark in column t, before it is revealed.
    virtual std::vector<ObjectId> marks(TimeStep, const Table<V>&) { return {}; }
    // Column t was just revealed.
    virtual void observe(TimeStep, const Table<V>&) {}
    // Chosen column per row.
    virtual std::vector<TimeStep> select(const Table<V>& table) = 0;
};

// Exact legality check. Throws ConstraintViolation naming rows and columns.
template <class V>
void validate_selection(const Table<V>& table, const SelectionConstraint& c, const std::vector<TimeStep>& pick) {
    if (pick.size() != table.rows()) {
        throw ConstraintViolation("selection has " + std::to_string(pick.size()) + " entries for " +
                                  std::to_string(table.rows()) + " rows");
    }
    for (ObjectId u = 0; u < pick.size(); ++u) {
        if (pick[u] == 0 || pick[u] > table.columns()) {
            throw ConstraintViolation("row " + std::to_string(u) + " selects missing column " +
                                      std::to_string(pick[u]));
        }
    }
    switch (c.kind) {
        case SelectionConstraint::Kind::column_budget: {
            std::set<TimeStep> used(pick.begin(), pick.end());
            if (used.size() > c.cap) {
                std::string cols;
                for (TimeStep t : used) cols += (cols.empty() ? "" : ",") + std::to_string(t);
                throw ConstraintViolation("selection uses " + std::to_string(used.size()) + " columns {" + cols +
                                          "}, budget " + std::to_string(c.cap));
            }
            break;
        }
        case SelectionConstraint::Kind::fixed_columns:
            for (ObjectId u = 0; u < pick.size(); ++u) {
                if (!std::binary_search(c.columns.begin(), c.columns.end(), pick[u])) {
                    throw ConstraintViolation("row " + std::to_string(u) + " selects column " +
                                              std::to_string(pick[u]) + " outside the fixed set");
                }
            }
            break;
        case SelectionConstraint::Kind::marked_budget:
            for (ObjectId u = 0; u < pick.size(); ++u) {
                if (!table.cell(u, pick[u]).marked) {
                    throw ConstraintViolation("row " + std::to_string(u) + " selects unmarked column " +
                                              std::to_string(pick[u]));
                }
            }
            break;
    }
}

template <class V>
struct TableGameResult {
    JointState<V> state;
    std::vector<TimeStep> selection;
};

template <class V>
TableGameResult<V> play_table_game(TableAdversary<V>& adversary, std::size_t n, TimeStep T,
                                   const SelectionConstraint& constraint, RandomSource& rng) {
    Table<V> table(n, T);
    for (TimeStep t = 1; t <= T; ++t) {
        table.open_column(adversary.column(t, table));
        for (ObjectId u : adversary.marks(t, table)) {
            if (constraint.kind != SelectionConstraint::Kind::marked_budget) {
                throw ConstraintViolation("marks are only allowed in the marked game");
            }
            if (u >= n) throw ConstraintViolation("mark on unknown row " + std::to_string(u));
            table.mark(u);
            if (table.marks_in_row(u) > constraint.cap) {
                throw ConstraintViolation("row " + std::to_string(u) + " exceeds its mark cap " +
                                          std::to_string(constraint.cap) + " at column " + std::to_string(t));
            }
        }
        table.reveal(rng);
        adversary.observe(t, table);
    }
    TableGameResult<V> out;
    out.selection = adversary.select(table);
    validate_selection(table, constraint, out.selection);
    out.state.reserve(n);
    for (ObjectId u = 0; u < n; ++u) out.state.push_back({table.cell(u, out.selection[u]).value, out.selection[u]});
    return out;
}

// Replays a live adversary and scheduler on the table: the distributions in
// force at round t fill column t, the objects the live run would sample at t
// take their column-t cells, and the final selection is each object's last
// sample round. For proactive schedulers, a sampled cell is marked when the
// object has nothing pending before T, which is decided before the reveal.
template <class V>
class TranslatedAdversary final : public TableAdversary<V> {
   public:
    TranslatedAdversary(std::vector<Distribution<V>> initial, Adversary<V>& live, Scheduler& scheduler,
                        TimeStep horizon, bool mark)
        : dists_(std::move(initial)),
          live_(live),
          scheduler_(scheduler),
          horizon_(horizon),
          mark_(mark),
          origin_(dists_.size(), 1) {
        if (mark_ && !dynamic_cast<ProactiveScheduler*>(&scheduler_)) {
            throw ConfigError("marked translation needs a proactive scheduler");
        }
    }

    std::vector<Distribution<V>> column(TimeStep t, const Table<V>&) override {
        row_ = HistoryRow<V>{};
        row_.time = t;
        if (t == 1) {
            for (ObjectId u = 0; u < dists_.size(); ++u) {
                row_.installed.emplace_back(u, dists_[u].label);
                row_.adversarial.push_back(u);
            }
            sampled_ = row_.adversarial;
            return dists_;
        }
        for (auto& spec : live_.next_distributions(history_)) {
            if (spec.object >= dists_.size()) throw ConfigError("translated adversary: unknown object");
            row_.installed.emplace_back(spec.object, spec.dist.label);
            dists_[spec.object] = std::move(spec.dist);
        }
        auto picks = live_.pick_samples(history_);
        std::sort(picks.begin(), picks.end());
        picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
        row_.adversarial = picks;
        auto chosen = scheduler_.on_round(t, picks);
        std::sort(chosen.begin(), chosen.end());
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
        for (ObjectId u : chosen) {
            if (!std::binary_search(picks.begin(), picks.end(), u)) row_.algorithm.push_back(u);
        }
        sampled_.clear();
        std::set_union(picks.begin(), picks.end(), chosen.begin(), chosen.end(), std::back_inserter(sampled_));
        return dists_;
    }

    std::vector<ObjectId> marks(TimeStep t, const Table<V>&) override {
        if (t == 1) scheduler_.start(dists_.size(), horizon_);
        if (!mark_) return {};
        const auto& pro = static_cast<const ProactiveScheduler&>(scheduler_);
        std::vector<ObjectId> out;
        for (ObjectId u : sampled_) {
            if (pro.pending(u).empty()) out.push_back(u);
        }
        return out;
    }

    void observe(TimeStep t, const Table<V>& table) override {
        // Realization order of the live world: adversarial picks, then the
        // scheduler's extra samples.
        for (ObjectId u : row_.adversarial) row_.realized.emplace_back(u, table.cell(u, t).value);
        for (ObjectId u : row_.algorithm) row_.realized.emplace_back(u, table.cell(u, t).value);
        for (ObjectId u : sampled_) origin_[u] = t;
        history_.append(std::move(row_));
    }

    std::vector<TimeStep> select(const Table<V>&) override { return origin_; }

   private:
    std::vector<Distribution<V>> dists_;
    Adversary<V>& live_;
    Scheduler& scheduler_;
    TimeStep horizon_;
    bool mark_;
    History<V> history_{HistoryMode::full};
    HistoryRow<V> row_;
    std::vector<ObjectId> sampled_;
    std::vector<TimeStep> origin_;
};

template <class V>
struct EquivalenceReport {
    double tv = 0.0;
    // Roughly 3 sigma of the two-sample TV estimator under equal laws.
    double noise_bound = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t legal_selections = 0;
    std::map<std::vector<V>, std::uint64_t> live;
    std::map<std::vector<V>, std::uint64_t> game;
    // Every live final origin fell inside the constraint's fixed columns
    // (vacuously true for the other kinds).
    bool live_origins_fixed = true;
};

inline double tv_noise_bound(const std::vector<double>& pooled, std::uint64_t trials) {
    // E|p1 - p2| <= sqrt(2 p (1-p) / N) per cell; TV halves the sum.
    double s = 0.0;
    for (double p : pooled) s += std::sqrt(2.0 * p * (1.0 - p) / static_cast<double>(trials));
    return 3.0 * 0.5 * s;
}

template <class V>
struct EquivalenceSetup {
    std::vector<Distribution<V>> initial;
    std::function<std::unique_ptr<Adversary<V>>()> make_adversary;
    std::function<std::unique_ptr<Scheduler>()> make_scheduler;
    SelectionConstraint constraint;
    std::vector<V> universe;
    TimeStep horizon = 1;
};

template <class V>
EquivalenceReport<V> simulate_equivalence(const EquivalenceSetup<V>& setup, std::uint64_t trials, std::uint64_t seed) {
    const std::size_t n = setup.initial.size();
    if (n == 0) throw ConfigError("simulate_equivalence: no objects");
    if (trials == 0) throw ConfigError("simulate_equivalence: trials must be positive");
    double cells = 1.0;
    for (std::size_t i = 0; i < n; ++i) cells *= static_cast<double>(setup.universe.size());
    if (setup.universe.empty() || cells > 64.0) {
        throw ConfigError("simulate_equivalence: |U|^n = " + std::to_string(cells) + " exceeds 64");
    }
    const std::set<V> universe(setup.universe.begin(), setup.universe.end());
    auto check = [&universe](const std::vector<V>& v) {
        for (const auto& x : v) {
            if (!universe.contains(x)) throw ConfigError("simulate_equivalence: value outside the universe");
        }
    };
    const bool marked = setup.constraint.kind == SelectionConstraint::Kind::marked_budget;

    EquivalenceReport<V> rep;
    rep.trials = trials;
    for (std::uint64_t k = 0; k < trials; ++k) {
        {
            auto adv = setup.make_adversary();
            auto sched = setup.make_scheduler();
            World<V> world(setup.initial, *sched, {setup.horizon, derive_seed(seed, 2 * k), HistoryMode::full});
            for (TimeStep t = 2; t <= setup.horizon; ++t) world.step(*adv, t);
            auto v = values_of(world.state());
            check(v);
            ++rep.live[v];
            if (setup.constraint.kind == SelectionConstraint::Kind::fixed_columns) {
                for (const auto& e : world.state()) {
                    if (!std::binary_search(setup.constraint.columns.begin(), setup.constraint.columns.end(),
                                            e.origin)) {
                        rep.live_origins_fixed = false;
                    }
                }
            }
        }
        {
            auto adv = setup.make_adversary();
            auto sched = setup.make_scheduler();
            TranslatedAdversary<V> table_adv(setup.initial, *adv, *sched, setup.horizon, marked);
            RandomSource rng(derive_seed(seed, 2 * k + 1), streams::realization);
            auto res = play_table_game(table_adv, n, setup.horizon, setup.constraint, rng);
            ++rep.legal_selections;
            auto v = values_of(res.state);
            check(v);
            ++rep.game[v];
        }
    }
    std::set<std::vector<V>> keys;
    for (const auto& [v, c] : rep.live) keys.insert(v);
    for (const auto& [v, c] : rep.game) keys.insert(v);
    std::vector<double> pooled;
    double diff = 0.0;
    const double N = static_cast<double>(trials);
    for (const auto& v : keys) {
        const double a = rep.live.contains(v) ? static_cast<double>(rep.live.at(v)) : 0.0;
        const double b = rep.game.contains(v) ? static_cast<double>(rep.game.at(v)) : 0.0;
        diff += std::abs(a - b) / N;
        pooled.push_back((a + b) / (2.0 * N));
    }
    rep.tv = 0.5 * diff;
    rep.noise_bound = tv_noise_bound(pooled, trials);
    return rep;
}

// Two objects over {0, 1}. The adversary rerolls object 0 while it shows 1,
// skews object 1 toward 1 once object 0 shows 0, and at the last round
// rerolls object 1 if it shows 0. `kind` picks the scheduler and the matching
// constraint; none is not allowed.
EquivalenceSetup<int> coin_setup(SchedulerKind kind, TimeStep horizon = 3, double alpha = 2.0);

// Every value is a point mass fixed by the round; TV must come out 0.
EquivalenceSetup<int> point_mass_setup(SchedulerKind kind, TimeStep horizon = 3);

}  // namespace resample
