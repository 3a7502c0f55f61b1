#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resample/errors.hpp"
#include "resample/rng.hpp"

namespace resample {

// Objects are indexed 0..n-1 internally; time starts at 1.
using ObjectId = std::uint32_t;
using TimeStep = std::uint64_t;

template <class V>
struct Distribution {
    std::function<V(RandomSource&)> sample;
    // Optional exact support, (value, probability) pairs.
    std::function<std::vector<std::pair<V, double>>()> support;
    std::string label;
};

template <class V>
struct DistributionSpec {
    ObjectId object;
    Distribution<V> dist;
};

// Checks an enumerated support sums to one. Returns false if no enumerator.
template <class V>
bool support_is_normalized(const Distribution<V>& d, double tol = 1e-12) {
    if (!d.support) return false;
    double total = 0.0;
    for (const auto& [value, p] : d.support()) {
        if (p < 0.0) return false;
        total += p;
    }
    return std::abs(total - 1.0) <= tol;
}

template <class V>
Distribution<V> point_mass(V v) {
    Distribution<V> d;
    d.sample = [v](RandomSource&) { return v; };
    d.support = [v] { return std::vector<std::pair<V, double>>{{v, 1.0}}; };
    d.label = "point";
    return d;
}

template <class V>
Distribution<V> uniform_over(std::vector<V> values) {
    if (values.empty()) throw ConfigError("uniform_over: empty support");
    Distribution<V> d;
    d.sample = [values](RandomSource& rng) { return values[rng.below(values.size())]; };
    d.support = [values] {
        std::vector<std::pair<V, double>> out;
        for (const auto& v : values) out.emplace_back(v, 1.0 / static_cast<double>(values.size()));
        return out;
    };
    d.label = "uniform/" + std::to_string(values.size());
    return d;
}

template <class V>
struct Entry {
    V value;
    TimeStep origin;
};

template <class V>
using JointState = std::vector<Entry<V>>;

template <class V>
std::vector<V> values_of(const JointState<V>& state) {
    std::vector<V> out;
    out.reserve(state.size());
    for (const auto& e : state) out.push_back(e.value);
    return out;
}

template <class V>
struct HistoryRow {
    TimeStep time = 0;
    std::vector<std::pair<ObjectId, std::string>> installed;
    std::vector<ObjectId> adversarial;
    std::vector<ObjectId> algorithm;
    std::vector<std::pair<ObjectId, V>> realized;
};

// `full` keeps every row. `last_row` keeps only the most recent one, for long
// scripted runs where nobody reads the past.
enum class HistoryMode { full, last_row };

template <class V>
class History {
   public:
    explicit History(HistoryMode mode = HistoryMode::full) : mode_(mode) {}

    void append(HistoryRow<V> row) {
        if (row.time != count_ + 1) throw ConfigError("History::append: rows must be consecutive");
        ++count_;
        if (mode_ == HistoryMode::full) {
            rows_.push_back(std::move(row));
        } else {
            last_ = std::move(row);
        }
    }

    TimeStep last_time() const { return count_; }
    TimeStep next_time() const { return count_ + 1; }
    HistoryMode mode() const { return mode_; }
    // Only populated in full mode.
    const std::vector<HistoryRow<V>>& rows() const { return rows_; }
    const HistoryRow<V>* last() const {
        if (count_ == 0) return nullptr;
        return mode_ == HistoryMode::full ? &rows_.back() : &last_;
    }

   private:
    HistoryMode mode_;
    TimeStep count_ = 0;
    std::vector<HistoryRow<V>> rows_;
    HistoryRow<V> last_;
};

template <class V>
void write_history(std::ostream& os, const History<V>& h) {
    auto list = [&os](const std::vector<ObjectId>& ids) {
        os << '[';
        for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? "," : "") << ids[i];
        os << ']';
    };
    for (const auto& row : h.rows()) {
        os << row.time << " d=";
        for (const auto& [obj, label] : row.installed) os << obj << ':' << label << ';';
        os << " adv=";
        list(row.adversarial);
        os << " alg=";
        list(row.algorithm);
        os << " v=";
        for (const auto& [obj, value] : row.realized) os << obj << ':' << value << ';';
        os << '\n';
    }
}

// The adversary as a pair of procedures of the history. Implementations may
// also read their setting's public state, which is a function of the history.
template <class V>
class Adversary {
   public:
    virtual ~Adversary() = default;
    virtual std::vector<DistributionSpec<V>> next_distributions(const History<V>& h) = 0;
    virtual std::vector<ObjectId> pick_samples(const History<V>& h) = 0;
};

template <class V>
class FunctionAdversary final : public Adversary<V> {
   public:
    using DistFn = std::function<std::vector<DistributionSpec<V>>(const History<V>&)>;
    using PickFn = std::function<std::vector<ObjectId>(const History<V>&)>;

    FunctionAdversary(DistFn dists, PickFn picks) : dists_(std::move(dists)), picks_(std::move(picks)) {}

    std::vector<DistributionSpec<V>> next_distributions(const History<V>& h) override {
        return dists_ ? dists_(h) : std::vector<DistributionSpec<V>>{};
    }
    std::vector<ObjectId> pick_samples(const History<V>& h) override {
        return picks_ ? picks_(h) : std::vector<ObjectId>{};
    }

   private:
    DistFn dists_;
    PickFn picks_;
};

// Resampling policy of the algorithm. Value-agnostic: the schedulers in this
// library only look at who was sampled when.
class Scheduler {
   public:
    virtual ~Scheduler() = default;
    virtual std::string_view name() const = 0;
    // Every object was adversarially sampled at t = 1.
    virtual void start(std::size_t n, TimeStep horizon) = 0;
    // Called once per round t >= 2 after the adversary's samples are realized.
    // `adversarial` is sorted and unique. Returns the algorithm's sample set;
    // it may overlap `adversarial`, overlapping objects are sampled once.
    virtual std::vector<ObjectId> on_round(TimeStep t, std::span<const ObjectId> adversarial) = 0;
};

struct WorldOptions {
    TimeStep horizon = 1;
    std::uint64_t seed = 0;
    HistoryMode history = HistoryMode::full;
};

template <class V>
class World {
   public:
    // old_value is null for the initial draw at t = 1.
    using Listener = std::function<void(ObjectId, const V* old_value, const V& new_value, TimeStep)>;

    World(std::vector<Distribution<V>> initial, Scheduler& scheduler, WorldOptions options,
          Listener listener = {})
        : scheduler_(&scheduler),
          options_(options),
          dists_(std::move(initial)),
          history_(options.history),
          rng_(options.seed, streams::realization),
          listener_(std::move(listener)) {
        if (dists_.empty()) throw ConfigError("World: no objects");
        if (options_.horizon < 1) throw ConfigError("World: horizon must be >= 1");
        HistoryRow<V> row;
        row.time = 1;
        state_.reserve(dists_.size());
        for (ObjectId u = 0; u < dists_.size(); ++u) {
            state_.push_back({dists_[u].sample(rng_), 1});
            if (listener_) listener_(u, nullptr, state_.back().value, 1);
            row.installed.emplace_back(u, dists_[u].label);
            row.adversarial.push_back(u);
            if (history_.mode() == HistoryMode::full) row.realized.emplace_back(u, state_.back().value);
        }
        adversarial_samples_ = dists_.size();
        history_.append(std::move(row));
        scheduler_->start(dists_.size(), options_.horizon);
    }

    std::size_t size() const { return state_.size(); }
    TimeStep time() const { return history_.last_time(); }
    TimeStep horizon() const { return options_.horizon; }
    const JointState<V>& state() const { return state_; }
    const History<V>& history() const { return history_; }
    const Distribution<V>& distribution(ObjectId u) const { return dists_.at(u); }
    Scheduler& scheduler() { return *scheduler_; }
    // Samples after initialization.
    std::uint64_t adversarial_samples() const { return adversarial_samples_ - state_.size(); }
    // Algorithm samples of objects the adversary did not sample in the same round.
    std::uint64_t algorithm_samples() const { return algorithm_samples_; }

    // One round of the interaction loop; see run_round.
    const JointState<V>& step(Adversary<V>& adversary, TimeStep t) {
        if (t != time() + 1) throw ConfigError("run_round: rounds must be consecutive");
        if (t > options_.horizon) throw ConfigError("run_round: past the horizon");
        HistoryRow<V> row;
        row.time = t;
        const bool keep = history_.mode() == HistoryMode::full;
        for (auto& spec : adversary.next_distributions(history_)) {
            if (spec.object >= dists_.size()) {
                throw ConfigError("adversary installed a distribution for unknown object " +
                                  std::to_string(spec.object));
            }
            if (keep) row.installed.emplace_back(spec.object, spec.dist.label);
            dists_[spec.object] = std::move(spec.dist);
        }
        row.adversarial = adversary.pick_samples(history_);
        normalize(row.adversarial);
        for (ObjectId u : row.adversarial) realize(u, t, keep ? &row : nullptr);
        adversarial_samples_ += row.adversarial.size();

        auto chosen = scheduler_->on_round(t, row.adversarial);
        normalize(chosen);
        for (ObjectId u : chosen) {
            if (std::binary_search(row.adversarial.begin(), row.adversarial.end(), u)) continue;
            row.algorithm.push_back(u);
            realize(u, t, keep ? &row : nullptr);
        }
        algorithm_samples_ += row.algorithm.size();
        history_.append(std::move(row));
        return state_;
    }

   private:
    void normalize(std::vector<ObjectId>& ids) const {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (!ids.empty() && ids.back() >= state_.size()) {
            throw ConfigError("sample set names unknown object " + std::to_string(ids.back()));
        }
    }

    void realize(ObjectId u, TimeStep t, HistoryRow<V>* row) {
        V fresh = dists_[u].sample(rng_);
        if (listener_) listener_(u, &state_[u].value, fresh, t);
        state_[u].value = std::move(fresh);
        state_[u].origin = t;
        if (row) row->realized.emplace_back(u, state_[u].value);
    }

    Scheduler* scheduler_;
    WorldOptions options_;
    std::vector<Distribution<V>> dists_;
    JointState<V> state_;
    History<V> history_;
    RandomSource rng_;
    Listener listener_;
    std::uint64_t adversarial_samples_ = 0;
    std::uint64_t algorithm_samples_ = 0;
};

// Adversary installs distributions and picks its samples from the history,
// these are realized, then the scheduler (which observes those realizations)
// picks its own set. Origins become t exactly for resampled objects.
template <class V>
const JointState<V>& run_round(World<V>& world, Adversary<V>& adversary, TimeStep t) {
    return world.step(adversary, t);
}

// One fresh product draw from the installed distributions. Pure.
template <class V>
std::vector<V> static_sample(const World<V>& world, RandomSource& rng) {
    std::vector<V> out;
    out.reserve(world.size());
    for (ObjectId u = 0; u < world.size(); ++u) out.push_back(world.distribution(u).sample(rng));
    return out;
}

template <class V>
using LoadFunction = std::function<double(std::span<const V>)>;

template <class V>
double evaluate_load(const LoadFunction<V>& f, const JointState<V>& state) {
    const auto values = values_of(state);
    return f(values);
}

// Coordinate-wise splice: out[i] = sources[choice[i]][i].
template <class V>
std::vector<V> splice(std::span<const std::vector<V>> sources, std::span<const std::size_t> choice) {
    if (sources.empty()) throw ConfigError("splice: no sources");
    const std::size_t n = sources.front().size();
    if (choice.size() != n) throw ConfigError("splice: choice length mismatch");
    std::vector<V> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& src = sources[choice[i]];
        if (src.size() != n) throw ConfigError("splice: ragged sources");
        out.push_back(src[i]);
    }
    return out;
}

// Number of objects with the given value; the canonical load function.
template <class V>
LoadFunction<V> count_equal(V target) {
    return [target](std::span<const V> values) {
        return static_cast<double>(std::count(values.begin(), values.end(), target));
    };
}

}  // namespace resample
