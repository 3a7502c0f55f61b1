#include "resample/schedulers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace resample {

int trailing_zeros(std::uint64_t m) {
    if (m == 0) throw std::domain_error("trailing_zeros(0)");
    return std::countr_zero(m);
}

TimeStep landmark_next(TimeStep t_prev, unsigned i) {
    if (t_prev < 1) throw std::domain_error("landmark_next: t_prev must be >= 1");
    if (i >= 62) throw std::domain_error("landmark_next: index too large");
    const TimeStep lo = t_prev + (TimeStep{1} << i);
    const TimeStep hi = t_prev + (TimeStep{1} << (i + 1));
    // The smallest multiple of 2^z in [lo, hi] for the largest z that has one.
    for (int z = 62; z >= 0; --z) {
        const TimeStep step = TimeStep{1} << z;
        const TimeStep m = (lo + step - 1) / step * step;
        if (m <= hi) return m;
    }
    return lo;
}

std::vector<TimeStep> landmark_sequence(TimeStep t0, TimeStep horizon) {
    if (t0 < 1 || t0 > horizon) throw std::domain_error("landmark_sequence: need 1 <= t0 <= horizon");
    std::vector<TimeStep> out;
    TimeStep t = t0;
    for (unsigned i = 1;; ++i) {
        t = landmark_next(t, i);
        if (t > horizon) break;
        out.push_back(t);
    }
    return out;
}

std::vector<TimeStep> landmarks(TimeStep T) {
    if (T < 1) throw std::domain_error("landmarks: T must be >= 1");
    std::vector<TimeStep> out;
    for (TimeStep t0 = 1; t0 <= T; ++t0) {
        const auto seq = landmark_sequence(t0, T);
        out.push_back(seq.empty() ? t0 : seq.back());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void sweep_landmarks(TimeStep max_T,
                     const std::function<void(TimeStep, std::span<const std::uint32_t>, std::size_t)>& visit) {
    // At time T the origin of an object sampled at t0 is the last of
    // t0, t1, t2, ... that is <= T. Each t_i moves one unit of multiplicity.
    struct Move {
        TimeStep from;
        TimeStep to;
    };
    std::vector<std::vector<Move>> moves(max_T + 1);
    for (TimeStep t0 = 1; t0 <= max_T; ++t0) {
        moves[t0].push_back({0, t0});
        TimeStep prev = t0;
        for (TimeStep t : landmark_sequence(t0, max_T)) {
            moves[t].push_back({prev, t});
            prev = t;
        }
    }
    std::vector<std::uint32_t> count(max_T + 1, 0);
    std::size_t distinct = 0;
    for (TimeStep T = 1; T <= max_T; ++T) {
        for (const auto& mv : moves[T]) {
            if (mv.from != 0 && --count[mv.from] == 0) --distinct;
            if (count[mv.to]++ == 0) ++distinct;
        }
        visit(T, std::span<const std::uint32_t>(count.data(), T + 1), distinct);
    }
}

double gta_budget(double alpha, std::size_t n, std::uint64_t q) {
    if (alpha < 1.0) throw std::domain_error("gta_budget: alpha must be >= 1");
    if (n < 2) throw std::domain_error("gta_budget: n must be >= 2");
    const double base = std::log1p(1.0 / alpha);
    return static_cast<double>(q) * (std::log(static_cast<double>(n)) / base + 2.0 / base);
}

std::size_t gta_group_bound(double alpha, std::size_t n) {
    if (n <= 1) return 1;
    if (alpha <= 1.0) {
        // Distinct sizes only: 1 + 2 + ... + g <= n.
        std::size_t g = 0;
        while ((g + 1) * (g + 2) / 2 <= n) ++g;
        return g;
    }
    const double levels = std::log(static_cast<double>(n)) / std::log(alpha);
    return static_cast<std::size_t>(std::floor(levels + 1e-9)) + 1;
}

// Proactive --------------------------------------------------------------------

void ProactiveScheduler::start(std::size_t n, TimeStep horizon) {
    horizon_ = horizon;
    slots_.assign(n, Slot{});
    queue_ = {};
    for (ObjectId u = 0; u < n; ++u) on_sample(u, 1);
}

void ProactiveScheduler::push_next(ObjectId obj) {
    auto& s = slots_[obj];
    if (s.exponent >= 62) {
        s.active = false;
        return;
    }
    const TimeStep due = s.anchor + (TimeStep{1} << s.exponent);
    if (due > horizon_) {
        s.active = false;
        return;
    }
    s.active = true;
    queue_.push({due, obj, s.generation});
}

void ProactiveScheduler::on_sample(ObjectId obj, TimeStep t) {
    auto& s = slots_.at(obj);
    s.anchor = t;
    s.exponent = 0;
    ++s.generation;
    push_next(obj);
}

std::vector<TimeStep> ProactiveScheduler::pending(ObjectId obj) const {
    const auto& s = slots_.at(obj);
    std::vector<TimeStep> out;
    if (!s.active) return out;
    for (unsigned e = s.exponent; e < 62; ++e) {
        const TimeStep due = s.anchor + (TimeStep{1} << e);
        if (due > horizon_) break;
        out.push_back(due);
    }
    return out;
}

std::vector<ObjectId> ProactiveScheduler::on_round(TimeStep t, std::span<const ObjectId> adversarial) {
    std::vector<ObjectId> due;
    while (!queue_.empty() && queue_.top().due <= t) {
        const Item item = queue_.top();
        queue_.pop();
        auto& s = slots_[item.obj];
        if (item.generation != s.generation || !s.active) continue;
        due.push_back(item.obj);
        ++s.exponent;
        push_next(item.obj);
    }
    std::sort(due.begin(), due.end());
    for (ObjectId u : adversarial) {
        if (!reset_on_coincident_ && std::binary_search(due.begin(), due.end(), u)) continue;
        on_sample(u, t);
    }
    return due;
}

// Greedy temporal aggregation ---------------------------------------------------

GtaScheduler::GtaScheduler(double alpha, bool instrument) : alpha_(alpha), instrument_(instrument) {
    if (!(alpha >= 1.0)) throw ConfigError("GTA: alpha must be >= 1");
}

void GtaScheduler::start(std::size_t n, TimeStep) {
    n_ = n;
    groups_.clear();
    group_of_.assign(n, 1);
    slot_of_.resize(n);
    auto& g = groups_[1];
    g.members.resize(n);
    for (ObjectId u = 0; u < n; ++u) {
        g.members[u] = u;
        slot_of_[u] = u;
    }
    coins_.assign(instrument_ ? n : 0, 0.0);
    merges_ = 0;
}

void GtaScheduler::detach(ObjectId u) {
    auto it = groups_.find(group_of_[u]);
    auto& members = it->second.members;
    const std::size_t slot = slot_of_[u];
    members[slot] = members.back();
    slot_of_[members[slot]] = slot;
    members.pop_back();
    if (members.empty()) groups_.erase(it);
}

void GtaScheduler::attach(ObjectId u, TimeStep t) {
    auto& members = groups_[t].members;
    slot_of_[u] = members.size();
    members.push_back(u);
    group_of_[u] = t;
}

void GtaScheduler::move_to_group(TimeStep t, std::span<const ObjectId> objs) {
    const double base = std::log1p(1.0 / alpha_);
    for (ObjectId u : objs) {
        if (group_of_.at(u) == t) continue;
        if (instrument_) {
            const auto& old = groups_[group_of_[u]].members;
            const double share = 2.0 / (base * static_cast<double>(old.size()));
            for (ObjectId w : old) {
                if (w != u) coins_[w] += share;
            }
            coins_[u] += std::log(static_cast<double>(n_)) / base;
        }
        detach(u);
        attach(u, t);
    }
}

std::vector<ObjectId> GtaScheduler::stabilize(TimeStep t) {
    std::vector<ObjectId> sampled;
    for (;;) {
        std::vector<std::pair<std::size_t, TimeStep>> order;
        order.reserve(groups_.size());
        for (const auto& [origin, g] : groups_) order.emplace_back(g.members.size(), origin);
        std::sort(order.begin(), order.end());
        // Some pair qualifies iff some adjacent pair in size order does.
        std::size_t pick = order.size();
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            if (static_cast<double>(order[i + 1].first) <= alpha_ * static_cast<double>(order[i].first)) {
                pick = i;
                break;
            }
        }
        if (pick == order.size()) break;
        ++merges_;
        auto members = groups_[order[pick].second].members;
        const auto& other = groups_[order[pick + 1].second].members;
        members.insert(members.end(), other.begin(), other.end());
        for (ObjectId u : members) {
            sampled.push_back(u);
            if (instrument_) coins_[u] -= 1.0;
            // Members of group t itself are sampled again but stay put.
            if (group_of_[u] != t) {
                detach(u);
                attach(u, t);
            }
        }
    }
    std::sort(sampled.begin(), sampled.end());
    sampled.erase(std::unique(sampled.begin(), sampled.end()), sampled.end());
    return sampled;
}

std::vector<ObjectId> GtaScheduler::on_round(TimeStep t, std::span<const ObjectId> adversarial) {
    if (adversarial.empty()) return {};
    move_to_group(t, adversarial);
    return stabilize(t);
}

std::map<TimeStep, std::vector<ObjectId>> GtaScheduler::groups() const {
    std::map<TimeStep, std::vector<ObjectId>> out;
    for (const auto& [origin, g] : groups_) {
        auto members = g.members;
        std::sort(members.begin(), members.end());
        out.emplace(origin, std::move(members));
    }
    return out;
}

bool GtaScheduler::is_stable() const {
    std::vector<std::size_t> sizes;
    for (const auto& [origin, g] : groups_) sizes.push_back(g.members.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        for (std::size_t j = i + 1; j < sizes.size(); ++j) {
            const double a = static_cast<double>(std::min(sizes[i], sizes[j]));
            const double b = static_cast<double>(std::max(sizes[i], sizes[j]));
            if (b <= alpha_ * a) return false;
        }
    }
    return true;
}

double GtaScheduler::potential(ObjectId u) const {
    const double base = std::log1p(1.0 / alpha_);
    const auto size = groups_.at(group_of_.at(u)).members.size();
    return std::log(static_cast<double>(size)) / base + coins_.at(u);
}

// Landmark ----------------------------------------------------------------------

void LandmarkScheduler::start(std::size_t n, TimeStep horizon) {
    horizon_ = horizon;
    slots_.assign(n, Slot{});
    by_time_.clear();
    for (ObjectId u = 0; u < n; ++u) on_sample(u, 1);
}

void LandmarkScheduler::schedule(ObjectId obj, TimeStep from, unsigned index) {
    auto& s = slots_[obj];
    s.index = index;
    const TimeStep next = landmark_next(from, index);
    if (next > horizon_) {
        s.next_due = 0;
        return;
    }
    s.next_due = next;
    by_time_[next].push_back(obj);
}

void LandmarkScheduler::on_sample(ObjectId obj, TimeStep t0) { schedule(obj, t0, 1); }

std::vector<ObjectId> LandmarkScheduler::due(TimeStep t) {
    std::vector<ObjectId> out;
    while (!by_time_.empty() && by_time_.begin()->first <= t) {
        auto node = by_time_.extract(by_time_.begin());
        for (ObjectId u : node.mapped()) {
            if (slots_[u].next_due != node.key()) continue;
            out.push_back(u);
            schedule(u, node.key(), slots_[u].index + 1);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ObjectId> LandmarkScheduler::on_round(TimeStep t, std::span<const ObjectId> adversarial) {
    auto out = due(t);
    for (ObjectId u : adversarial) {
        if (!reset_on_coincident_ && std::binary_search(out.begin(), out.end(), u)) continue;
        on_sample(u, t);
    }
    return out;
}

// Factory -------------------------------------------------------------------------

SchedulerKind parse_scheduler(std::string_view name) {
    if (name == "none") return SchedulerKind::none;
    if (name == "proactive") return SchedulerKind::proactive;
    if (name == "gta") return SchedulerKind::gta;
    if (name == "landmark") return SchedulerKind::landmark;
    throw ConfigError("unknown scheduler '" + std::string(name) + "' (none, proactive, gta, landmark)");
}

std::string_view to_string(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::none: return "none";
        case SchedulerKind::proactive: return "proactive";
        case SchedulerKind::gta: return "gta";
        case SchedulerKind::landmark: return "landmark";
    }
    return "?";
}

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double alpha) {
    switch (kind) {
        case SchedulerKind::none: return std::make_unique<NoResampling>();
        case SchedulerKind::proactive: return std::make_unique<ProactiveScheduler>();
        case SchedulerKind::gta: return std::make_unique<GtaScheduler>(alpha);
        case SchedulerKind::landmark: return std::make_unique<LandmarkScheduler>();
    }
    throw ConfigError("unknown scheduler kind");
}

}  // namespace resample
