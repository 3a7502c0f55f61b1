#include "resample/table_games.hpp"

namespace resample {

std::string_view to_string(SelectionConstraint::Kind kind) {
    switch (kind) {
        case SelectionConstraint::Kind::column_budget:
            return "column_budget";
        case SelectionConstraint::Kind::fixed_columns:
            return "fixed_columns";
        case SelectionConstraint::Kind::marked_budget:
            return "marked_budget";
    }
    return "?";
}

namespace {

Distribution<int> coin(double p_one) {
    Distribution<int> d;
    d.sample = [p_one](RandomSource& rng) { return rng.bernoulli(p_one) ? 1 : 0; };
    d.support = [p_one] { return std::vector<std::pair<int, double>>{{0, 1.0 - p_one}, {1, p_one}}; };
    d.label = "coin/" + std::to_string(p_one);
    return d;
}

// Latest realized value of each object, from a full history.
std::vector<int> current_values(const History<int>& h, std::size_t n) {
    std::vector<int> v(n, 0);
    for (const auto& row : h.rows()) {
        for (const auto& [u, x] : row.realized) v[u] = x;
    }
    return v;
}

SelectionConstraint constraint_for(SchedulerKind kind, std::size_t n, TimeStep horizon, double alpha) {
    switch (kind) {
        case SchedulerKind::gta:
            return gta_constraint(alpha, n);
        case SchedulerKind::landmark:
            return landmark_constraint(horizon);
        case SchedulerKind::proactive:
            return proactive_constraint(horizon);
        case SchedulerKind::none:
            break;
    }
    throw ConfigError("table game needs a resampling scheduler");
}

}  // namespace

EquivalenceSetup<int> coin_setup(SchedulerKind kind, TimeStep horizon, double alpha) {
    EquivalenceSetup<int> s;
    s.initial = {coin(0.5), coin(0.5)};
    s.universe = {0, 1};
    s.horizon = horizon;
    s.constraint = constraint_for(kind, 2, horizon, alpha);
    s.make_scheduler = [kind, alpha] { return make_scheduler(kind, alpha); };
    s.make_adversary = [horizon]() -> std::unique_ptr<Adversary<int>> {
        auto dists = [](const History<int>& h) {
            const auto v = current_values(h, 2);
            std::vector<DistributionSpec<int>> out;
            if (v[0] == 0) out.push_back({1, coin(0.8)});
            return out;
        };
        auto picks = [horizon](const History<int>& h) {
            const auto v = current_values(h, 2);
            std::vector<ObjectId> out;
            if (v[0] == 1) out.push_back(0);
            if (h.next_time() == horizon && v[1] == 0) out.push_back(1);
            return out;
        };
        return std::make_unique<FunctionAdversary<int>>(dists, picks);
    };
    return s;
}

EquivalenceSetup<int> point_mass_setup(SchedulerKind kind, TimeStep horizon) {
    EquivalenceSetup<int> s;
    s.initial = {point_mass(1), point_mass(0)};
    s.universe = {0, 1};
    s.horizon = horizon;
    s.constraint = constraint_for(kind, 2, horizon, 2.0);
    s.make_scheduler = [kind] { return make_scheduler(kind, 2.0); };
    s.make_adversary = []() -> std::unique_ptr<Adversary<int>> {
        auto dists = [](const History<int>& h) {
            const int x = static_cast<int>(h.next_time() % 2);
            return std::vector<DistributionSpec<int>>{{0, point_mass(x)}, {1, point_mass(1 - x)}};
        };
        auto picks = [](const History<int>& h) {
            return h.next_time() % 2 == 0 ? std::vector<ObjectId>{0} : std::vector<ObjectId>{1};
        };
        return std::make_unique<FunctionAdversary<int>>(dists, picks);
    };
    return s;
}

}  // namespace resample
