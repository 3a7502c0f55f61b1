#include "resample/assignment.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "json.hpp"

namespace resample {

// Hypergraph ---------------------------------------------------------------------

Hypergraph::Hypergraph(std::size_t jobs, std::size_t machines)
    : machine_alive_(machines, true), alive_of_job_(jobs), using_machine_(machines) {}

RoutineId Hypergraph::add_routine(JobId job, std::vector<MachineId> machines) {
    if (job >= job_count()) throw ConfigError("routine names unknown job " + std::to_string(job));
    std::sort(machines.begin(), machines.end());
    machines.erase(std::unique(machines.begin(), machines.end()), machines.end());
    bool alive = true;
    for (MachineId x : machines) {
        if (x >= machine_count()) throw ConfigError("routine names unknown machine " + std::to_string(x));
        alive = alive && machine_alive_[x];
    }
    const auto id = static_cast<RoutineId>(routines_.size());
    for (MachineId x : machines) using_machine_[x].push_back(id);
    routines_.push_back({job, std::move(machines)});
    routine_alive_.push_back(alive);
    slot_in_job_.push_back(alive_of_job_[job].size());
    if (alive) alive_of_job_[job].push_back(id);
    max_degree_ = std::max(max_degree_, alive_of_job_[job].size());
    return id;
}

std::vector<RoutineId> Hypergraph::kill_machine(MachineId x) {
    if (!machine_alive_.at(x)) throw SettingError("machine " + std::to_string(x) + " is already deleted");
    machine_alive_[x] = false;
    std::vector<RoutineId> died;
    for (RoutineId r : using_machine_[x]) {
        if (!routine_alive_[r]) continue;
        routine_alive_[r] = false;
        auto& list = alive_of_job_[routines_[r].job];
        const std::size_t slot = slot_in_job_[r];
        list[slot] = list.back();
        slot_in_job_[list[slot]] = slot;
        list.pop_back();
        died.push_back(r);
    }
    return died;
}

double Hypergraph::target_load(MachineId x) const {
    double total = 0.0;
    for (RoutineId r : using_machine_.at(x)) {
        if (!routine_alive_[r]) continue;
        total += 1.0 / static_cast<double>(alive_of_job_[routines_[r].job].size());
    }
    return total;
}

// JobMachine ---------------------------------------------------------------------

JobMachine::JobMachine(Hypergraph h)
    : graph_(std::move(h)),
      chosen_(graph_.job_count(), 0),
      has_choice_(graph_.job_count(), false),
      load_(graph_.machine_count(), 0) {
    for (JobId j = 0; j < graph_.job_count(); ++j) {
        if (graph_.alive_routines(j).empty()) {
            throw SettingError("job " + std::to_string(j) + " has no alive routine");
        }
    }
}

std::optional<RoutineId> JobMachine::assigned(JobId j) const {
    if (!has_choice_.at(j)) return std::nullopt;
    return chosen_[j];
}

void JobMachine::assign(JobId j, RoutineId r) {
    const auto& routine = graph_.routine(r);
    if (routine.job != j) throw SettingError("routine " + std::to_string(r) + " is not incident to job " + std::to_string(j));
    if (!graph_.routine_alive(r)) throw SettingError("routine " + std::to_string(r) + " is dead");
    if (has_choice_[j]) {
        for (MachineId x : graph_.routine(chosen_[j]).machines) --load_[x];
    }
    for (MachineId x : routine.machines) ++load_[x];
    chosen_[j] = r;
    has_choice_[j] = true;
}

std::vector<JobId> JobMachine::delete_machine(MachineId x) {
    const auto died = graph_.kill_machine(x);
    changed_.clear();
    std::vector<JobId> forced;
    for (RoutineId r : died) {
        const JobId j = graph_.routine(r).job;
        changed_.push_back(j);
        if (has_choice_[j] && chosen_[j] == r) forced.push_back(j);
    }
    std::sort(changed_.begin(), changed_.end());
    changed_.erase(std::unique(changed_.begin(), changed_.end()), changed_.end());
    for (JobId j : changed_) {
        if (graph_.alive_routines(j).empty()) {
            throw SettingError("job " + std::to_string(j) + " lost its last routine when machine " +
                               std::to_string(x) + " was deleted");
        }
    }
    std::sort(forced.begin(), forced.end());
    recourse_ += forced.size();
    return forced;
}

RoutineId JobMachine::resample_job(JobId j, RandomSource& rng) {
    const auto alive = graph_.alive_routines(j);
    if (alive.empty()) throw SettingError("job " + std::to_string(j) + " has no alive routine");
    const RoutineId r = alive[rng.below(alive.size())];
    assign(j, r);
    return r;
}

bool JobMachine::assignment_valid() const {
    for (JobId j = 0; j < graph_.job_count(); ++j) {
        if (!has_choice_[j] || !graph_.routine_alive(chosen_[j]) || graph_.routine(chosen_[j]).job != j) return false;
    }
    return true;
}

Distribution<RoutineId> job_distribution(const Hypergraph& h, JobId j) {
    const auto alive = h.alive_routines(j);
    if (alive.empty()) throw SettingError("job " + std::to_string(j) + " has no alive routine");
    std::vector<RoutineId> support(alive.begin(), alive.end());
    std::sort(support.begin(), support.end());
    return uniform_over(std::move(support));
}

std::vector<Distribution<RoutineId>> job_distributions(const Hypergraph& h) {
    std::vector<Distribution<RoutineId>> out;
    out.reserve(h.job_count());
    for (JobId j = 0; j < h.job_count(); ++j) out.push_back(job_distribution(h, j));
    return out;
}

std::vector<DistributionSpec<RoutineId>> MachineDeletionAdversary::next_distributions(const History<RoutineId>& h) {
    forced_.clear();
    std::vector<DistributionSpec<RoutineId>> out;
    const auto x = choose(h);
    if (!x) return out;
    ++deletions_;
    const auto forced = setting_.delete_machine(*x);
    forced_.assign(forced.begin(), forced.end());
    for (JobId j : setting_.last_changed_jobs()) out.push_back({j, job_distribution(setting_.graph(), j)});
    return out;
}

std::vector<ObjectId> MachineDeletionAdversary::pick_samples(const History<RoutineId>&) { return forced_; }

World<RoutineId>::Listener assignment_listener(JobMachine& setting) {
    return [&setting](ObjectId j, const RoutineId*, const RoutineId& r, TimeStep) { setting.assign(j, r); };
}

JobMachineInstance parse_jobmachine_instance(const std::string& json_text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("instance: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
        if (key != "jobs" && key != "machines" && key != "routines" && key != "script") {
            throw ConfigError("instance: unknown field '" + key + "'");
        }
    }
    auto ids = [&](const char* field) {
        if (!doc.contains(field) || !doc[field].is_array()) throw ConfigError(std::string("instance: '") + field + "' must be a list of ids");
        std::vector<std::int64_t> out;
        for (const auto& v : doc[field]) {
            if (!v.is_number_integer()) throw ConfigError(std::string("instance: '") + field + "' must hold integers");
            out.push_back(v.get<std::int64_t>());
        }
        return out;
    };
    auto index_of = [](const std::vector<std::int64_t>& list, const char* what) {
        std::unordered_map<std::int64_t, std::uint32_t> map;
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (!map.emplace(list[i], static_cast<std::uint32_t>(i)).second) {
                throw ConfigError(std::string("instance: duplicate ") + what + " id " + std::to_string(list[i]));
            }
        }
        return map;
    };
    JobMachineInstance inst{Hypergraph(0, 0), {}, ids("jobs"), ids("machines")};
    const auto job_index = index_of(inst.job_ids, "job");
    const auto machine_index = index_of(inst.machine_ids, "machine");
    auto lookup = [](const auto& map, const json& v, const std::string& path) {
        if (!v.is_number_integer()) throw ConfigError("instance: " + path + " must be an integer id");
        auto it = map.find(v.template get<std::int64_t>());
        if (it == map.end()) throw ConfigError("instance: " + path + " names an unknown id");
        return it->second;
    };
    Hypergraph g(inst.job_ids.size(), inst.machine_ids.size());
    if (!doc.contains("routines") || !doc["routines"].is_array()) throw ConfigError("instance: 'routines' must be a list");
    for (std::size_t i = 0; i < doc["routines"].size(); ++i) {
        const auto& r = doc["routines"][i];
        const std::string path = "routines[" + std::to_string(i) + "]";
        if (!r.is_object() || !r.contains("job") || !r.contains("machines") || !r["machines"].is_array()) {
            throw ConfigError("instance: " + path + " needs 'job' and 'machines'");
        }
        std::vector<MachineId> ms;
        for (std::size_t k = 0; k < r["machines"].size(); ++k) {
            ms.push_back(lookup(machine_index, r["machines"][k], path + ".machines[" + std::to_string(k) + "]"));
        }
        g.add_routine(lookup(job_index, r["job"], path + ".job"), std::move(ms));
    }
    inst.graph = std::move(g);
    if (doc.contains("script")) {
        if (!doc["script"].is_array()) throw ConfigError("instance: 'script' must be a list");
        for (std::size_t i = 0; i < doc["script"].size(); ++i) {
            const auto& ev = doc["script"][i];
            const std::string path = "script[" + std::to_string(i) + "]";
            if (ev.is_object() && ev.contains("delete_machine") && ev.size() == 1) {
                inst.script.emplace_back(lookup(machine_index, ev["delete_machine"], path + ".delete_machine"));
            } else if (ev.is_object() && ev.contains("idle") && ev.size() == 1) {
                inst.script.emplace_back(std::nullopt);
            } else {
                throw ConfigError("instance: " + path + " must be {\"delete_machine\": id} or {\"idle\": true}");
            }
        }
    }
    return inst;
}

// Balls and bins -----------------------------------------------------------------

BinsState::BinsState(std::size_t bins, std::size_t balls, RandomSource& rng)
    : contents_(bins), ball_bin_(balls), alive_(bins), alive_slot_(bins) {
    if (bins == 0) throw ConfigError("BinsState: need at least one bin");
    for (std::size_t b = 0; b < bins; ++b) {
        alive_[b] = b;
        alive_slot_[b] = b;
    }
    for (std::size_t ball = 0; ball < balls; ++ball) {
        const std::size_t b = rng.below(bins);
        ball_bin_[ball] = b;
        contents_[b].push_back(ball);
    }
}

std::size_t BinsState::delete_bin(std::size_t bin, RandomSource& rng) {
    if (!alive(bin)) throw SettingError("bin " + std::to_string(bin) + " is already deleted");
    if (alive_.size() < 2) throw SettingError("refusing to delete the last bin");
    const std::size_t slot = alive_slot_[bin];
    alive_[slot] = alive_.back();
    alive_slot_[alive_[slot]] = slot;
    alive_.pop_back();
    alive_slot_[bin] = kDead;
    auto moving = std::move(contents_[bin]);
    contents_[bin].clear();
    for (std::size_t ball : moving) {
        const std::size_t b = alive_[rng.below(alive_.size())];
        ball_bin_[ball] = b;
        contents_[b].push_back(ball);
    }
    log_.push_back(moving.size());
    total_ += moving.size();
    return moving.size();
}

std::size_t bins_delete(BinsState& b, std::size_t bin, RandomSource& rng) { return b.delete_bin(bin, rng); }

// Participant groups ---------------------------------------------------------------

namespace {

std::vector<bool> first_fraction(std::size_t n, double beta) {
    if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must lie in [0, 1]");
    std::vector<bool> out(n, false);
    const auto bad = static_cast<std::size_t>(beta * static_cast<double>(n));
    for (std::size_t p = 0; p < bad; ++p) out[p] = true;
    return out;
}

}  // namespace

GroupState::GroupState(std::size_t n, std::size_t g, double beta, RandomSource& rng)
    : GroupState(n, g, first_fraction(n, beta), rng) {}

GroupState::GroupState(std::size_t n, std::size_t g, std::vector<bool> malicious, RandomSource& rng)
    : group_of_(n), slot_(n), malicious_(std::move(malicious)), members_(g), bad_(g, 0) {
    if (g == 0) throw ConfigError("GroupState: need at least one group");
    if (malicious_.size() != n) throw ConfigError("GroupState: malicious flags must cover every participant");
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t grp = rng.below(g);
        group_of_[p] = grp;
        slot_[p] = members_[grp].size();
        members_[grp].push_back(p);
        if (malicious_[p]) ++bad_[grp];
    }
}

void GroupState::move(std::size_t p, std::size_t grp) {
    const std::size_t from = group_of_.at(p);
    if (grp >= members_.size()) throw ConfigError("GroupState::move: unknown group");
    if (from == grp) return;
    auto& list = members_[from];
    list[slot_[p]] = list.back();
    slot_[list[slot_[p]]] = slot_[p];
    list.pop_back();
    slot_[p] = members_[grp].size();
    members_[grp].push_back(p);
    group_of_[p] = grp;
    if (malicious_[p]) {
        --bad_[from];
        ++bad_[grp];
    }
}

std::vector<std::size_t> GroupState::rejoin(std::size_t p, JoinRule rule, std::size_t k, RandomSource& rng) {
    switch (rule) {
        case JoinRule::plain:
            move(p, rng.below(group_count()));
            return {p};
        case JoinRule::cuckoo: return cuckoo_join(*this, p, k, rng);
        case JoinRule::rotation: return rotation_join(*this, p, k, rng);
    }
    return {};
}

bool GroupState::has_malicious_majority() const {
    for (std::size_t grp = 0; grp < members_.size(); ++grp) {
        if (!members_[grp].empty() && 2 * bad_[grp] >= members_[grp].size()) return true;
    }
    return false;
}

double GroupState::max_malicious_fraction() const {
    double worst = 0.0;
    for (std::size_t grp = 0; grp < members_.size(); ++grp) {
        if (members_[grp].empty()) continue;
        worst = std::max(worst, static_cast<double>(bad_[grp]) / static_cast<double>(members_[grp].size()));
    }
    return worst;
}

std::size_t GroupState::min_group_size() const {
    std::size_t m = SIZE_MAX;
    for (const auto& list : members_) m = std::min(m, list.size());
    return m;
}

std::size_t GroupState::max_group_size() const {
    std::size_t m = 0;
    for (const auto& list : members_) m = std::max(m, list.size());
    return m;
}

bool GroupState::tallies_consistent() const {
    std::vector<std::size_t> size(members_.size(), 0), bad(members_.size(), 0);
    for (std::size_t p = 0; p < group_of_.size(); ++p) {
        ++size[group_of_[p]];
        if (malicious_[p]) ++bad[group_of_[p]];
    }
    for (std::size_t grp = 0; grp < members_.size(); ++grp) {
        if (size[grp] != members_[grp].size() || bad[grp] != bad_[grp]) return false;
    }
    return true;
}

std::vector<std::size_t> cuckoo_join(GroupState& gs, std::size_t p, std::size_t k, RandomSource& rng) {
    const std::size_t target = rng.below(gs.group_count());
    gs.move(p, target);
    std::vector<std::size_t> others;
    for (std::size_t q : gs.members(target)) {
        if (q != p) others.push_back(q);
    }
    const std::size_t kicks = std::min(k, others.size());
    std::vector<std::size_t> out{p};
    for (std::size_t idx : rng.sample_without_replacement(others.size(), kicks)) out.push_back(others[idx]);
    for (std::size_t i = 1; i < out.size(); ++i) gs.move(out[i], rng.below(gs.group_count()));
    return out;
}

std::vector<std::size_t> rotation_join(GroupState& gs, std::size_t p, std::size_t k, RandomSource& rng) {
    std::vector<std::size_t> chain{p};
    std::vector<bool> used(gs.size(), false);
    used[p] = true;
    std::size_t displaced = p;
    for (std::size_t i = 0; i < k && chain.size() < gs.size(); ++i) {
        std::size_t q;
        do {
            q = rng.below(gs.size());
        } while (used[q]);
        used[q] = true;
        gs.move(displaced, gs.group_of(q));
        chain.push_back(q);
        displaced = q;
    }
    gs.move(displaced, rng.below(gs.group_count()));
    return chain;
}

// Nested charging ------------------------------------------------------------------

double nested_charging_sum(const std::vector<std::vector<std::uint32_t>>& universes,
                           const std::vector<std::vector<std::uint32_t>>& charged) {
    if (universes.size() != charged.size()) throw ConfigError("charging: one charged set per universe");
    std::vector<std::vector<std::uint32_t>> u(universes);
    for (auto& s : u) std::sort(s.begin(), s.end());
    std::map<std::uint32_t, int> multiplicity;
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (i > 0 && !std::includes(u[i - 1].begin(), u[i - 1].end(), u[i].begin(), u[i].end())) {
            throw ConfigError("charging: universes are not nested at index " + std::to_string(i));
        }
        auto s = charged[i];
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("charging: repeated element in a charged set");
        if (!std::includes(u[i].begin(), u[i].end(), s.begin(), s.end())) {
            throw ConfigError("charging: charged set " + std::to_string(i) + " leaves its universe");
        }
        for (auto x : s) {
            if (++multiplicity[x] > 2) throw ConfigError("charging: element " + std::to_string(x) + " charged more than twice");
        }
        if (!s.empty()) total += static_cast<double>(s.size()) / static_cast<double>(u[i].size());
    }
    return total;
}

double harmonic(std::size_t n) {
    double h = 0.0;
    for (std::size_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
    return h;
}

}  // namespace resample
