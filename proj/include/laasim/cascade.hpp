#pragma once

// Iterative cascading-failure procedure: solve every live island, trip all
// overloaded branches at once, re-detect islands, retire generator-less
// islands into the outage account, repeat until quiet.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "laasim/powerflow.hpp"

namespace laasim {

struct Island {
    std::vector<int> buses;       // canonical ids in the parent network
    std::vector<int> branches;    // in-service branch ids fully inside
    std::vector<int> generators;  // in-service generator indices
    double load_mw = 0.0;
    bool has_generation = false;
};

/// Connected components over in-service branches. Every bus lands in
/// exactly one island; buses with no live branch form singletons.
inline std::vector<Island> find_islands(const Network& net) {
    const int n = net.n_bus();
    std::vector<std::vector<int>> adj(n);
    for (const auto& br : net.branches) {
        if (!br.in_service()) continue;
        adj[br.from_bus].push_back(br.to_bus);
        adj[br.to_bus].push_back(br.from_bus);
    }
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{s};
        comp[s] = nc;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (comp[v] < 0) {
                    comp[v] = nc;
                    stack.push_back(v);
                }
        }
        ++nc;
    }
    std::vector<Island> islands(nc);
    for (int i = 0; i < n; ++i) {
        islands[comp[i]].buses.push_back(i);
        islands[comp[i]].load_mw += net.buses[i].p_load_mw;
    }
    for (size_t k = 0; k < net.branches.size(); ++k)
        if (net.branches[k].in_service())
            islands[comp[net.branches[k].from_bus]].branches.push_back(
                static_cast<int>(k));
    for (size_t g = 0; g < net.generators.size(); ++g)
        if (net.generators[g].in_service) {
            auto& isl = islands[comp[net.generators[g].bus]];
            isl.generators.push_back(static_cast<int>(g));
            isl.has_generation = true;
        }
    return islands;
}

struct CascadePolicy {
    bool treat_nonconverged_as_dead = true;  // else abort the cascade
    bool enforce_island_capacity = false;    // shed load past island p_max
    bool scale_q = true;                     // reserved for callers
};

struct CascadeRound {
    std::vector<int> deactivated;  // branch ids tripped at the END of round
    std::vector<Island> islands;   // structure at the START of the round
    std::vector<bool> island_solved;
    std::vector<int> islands_died;  // islands (index into `islands`) retired
};

struct CascadeTrace {
    std::vector<CascadeRound> rounds;
    std::set<int> total_deactivated;
    std::set<int> dead_buses;  // canonical
    double outage_mw = 0.0;
    double served_mw = 0.0;
    double original_load_mw = 0.0;
    bool base_case_warning = false;  // pre-attack network already overloaded
    bool aborted = false;
    std::string abort_reason;
};

namespace detail {

struct SubNet {
    Network net;
    std::vector<int> bus_map;  // sub canonical -> parent canonical
};

/// Carve one island out as a standalone network. The slack is the parent
/// slack when present, otherwise the in-service generator with the largest
/// p_max (first wins ties).
inline SubNet make_island_net(const Network& parent, const Island& isl) {
    SubNet sub;
    sub.net.base_mva = parent.base_mva;
    std::map<int, int> to_sub;
    for (int b : isl.buses) {
        Bus nb = parent.buses[b];
        nb.id = static_cast<int>(sub.net.buses.size());
        to_sub[b] = nb.id;
        nb.kind = nb.kind == BusKind::Slack ? BusKind::Slack
                  : nb.kind == BusKind::PV  ? BusKind::PV
                                            : BusKind::PQ;
        sub.net.buses.push_back(nb);
        sub.bus_map.push_back(b);
    }
    bool has_slack = false;
    for (const auto& b : sub.net.buses)
        if (b.kind == BusKind::Slack) has_slack = true;
    for (int k : isl.branches) {
        Branch br = parent.branches[k];
        br.from_bus = to_sub.at(br.from_bus);
        br.to_bus = to_sub.at(br.to_bus);
        sub.net.branches.push_back(br);
    }
    for (int g : isl.generators) {
        Generator gen = parent.generators[g];
        gen.bus = to_sub.at(gen.bus);
        sub.net.generators.push_back(gen);
    }
    if (!has_slack && !sub.net.generators.empty()) {
        const Generator* best = &sub.net.generators.front();
        for (const auto& g : sub.net.generators)
            if (g.p_max_mw > best->p_max_mw) best = &g;
        for (auto& b : sub.net.buses)
            if (b.kind == BusKind::Slack) b.kind = BusKind::PV;
        sub.net.buses[best->bus].kind = BusKind::Slack;
    }
    return sub;
}

}  // namespace detail

/// Run the overload-deactivate-resolve loop until no live island has a
/// thermal violation. Each round trips every overloaded branch across all
/// islands simultaneously. Islands without in-service generation die: their
/// load joins outage_mw and they leave the live set. Terminates within
/// |branches| rounds since every round removes at least one branch.
inline CascadeTrace cascade(const Network& input, const SolveOptions& opts,
                            const CascadePolicy& policy = {}) {
    Network net = input;
    CascadeTrace trace;
    trace.original_load_mw = net.total_load_mw();

    std::set<int> dead;     // canonical bus ids already retired
    double outage = 0.0;

    const int max_rounds = net.n_branch() + 1;
    for (int round = 0; round < max_rounds; ++round) {
        CascadeRound rec;
        rec.islands = find_islands(net);

        std::vector<int> overloaded;
        rec.island_solved.assign(rec.islands.size(), false);
        for (size_t ii = 0; ii < rec.islands.size(); ++ii) {
            const Island& isl = rec.islands[ii];
            const bool all_dead = std::all_of(
                isl.buses.begin(), isl.buses.end(),
                [&dead](int b) { return dead.count(b) > 0; });
            if (all_dead) continue;
            if (!isl.has_generation) {
                rec.islands_died.push_back(static_cast<int>(ii));
                for (int b : isl.buses)
                    if (dead.insert(b).second) outage += net.buses[b].p_load_mw;
                continue;
            }
            if (policy.enforce_island_capacity) {
                double cap = 0.0, load = 0.0;
                for (int g : isl.generators) cap += net.generators[g].p_max_mw;
                for (int b : isl.buses) load += net.buses[b].p_load_mw;
                if (load > cap && load > 0.0) {
                    const double keep = cap / load;
                    for (int b : isl.buses) {
                        outage += net.buses[b].p_load_mw * (1.0 - keep);
                        net.buses[b].p_load_mw *= keep;
                        net.buses[b].q_load_mvar *= keep;
                    }
                }
            }
            if (isl.buses.size() == 1) {
                rec.island_solved[ii] = true;  // single gen bus, trivially fine
                continue;
            }
            auto sub = detail::make_island_net(net, isl);
            PowerFlowSolution sol;
            bool solved = false;
            try {
                sol = solve_ac(sub.net, opts);
                solved = sol.converged;
            } catch (const StructuralError&) {
                solved = false;
            }
            rec.island_solved[ii] = solved;
            if (!solved) {
                if (!policy.treat_nonconverged_as_dead) {
                    trace.aborted = true;
                    trace.abort_reason = "island power flow did not converge";
                    trace.rounds.push_back(std::move(rec));
                    break;
                }
                rec.islands_died.push_back(static_cast<int>(ii));
                for (int b : isl.buses)
                    if (dead.insert(b).second) outage += net.buses[b].p_load_mw;
                continue;
            }
            for (size_t j = 0; j < sub.net.branches.size(); ++j) {
                const auto& br = sub.net.branches[j];
                if (br.rate_mva <= 0.0) continue;
                const double s =
                    std::max(std::hypot(sol.p_from[j], sol.q_from[j]),
                             std::hypot(sol.p_to[j], sol.q_to[j]));
                if (s > br.rate_mva) overloaded.push_back(isl.branches[j]);
            }
        }
        if (trace.aborted) break;

        if (overloaded.empty()) {
            trace.rounds.push_back(std::move(rec));
            break;
        }
        std::sort(overloaded.begin(), overloaded.end());
        rec.deactivated = overloaded;
        for (int k : overloaded) {
            net.branches[k].status = BranchStatus::Deactivated;
            trace.total_deactivated.insert(k);
        }
        trace.rounds.push_back(std::move(rec));
    }

    trace.dead_buses = dead;
    trace.outage_mw = outage;
    trace.served_mw = trace.original_load_mw - outage;
    return trace;
}

/// True where the cascade would have tripped something in round one; used
/// to verify that the pre-attack network is quiet before running a study.
inline bool base_case_has_overloads(const Network& net,
                                    const SolveOptions& opts) {
    auto sol = solve_ac(net, opts);
    if (!sol.converged) return true;
    auto rep = check_limits(net, sol);
    return !rep.overloaded_branches.empty();
}

/// Per-timestep stealth check for a distribution network: true at steps
/// where the head-feeder MW flow stays within feeder_limit_mw (protection
/// NOT triggered). The head feeder is the first in-service branch incident
/// to the slack bus. Non-convergence counts as triggered.
inline std::vector<bool> distribution_guard(const Network& net33,
                                            const DemandProfile& profile,
                                            double feeder_limit_mw,
                                            const SolveOptions& opts = {}) {
    if (profile.n_bus != net33.n_bus())
        throw ValidationError("profile dimensioned for a different network");
    const int slack = net33.slack_bus();
    int feeder = -1;
    for (size_t k = 0; k < net33.branches.size(); ++k)
        if (net33.branches[k].in_service() &&
            (net33.branches[k].from_bus == slack ||
             net33.branches[k].to_bus == slack)) {
            feeder = static_cast<int>(k);
            break;
        }
    if (feeder < 0) throw ValidationError("no feeder branch at the slack bus");

    std::vector<bool> ok(profile.horizon, false);
    Network net = net33;
    for (int t = 0; t < profile.horizon; ++t) {
        for (int b = 0; b < net.n_bus(); ++b) {
            net.buses[b].p_load_mw = profile.p(b, t);
            net.buses[b].q_load_mvar = profile.q(b, t);
        }
        auto sol = solve_ac(net, opts);
        if (!sol.converged) continue;
        const double p = std::max(std::abs(sol.p_from[feeder]),
                                  std::abs(sol.p_to[feeder]));
        ok[t] = p <= feeder_limit_mw;
    }
    return ok;
}

}  // namespace laasim
