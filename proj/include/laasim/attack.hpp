#pragma once

// Declarative botnet attack scenarios and their application to charging
// sessions or network loads.

#include <set>
#include <vector>

#include "laasim/demand.hpp"
#include "laasim/network.hpp"

namespace laasim {

enum class AttackKind { SynchronizedFcdcStart, UniformLoadScale };

/// Which actor of the charging ecosystem is compromised. Descriptive label
/// only; the load effect is identical whichever actor issues the command.
enum class CompromisedActor { EvBotnet, ChargingStation, Cpo, Msp };

struct AttackScenario {
    AttackKind kind = AttackKind::SynchronizedFcdcStart;
    int t_attack = 0;            // step, for SynchronizedFcdcStart
    std::set<int> target_buses;  // canonical ids; empty = all
    double factor = 1.0;         // for UniformLoadScale
    CompromisedActor actor = CompromisedActor::EvBotnet;
    bool scale_q = true;
};

/// Synchronized start: every session at a target bus that still has energy
/// to take at t_attack is rescheduled to charge at full power from t_attack
/// (its diversity collapsed). Energy already delivered before the attack is
/// preserved through an adjusted initial SOC.
inline std::vector<EvSession> apply_attack(const AttackScenario& scn,
                                           const std::vector<EvSession>& sessions,
                                           int horizon,
                                           int timestep_minutes) {
    if (scn.kind != AttackKind::SynchronizedFcdcStart)
        throw ValidationError("session attack requires SynchronizedFcdcStart");
    if (scn.t_attack < 0 || scn.t_attack >= horizon)
        throw ValidationError("t_attack outside horizon");
    const double dt_h = timestep_minutes / 60.0;
    std::vector<EvSession> out;
    out.reserve(sessions.size());
    for (const auto& s : sessions) {
        EvSession m = s;
        const bool targeted =
            scn.target_buses.empty() || scn.target_buses.count(s.bus) > 0;
        if (targeted) {
            // replay the normal charge up to t_attack
            double need = s.energy_needed_kwh();
            const int stop =
                std::min({s.departure, horizon, scn.t_attack});
            for (int t = s.arrival; t < stop && need > 0.0; ++t)
                need -= std::min(s.max_kw * dt_h, need);
            if (need > 1e-12) {
                m.arrival = scn.t_attack;
                m.departure = horizon;
                m.soc_init = m.target_soc - need / m.battery_kwh;
            }
        }
        out.push_back(m);
    }
    return out;
}

/// Uniform load scaling delegates to scale_loads (constant power factor by
/// default). Empty target set means every PQ bus that carries load.
inline Network apply_attack(const AttackScenario& scn, const Network& net) {
    if (scn.kind != AttackKind::UniformLoadScale)
        throw ValidationError("network attack requires UniformLoadScale");
    std::vector<int> targets(scn.target_buses.begin(), scn.target_buses.end());
    if (targets.empty()) targets = pq_load_buses(net);
    return scale_loads(net, scn.factor, targets, scn.scale_q);
}

}  // namespace laasim
