#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace laasim {

enum class BusKind { Slack, PV, PQ };
enum class BranchStatus { InService, Deactivated };

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Canonical ids are dense 0..n-1 in file order; external_id is the id as
/// written in the source case file. Loads and shunts are in physical units
/// (MW / MVAr at 1.0 pu voltage), impedances elsewhere in per unit.
struct Bus {
    int id = 0;
    int external_id = 0;
    BusKind kind = BusKind::PQ;
    double p_load_mw = 0.0;
    double q_load_mvar = 0.0;
    double g_shunt_mw = 0.0;
    double b_shunt_mvar = 0.0;
    double base_kv = 1.0;
    double v_setpoint = 1.0;
    double v_min = 0.9;
    double v_max = 1.1;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;
    double rate_mva = 0.0;  // 0 = unlimited
    double tap = 1.0;
    double shift_deg = 0.0;
    BranchStatus status = BranchStatus::InService;

    bool in_service() const { return status == BranchStatus::InService; }
};

struct Generator {
    int bus = 0;
    double p_mw = 0.0;
    double q_mvar = 0.0;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;
    double v_setpoint = 1.0;
    double p_min_mw = 0.0;
    double p_max_mw = 0.0;
    bool in_service = true;
};

struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    int n_bus() const { return static_cast<int>(buses.size()); }
    int n_branch() const { return static_cast<int>(branches.size()); }

    /// Canonical index of an external id, or -1.
    int canonical_of(int external_id) const {
        for (const auto& b : buses)
            if (b.external_id == external_id) return b.id;
        return -1;
    }

    int slack_bus() const {
        for (const auto& b : buses)
            if (b.kind == BusKind::Slack) return b.id;
        return -1;
    }

    double total_load_mw() const {
        double s = 0.0;
        for (const auto& b : buses) s += b.p_load_mw;
        return s;
    }

    void validate() const {
        if (base_mva <= 0.0) throw ValidationError("base_mva must be positive");
        for (const auto& b : buses) {
            if (b.id < 0 || b.id >= n_bus())
                throw ValidationError("bus canonical id out of range");
            if (buses[static_cast<size_t>(b.id)].id != b.id)
                throw ValidationError("bus canonical ids are not dense");
            if (!(b.v_min < b.v_max))
                throw ValidationError("bus " + std::to_string(b.external_id) +
                                      ": v_min must be below v_max");
            if (b.base_kv <= 0.0)
                throw ValidationError("bus " + std::to_string(b.external_id) +
                                      ": base_kv must be positive");
        }
        std::set<int> ext;
        for (const auto& b : buses)
            if (!ext.insert(b.external_id).second)
                throw ValidationError("duplicate bus id " +
                                      std::to_string(b.external_id));
        for (size_t k = 0; k < branches.size(); ++k) {
            const auto& br = branches[k];
            if (br.from_bus < 0 || br.from_bus >= n_bus() || br.to_bus < 0 ||
                br.to_bus >= n_bus())
                throw ValidationError("branch " + std::to_string(k) +
                                      ": endpoint references unknown bus");
            if (br.r == 0.0 && br.x == 0.0)
                throw ValidationError("branch " + std::to_string(k) +
                                      ": null impedance");
            if (br.rate_mva < 0.0)
                throw ValidationError("branch " + std::to_string(k) +
                                      ": negative rating");
            if (br.tap <= 0.0)
                throw ValidationError("branch " + std::to_string(k) +
                                      ": tap must be positive");
        }
        for (const auto& g : generators) {
            if (g.bus < 0 || g.bus >= n_bus())
                throw ValidationError("generator references unknown bus");
            if (g.p_min_mw > g.p_max_mw)
                throw ValidationError("generator p_min above p_max");
            if (g.q_min_mvar > g.q_max_mvar)
                throw ValidationError("generator q_min above q_max");
        }
        int slacks = 0;
        for (const auto& b : buses)
            if (b.kind == BusKind::Slack) ++slacks;
        if (slacks != 1)
            throw ValidationError("expected exactly one slack bus, found " +
                                  std::to_string(slacks));
    }
};

/// Canonical ids of PQ buses carrying load; the usual target set for a
/// uniform load-altering attack.
inline std::vector<int> pq_load_buses(const Network& net) {
    std::vector<int> out;
    for (const auto& b : net.buses)
        if (b.kind == BusKind::PQ && b.p_load_mw > 0.0) out.push_back(b.id);
    return out;
}

/// Returns a copy with loads on `targets` multiplied by `factor`. Reactive
/// load scales too unless scale_q is false (constant-power-factor default).
inline Network scale_loads(const Network& net, double factor,
                           const std::vector<int>& targets,
                           bool scale_q = true) {
    if (factor < 0.0) throw ValidationError("scale factor must be >= 0");
    Network out = net;
    for (int id : targets) {
        if (id < 0 || id >= net.n_bus())
            throw ValidationError("scale_loads: unknown target bus " +
                                  std::to_string(id));
        out.buses[static_cast<size_t>(id)].p_load_mw *= factor;
        if (scale_q) out.buses[static_cast<size_t>(id)].q_load_mvar *= factor;
    }
    return out;
}

}  // namespace laasim
