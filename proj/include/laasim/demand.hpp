#pragma once

// Per-bus, per-timestep load profiles: base shapes, EV charging sessions
// (residential and FCDC parking lots) and hysteretic heat-pump loads.
// All sampling goes through Rng so identical seeds give identical profiles
// on every platform.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "laasim/network.hpp"

namespace laasim {

/// mt19937 with fixed 32-bit-resolution mappings. std::uniform_* are
/// implementation-defined, so the mappings are spelled out here.
class Rng {
public:
    explicit Rng(std::uint32_t seed) : gen_(seed) {}

    std::uint32_t next_u32() { return gen_(); }

    double uniform(double a, double b) {
        return a + (b - a) * (next_u32() * (1.0 / 4294967296.0));
    }

    /// Inclusive bounds.
    int uniform_int(int lo, int hi) {
        const double span = static_cast<double>(hi) - lo + 1.0;
        return lo + static_cast<int>(next_u32() * (span / 4294967296.0));
    }

private:
    std::mt19937 gen_;
};

/// Derived per-component stream so lot order does not matter.
inline std::uint32_t substream_seed(std::uint32_t seed, int tag) {
    return static_cast<std::uint32_t>(seed * 1000003u +
                                      static_cast<std::uint32_t>(tag) * 7919u);
}

struct EvSession {
    int vehicle_id = 0;
    int bus = 0;  // canonical id
    int arrival = 0;
    int departure = 0;  // exclusive
    double soc_init = 0.2;
    double battery_kwh = 36.0;
    double max_kw = 50.0;
    double target_soc = 1.0;

    double energy_needed_kwh() const {
        return std::max(0.0, (target_soc - soc_init) * battery_kwh);
    }
};

struct HeatPumpSpec {
    int bus = 0;
    double floor_area_sqft = 2000.0;
    double cop = 2.2;
    double setpoint_low_c = 18.0;
    double setpoint_high_c = 24.0;
    double ua_kw_per_c_sqft = 2.5e-4;
    double rated_kw = 6.0;  // electrical cap
    // not part of the published parameter set; defaults documented in README
    double thermal_capacity_kwh_per_c_sqft = 0.0025;
    double t_init_c = 21.0;
};

struct DemandProfile {
    int timestep_minutes = 15;
    int horizon = 0;
    int n_bus = 0;
    std::vector<double> p_mw;    // row-major bus x step
    std::vector<double> q_mvar;

    DemandProfile() = default;
    DemandProfile(int nb, int h, int step_min)
        : timestep_minutes(step_min),
          horizon(h),
          n_bus(nb),
          p_mw(static_cast<size_t>(nb) * h, 0.0),
          q_mvar(static_cast<size_t>(nb) * h, 0.0) {}

    double& p(int bus, int t) { return p_mw[static_cast<size_t>(bus) * horizon + t]; }
    double p(int bus, int t) const { return p_mw[static_cast<size_t>(bus) * horizon + t]; }
    double& q(int bus, int t) { return q_mvar[static_cast<size_t>(bus) * horizon + t]; }
    double q(int bus, int t) const { return q_mvar[static_cast<size_t>(bus) * horizon + t]; }

    double total_p(int t) const {
        double s = 0.0;
        for (int b = 0; b < n_bus; ++b) s += p(b, t);
        return s;
    }

    bool same_shape(const DemandProfile& o) const {
        return n_bus == o.n_bus && horizon == o.horizon &&
               timestep_minutes == o.timestep_minutes;
    }
};

enum class ChargingPolicy { UncontrolledOnArrival };

/// Each EV charges at min(max_kw, remaining energy / timestep) from arrival
/// until it reaches target SOC or departs. Energy accounting is exact: the
/// session never draws past its target.
inline DemandProfile ev_fleet_profile(const std::vector<EvSession>& sessions,
                                      ChargingPolicy /*policy*/, int n_bus,
                                      int horizon, int timestep_minutes) {
    DemandProfile prof(n_bus, horizon, timestep_minutes);
    const double dt_h = timestep_minutes / 60.0;
    for (const auto& s : sessions) {
        if (s.bus < 0 || s.bus >= n_bus)
            throw ValidationError("ev session on unknown bus " +
                                  std::to_string(s.bus));
        double need = s.energy_needed_kwh();
        const int stop = std::min(s.departure, horizon);
        for (int t = std::max(0, s.arrival); t < stop && need > 0.0; ++t) {
            const double e = std::min(s.max_kw * dt_h, need);
            prof.p(s.bus, t) += e / dt_h / 1000.0;  // kW -> MW
            need -= e;
        }
    }
    return prof;
}

struct ParkingModel {
    int n_sessions = 0;
    int arrival_start = 0;   // step
    int arrival_end = 0;     // step, inclusive
    int dwell_min = 4;       // steps
    int dwell_max = 12;
    double charger_kw = 50.0;
    double battery_kwh = 36.0;
    double soc_lo = 0.20;
    double soc_hi = 0.30;
};

/// Seeded synthetic commercial-lot sessions: arrivals uniform over the
/// window, dwell uniform, initial SOC uniform in [soc_lo, soc_hi]. Arrivals
/// that find every station busy leave (so concurrency never exceeds the
/// station count). Stand-in for unavailable observed parking data; a CSV
/// ingestion path with the same schema exists alongside.
inline std::vector<EvSession> generate_parking_sessions(std::uint32_t seed,
                                                        int n_stations,
                                                        int bus, int horizon,
                                                        const ParkingModel& mdl) {
    if (n_stations < 1)
        throw ValidationError("parking lot needs at least one station");
    Rng rng(seed);
    struct Raw {
        int arrival, order, departure;
        double soc;
    };
    std::vector<Raw> raw;
    raw.reserve(mdl.n_sessions);
    for (int i = 0; i < mdl.n_sessions; ++i) {
        Raw r;
        r.arrival = rng.uniform_int(mdl.arrival_start, mdl.arrival_end);
        r.departure = std::min(r.arrival + rng.uniform_int(mdl.dwell_min,
                                                           mdl.dwell_max),
                               horizon);
        r.soc = rng.uniform(mdl.soc_lo, mdl.soc_hi);
        r.order = i;
        raw.push_back(r);
    }
    std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
        return a.arrival != b.arrival ? a.arrival < b.arrival
                                      : a.order < b.order;
    });
    std::vector<int> free_at(n_stations, 0);
    std::vector<EvSession> out;
    for (const auto& r : raw) {
        int k = 0;
        for (int j = 1; j < n_stations; ++j)
            if (free_at[j] < free_at[k]) k = j;
        if (free_at[k] > r.arrival) continue;  // lot full
        free_at[k] = r.departure;
        EvSession s;
        s.vehicle_id = static_cast<int>(out.size());
        s.bus = bus;
        s.arrival = r.arrival;
        s.departure = r.departure;
        s.soc_init = r.soc;
        s.battery_kwh = mdl.battery_kwh;
        s.max_kw = mdl.charger_kw;
        out.push_back(s);
    }
    return out;
}

/// First-order equivalent-thermal-parameter house with a hysteretic
/// thermostat: the pump runs flat out below setpoint_low, off above
/// setpoint_high. Electrical draw is rated_kw while running.
inline DemandProfile heat_pump_profile(const std::vector<HeatPumpSpec>& specs,
                                       const std::vector<double>& outdoor_c,
                                       int n_bus, int horizon,
                                       int timestep_minutes) {
    if (static_cast<int>(outdoor_c.size()) < horizon)
        throw ValidationError("outdoor temperature series shorter than horizon");
    DemandProfile prof(n_bus, horizon, timestep_minutes);
    const double dt_h = timestep_minutes / 60.0;
    for (const auto& hp : specs) {
        if (hp.bus < 0 || hp.bus >= n_bus)
            throw ValidationError("heat pump on unknown bus " +
                                  std::to_string(hp.bus));
        double t_in = hp.t_init_c;
        bool on = false;
        const double ua = hp.ua_kw_per_c_sqft * hp.floor_area_sqft;  // kW/degC
        const double cap =
            hp.thermal_capacity_kwh_per_c_sqft * hp.floor_area_sqft;
        for (int t = 0; t < horizon; ++t) {
            if (t_in < hp.setpoint_low_c) on = true;
            else if (t_in > hp.setpoint_high_c) on = false;
            const double q_thermal = on ? hp.rated_kw * hp.cop : 0.0;
            if (on) prof.p(hp.bus, t) += hp.rated_kw / 1000.0;
            const double dq = ua * (outdoor_c[t] - t_in) + q_thermal;
            t_in += dq * dt_h / cap;
        }
    }
    return prof;
}

/// Elementwise sum; shapes must match.
inline DemandProfile compose(const DemandProfile& base,
                             const std::vector<DemandProfile>& addends) {
    DemandProfile out = base;
    for (const auto& a : addends) {
        if (!out.same_shape(a))
            throw ValidationError("compose: profile dimensions differ");
        for (size_t i = 0; i < out.p_mw.size(); ++i) {
            out.p_mw[i] += a.p_mw[i];
            out.q_mvar[i] += a.q_mvar[i];
        }
    }
    return out;
}

/// CSV schema: vehicle_id,bus,arrival_step,departure_step,soc_init
inline std::vector<EvSession> load_sessions_csv(const std::string& path,
                                                double battery_kwh,
                                                double max_kw) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open sessions csv " + path);
    std::vector<EvSession> out;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find("vehicle_id") != std::string::npos) continue;
        }
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 5)
            throw ValidationError("sessions csv line " +
                                  std::to_string(lineno) +
                                  ": expected 5 columns");
        EvSession s;
        try {
            s.vehicle_id = std::stoi(cols[0]);
            s.bus = std::stoi(cols[1]);
            s.arrival = std::stoi(cols[2]);
            s.departure = std::stoi(cols[3]);
            s.soc_init = std::stod(cols[4]);
        } catch (const std::exception&) {
            throw ValidationError("sessions csv line " +
                                  std::to_string(lineno) + ": bad value");
        }
        s.battery_kwh = battery_kwh;
        s.max_kw = max_kw;
        if (s.arrival >= s.departure)
            throw ValidationError("sessions csv line " +
                                  std::to_string(lineno) +
                                  ": arrival must precede departure");
        out.push_back(s);
    }
    return out;
}

inline std::string sessions_to_csv(const std::vector<EvSession>& sessions) {
    std::ostringstream out;
    out << "vehicle_id,bus,arrival_step,departure_step,soc_init\n";
    out.precision(17);
    for (const auto& s : sessions)
        out << s.vehicle_id << ',' << s.bus << ',' << s.arrival << ','
            << s.departure << ',' << s.soc_init << '\n';
    return out.str();
}

}  // namespace laasim
