#pragma once

// Scenario execution: build demand, apply the attack, sweep power flows or
// run the cascade, and emit machine-readable reports plus plot-ready
// tables. Everything is deterministic given (config, fixtures, seed).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laasim/attack.hpp"
#include "laasim/cascade.hpp"
#include "laasim/case_parser.hpp"
#include "laasim/demand.hpp"
#include "laasim/powerflow.hpp"
#include "laasim/scenario.hpp"

namespace laasim {

using Json = nlohmann::json;

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a_hex(const std::string& s) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << fnv1a(s);
    return o.str();
}

struct StepSeries {
    std::vector<double> feeder_mw;
    std::vector<double> min_v_pu;
    std::vector<int> min_v_bus;  // canonical
    std::vector<bool> converged;
};

struct RunReport {
    std::string scenario_name;
    std::string mode;
    int timestep_minutes = 15;
    int horizon = 0;
    std::uint32_t seed = 0;
    std::string config_hash;
    std::string case_hash;
    std::string case_path;
    double feeder_limit_mw = 0.0;
    int feeder_branch = -1;

    // distribution mode; attack series empty when no attack is configured
    StepSeries normal;
    StepSeries attack;
    bool has_attack = false;
    Json violations = Json::array();
    std::vector<bool> guard_ok;  // attack run: feeder within limit

    // transmission mode
    bool has_cascade = false;
    CascadeTrace trace;
    std::vector<std::pair<int, int>> branch_ext_ids;  // per branch (from,to)
    std::vector<int> bus_ext_ids;
    double scale_factor = 1.0;

    bool all_converged() const {
        for (bool c : normal.converged)
            if (!c) return false;
        for (bool c : attack.converged)
            if (!c) return false;
        return true;
    }
};

namespace detail {

inline int feeder_branch_of(const Network& net) {
    const int slack = net.slack_bus();
    for (size_t k = 0; k < net.branches.size(); ++k)
        if (net.branches[k].in_service() &&
            (net.branches[k].from_bus == slack ||
             net.branches[k].to_bus == slack))
            return static_cast<int>(k);
    return -1;
}

inline std::vector<double> outdoor_series(const HeatPumpFleetConfig& h,
                                          int horizon, int step_minutes) {
    std::vector<double> out(horizon);
    for (int t = 0; t < horizon; ++t) {
        const double hours = t * step_minutes / 60.0;
        out[t] = h.outdoor_mean_c -
                 h.outdoor_amplitude_c *
                     std::cos(2.0 * std::numbers::pi *
                              (hours - h.outdoor_coldest_hour) / 24.0);
    }
    return out;
}

inline std::vector<int> residential_buses(const Network& net,
                                          const std::set<int>& exclude) {
    std::vector<int> out;
    for (int b : pq_load_buses(net))
        if (!exclude.count(b)) out.push_back(b);
    return out;
}

}  // namespace detail

/// Base + heat pumps + residential EVs + parking lots, before any attack.
/// Returns the composed profile and the plain session list.
inline std::pair<DemandProfile, std::vector<EvSession>> build_demand(
    const ScenarioConfig& cfg, const Network& net) {
    const int nb = net.n_bus();
    const int h = cfg.horizon_steps;
    DemandProfile base(nb, h, cfg.timestep_minutes);
    for (int t = 0; t < h; ++t) {
        const int hour = (t * cfg.timestep_minutes / 60) % 24;
        const double s = cfg.hourly_shape.empty()
                             ? 1.0
                             : cfg.hourly_shape[hour] * cfg.base_scale;
        for (int b = 0; b < nb; ++b) {
            base.p(b, t) = net.buses[b].p_load_mw * s;
            base.q(b, t) = net.buses[b].q_load_mvar * s;
        }
    }

    std::vector<DemandProfile> addends;
    if (cfg.heat_pumps.enabled && cfg.heat_pumps.houses_per_bus > 0) {
        const auto& hp = cfg.heat_pumps;
        auto t_out = detail::outdoor_series(hp, h, cfg.timestep_minutes);
        Rng rng(substream_seed(cfg.seed, 999));
        std::vector<HeatPumpSpec> specs;
        for (int b : detail::residential_buses(net, hp.exclude_buses)) {
            for (int i = 0; i < hp.houses_per_bus; ++i) {
                HeatPumpSpec s;
                s.bus = b;
                s.floor_area_sqft = rng.uniform(1500.0, 2500.0);
                s.t_init_c = rng.uniform(hp.setpoint_low_c, hp.setpoint_high_c);
                s.cop = hp.cop;
                s.setpoint_low_c = hp.setpoint_low_c;
                s.setpoint_high_c = hp.setpoint_high_c;
                s.ua_kw_per_c_sqft = hp.ua_kw_per_c_sqft;
                s.rated_kw = hp.rated_kw;
                s.thermal_capacity_kwh_per_c_sqft =
                    hp.thermal_capacity_kwh_per_c_sqft;
                specs.push_back(s);
            }
        }
        addends.push_back(
            heat_pump_profile(specs, t_out, nb, h, cfg.timestep_minutes));
    }

    std::vector<EvSession> sessions;
    if (cfg.residential_ev.enabled && cfg.residential_ev.per_bus > 0) {
        const auto& r = cfg.residential_ev;
        Rng rng(substream_seed(cfg.seed, 555));
        for (int b : detail::residential_buses(net, r.exclude_buses)) {
            for (int i = 0; i < r.per_bus; ++i) {
                EvSession s;
                s.vehicle_id = static_cast<int>(sessions.size());
                s.bus = b;
                s.arrival = rng.uniform_int(r.arrival_start_step,
                                            r.arrival_end_step);
                s.departure = h;
                s.soc_init = rng.uniform(0.20, 0.30);
                s.battery_kwh = r.battery_kwh;
                s.max_kw = r.charger_kw;
                sessions.push_back(s);
            }
        }
    }
    for (const auto& lot : cfg.lots) {
        if (lot.bus < 0 || lot.bus >= nb)
            throw ConfigError("key 'ev_lot.bus': unknown bus " +
                              std::to_string(lot.bus));
        std::vector<EvSession> ls;
        if (!lot.sessions_csv.empty()) {
            const auto p = cfg.base_dir / lot.sessions_csv;
            ls = load_sessions_csv(p.string(), lot.battery_kwh, lot.charger_kw);
        } else {
            ParkingModel mdl;
            mdl.n_sessions = lot.sessions;
            mdl.arrival_start = lot.arrival_start_step;
            mdl.arrival_end = lot.arrival_end_step;
            mdl.dwell_min = lot.dwell_min_steps;
            mdl.dwell_max = lot.dwell_max_steps;
            mdl.charger_kw = lot.charger_kw;
            mdl.battery_kwh = lot.battery_kwh;
            ls = generate_parking_sessions(substream_seed(cfg.seed, lot.bus),
                                           lot.stations, lot.bus, h, mdl);
        }
        for (auto& s : ls) {
            s.vehicle_id = static_cast<int>(sessions.size());
            sessions.push_back(s);
        }
    }
    if (!sessions.empty())
        addends.push_back(ev_fleet_profile(sessions,
                                           ChargingPolicy::UncontrolledOnArrival,
                                           nb, h, cfg.timestep_minutes));
    return {compose(base, addends), sessions};
}

namespace detail {

inline StepSeries sweep(const Network& base_net, const DemandProfile& prof,
                        int feeder, const SolveOptions& opts) {
    StepSeries out;
    Network net = base_net;
    for (int t = 0; t < prof.horizon; ++t) {
        for (int b = 0; b < net.n_bus(); ++b) {
            net.buses[b].p_load_mw = prof.p(b, t);
            net.buses[b].q_load_mvar = prof.q(b, t);
        }
        auto sol = solve_ac(net, opts);
        out.converged.push_back(sol.converged);
        if (!sol.converged) {
            out.feeder_mw.push_back(std::nan(""));
            out.min_v_pu.push_back(std::nan(""));
            out.min_v_bus.push_back(-1);
            continue;
        }
        double f = 0.0;
        if (feeder >= 0)
            f = std::max(std::abs(sol.p_from[feeder]),
                         std::abs(sol.p_to[feeder]));
        out.feeder_mw.push_back(f);
        int argmin = 0;
        for (int b = 1; b < net.n_bus(); ++b)
            if (sol.v_mag[b] < sol.v_mag[argmin]) argmin = b;
        out.min_v_pu.push_back(sol.v_mag[argmin]);
        out.min_v_bus.push_back(argmin);
    }
    return out;
}

}  // namespace detail

inline RunReport run_scenario(const ScenarioConfig& cfg,
                              const std::string& config_text = "") {
    RunReport rep;
    rep.scenario_name = cfg.name;
    rep.mode = cfg.mode;
    rep.timestep_minutes = cfg.timestep_minutes;
    rep.horizon = cfg.horizon_steps;
    rep.seed = cfg.seed;
    rep.config_hash = fnv1a_hex(config_text);
    rep.case_path = cfg.case_path;

    std::ifstream case_in(cfg.resolved_case_path());
    if (!case_in)
        throw ParseError("cannot open case file " +
                             cfg.resolved_case_path().string(),
                         0, 0);
    std::ostringstream case_ss;
    case_ss << case_in.rdbuf();
    const std::string case_text = case_ss.str();
    rep.case_hash = fnv1a_hex(case_text);
    Network net = parse_case(case_text).network;

    for (const auto& b : net.buses) rep.bus_ext_ids.push_back(b.external_id);
    for (const auto& br : net.branches)
        rep.branch_ext_ids.emplace_back(net.buses[br.from_bus].external_id,
                                        net.buses[br.to_bus].external_id);

    SolveOptions opts;
    if (cfg.mode == "transmission") {
        opts.enforce_q_limits = cfg.transmission.enforce_q_limits;
        rep.has_cascade = true;
        rep.scale_factor = cfg.transmission.scale_factor;

        CascadePolicy policy;
        policy.enforce_island_capacity =
            cfg.transmission.enforce_island_capacity;
        policy.scale_q = cfg.transmission.scale_q;

        const bool noisy_base = base_case_has_overloads(net, opts);

        std::vector<int> targets;
        if (cfg.transmission.scale_targets == "pq_load_buses")
            targets = pq_load_buses(net);
        else if (cfg.transmission.scale_targets == "all_loads") {
            for (const auto& b : net.buses)
                if (b.p_load_mw != 0.0 || b.q_load_mvar != 0.0)
                    targets.push_back(b.id);
        } else
            targets = cfg.transmission.explicit_targets;

        Network attacked = scale_loads(net, cfg.transmission.scale_factor,
                                       targets, cfg.transmission.scale_q);
        rep.trace = cascade(attacked, opts, policy);
        rep.trace.base_case_warning = noisy_base;
        return rep;
    }

    // distribution mode
    opts.enforce_q_limits = true;  // no PV buses in the bundled feeder
    const int feeder = detail::feeder_branch_of(net);
    rep.feeder_branch = feeder;
    rep.feeder_limit_mw = cfg.feeder_limit_mw;

    auto [profile, sessions] = build_demand(cfg, net);
    rep.normal = detail::sweep(net, profile, feeder, opts);

    if (cfg.attack.enabled &&
        cfg.attack.kind == AttackKind::SynchronizedFcdcStart) {
        rep.has_attack = true;
        AttackScenario scn;
        scn.kind = AttackKind::SynchronizedFcdcStart;
        scn.t_attack = cfg.attack.t_attack_step;
        scn.target_buses = cfg.attack.targets;
        scn.actor = cfg.attack.actor;
        auto hit = apply_attack(scn, sessions, cfg.horizon_steps,
                                cfg.timestep_minutes);
        // rebuild the total profile with the attacked sessions
        ScenarioConfig plain = cfg;
        plain.lots.clear();
        plain.residential_ev.enabled = false;
        auto base_only = build_demand(plain, net).first;
        auto ev = ev_fleet_profile(hit, ChargingPolicy::UncontrolledOnArrival,
                                   net.n_bus(), cfg.horizon_steps,
                                   cfg.timestep_minutes);
        auto attacked_profile = compose(base_only, {ev});
        rep.attack = detail::sweep(net, attacked_profile, feeder, opts);

        for (int t = 0; t < cfg.horizon_steps; ++t) {
            const bool conv = rep.attack.converged[t];
            const bool within =
                conv && cfg.feeder_limit_mw > 0.0 &&
                rep.attack.feeder_mw[t] <= cfg.feeder_limit_mw;
            rep.guard_ok.push_back(cfg.feeder_limit_mw > 0.0 ? within : conv);
            if (!conv) {
                rep.violations.push_back(
                    {{"step", t}, {"type", "non_convergence"}});
                continue;
            }
            if (cfg.feeder_limit_mw > 0.0 &&
                rep.attack.feeder_mw[t] > cfg.feeder_limit_mw)
                rep.violations.push_back({{"step", t},
                                          {"type", "feeder_overload"},
                                          {"flow_mw", rep.attack.feeder_mw[t]},
                                          {"limit_mw", cfg.feeder_limit_mw}});
            const int b = rep.attack.min_v_bus[t];
            if (b >= 0 && rep.attack.min_v_pu[t] < net.buses[b].v_min)
                rep.violations.push_back(
                    {{"step", t},
                     {"type", "undervoltage"},
                     {"bus", b},
                     {"bus_ext", net.buses[b].external_id},
                     {"v_pu", rep.attack.min_v_pu[t]},
                     {"v_min", net.buses[b].v_min}});
        }
    }
    return rep;
}

// ---- report serialization -------------------------------------------------

namespace detail {

inline Json series_json(const StepSeries& s) {
    Json j;
    j["feeder_mw"] = s.feeder_mw;
    j["min_v_pu"] = s.min_v_pu;
    j["min_v_bus"] = s.min_v_bus;
    j["converged"] = Json::array();
    for (bool c : s.converged) j["converged"].push_back(c);
    return j;
}

}  // namespace detail

inline Json report_to_json(const RunReport& r) {
    Json j;
    j["schema"] = "laasim-report/1";
    j["scenario"] = r.scenario_name;
    j["mode"] = r.mode;
    j["timestep_minutes"] = r.timestep_minutes;
    j["horizon"] = r.horizon;
    j["provenance"] = {{"seed", r.seed},
                       {"config_fnv1a", r.config_hash},
                       {"case_fnv1a", r.case_hash},
                       {"case_path", r.case_path}};
    if (r.mode == "distribution") {
        j["feeder_branch"] = r.feeder_branch;
        j["feeder_limit_mw"] = r.feeder_limit_mw;
        j["series_normal"] = detail::series_json(r.normal);
        if (r.has_attack) {
            j["series_attack"] = detail::series_json(r.attack);
            j["guard_ok"] = Json::array();
            for (bool g : r.guard_ok) j["guard_ok"].push_back(g);
        }
        j["violations"] = r.violations;
    }
    if (r.has_cascade) {
        Json c;
        c["scale_factor"] = r.scale_factor;
        c["base_case_warning"] = r.trace.base_case_warning;
        c["aborted"] = r.trace.aborted;
        c["rounds"] = Json::array();
        for (size_t i = 0; i < r.trace.rounds.size(); ++i) {
            const auto& rd = r.trace.rounds[i];
            Json jr;
            jr["round"] = i + 1;
            jr["deactivated"] = Json::array();
            for (int k : rd.deactivated)
                jr["deactivated"].push_back(
                    {{"branch", k},
                     {"from_ext", r.branch_ext_ids[k].first},
                     {"to_ext", r.branch_ext_ids[k].second}});
            jr["islands"] = Json::array();
            for (const auto& isl : rd.islands)
                jr["islands"].push_back({{"buses", isl.buses.size()},
                                         {"generators", isl.generators.size()},
                                         {"branches", isl.branches.size()},
                                         {"load_mw", isl.load_mw},
                                         {"alive", isl.has_generation}});
            c["rounds"].push_back(jr);
        }
        c["total_deactivated"] = r.trace.total_deactivated.size();
        c["deactivated_branches"] = Json::array();
        for (int k : r.trace.total_deactivated)
            c["deactivated_branches"].push_back(
                {{"branch", k},
                 {"from_ext", r.branch_ext_ids[k].first},
                 {"to_ext", r.branch_ext_ids[k].second}});
        c["dead_buses"] = Json::array();
        c["dead_buses_ext"] = Json::array();
        for (int b : r.trace.dead_buses) {
            c["dead_buses"].push_back(b);
            c["dead_buses_ext"].push_back(r.bus_ext_ids[b]);
        }
        c["outage_mw"] = r.trace.outage_mw;
        c["served_mw"] = r.trace.served_mw;
        c["original_load_mw"] = r.trace.original_load_mw;
        j["cascade"] = c;
    }
    return j;
}

/// Figure-tagged tabular views of a report. The emitter copies report
/// fields; it computes nothing.
inline std::string emit_plotdata(const Json& report, const std::string& tag) {
    std::ostringstream out;
    out.precision(10);
    auto time_of = [&report](int t) {
        return t * report.at("timestep_minutes").get<int>() / 60.0;
    };
    if (tag == "fig3" || tag == "fig6" || tag == "fig7") {
        if (!report.contains("series_normal"))
            throw ConfigError("report has no feeder series for tag " + tag);
        const auto& n = report.at("series_normal").at("feeder_mw");
        const bool has_attack = report.contains("series_attack");
        out << "time_hours,flow_mw_normal,flow_mw_attack\n";
        for (size_t t = 0; t < n.size(); ++t) {
            out << time_of(static_cast<int>(t)) << ','
                << n[t].get<double>() << ',';
            if (has_attack)
                out << report.at("series_attack").at("feeder_mw")[t]
                           .get<double>();
            out << '\n';
        }
        return out.str();
    }
    if (tag == "fig4") {
        if (!report.contains("series_normal"))
            throw ConfigError("report has no voltage series for tag fig4");
        const auto& n = report.at("series_normal");
        const bool has_attack = report.contains("series_attack");
        out << "time_hours,min_v_normal_pu,min_v_attack_pu\n";
        for (size_t t = 0; t < n.at("min_v_pu").size(); ++t) {
            out << time_of(static_cast<int>(t)) << ','
                << n.at("min_v_pu")[t].get<double>() << ',';
            if (has_attack)
                out << report.at("series_attack").at("min_v_pu")[t]
                           .get<double>();
            out << '\n';
        }
        return out.str();
    }
    if (tag == "fig8") {
        if (!report.contains("cascade"))
            throw ConfigError("report has no cascade for tag fig8");
        out << "round,deactivated_branch_from,deactivated_branch_to\n";
        for (const auto& rd : report.at("cascade").at("rounds"))
            for (const auto& d : rd.at("deactivated"))
                out << rd.at("round").get<int>() << ','
                    << d.at("from_ext").get<int>() << ','
                    << d.at("to_ext").get<int>() << '\n';
        return out.str();
    }
    throw ConfigError("unknown figure tag '" + tag + "'");
}

inline std::string report_csv(const RunReport& r) {
    std::ostringstream out;
    out.precision(10);
    if (r.mode == "distribution") {
        out << "step,time_hours,feeder_mw_normal,min_v_normal_pu,"
               "min_v_normal_bus_ext";
        if (r.has_attack)
            out << ",feeder_mw_attack,min_v_attack_pu,min_v_attack_bus_ext,"
                   "guard_ok";
        out << '\n';
        for (int t = 0; t < r.horizon; ++t) {
            out << t << ',' << t * r.timestep_minutes / 60.0 << ','
                << r.normal.feeder_mw[t] << ',' << r.normal.min_v_pu[t] << ','
                << (r.normal.min_v_bus[t] >= 0
                        ? r.bus_ext_ids[r.normal.min_v_bus[t]]
                        : -1);
            if (r.has_attack) {
                out << ',' << r.attack.feeder_mw[t] << ','
                    << r.attack.min_v_pu[t] << ','
                    << (r.attack.min_v_bus[t] >= 0
                            ? r.bus_ext_ids[r.attack.min_v_bus[t]]
                            : -1)
                    << ',' << (r.guard_ok[t] ? 1 : 0);
            }
            out << '\n';
        }
    } else {
        out << "round,branch,from_ext,to_ext\n";
        for (size_t i = 0; i < r.trace.rounds.size(); ++i)
            for (int k : r.trace.rounds[i].deactivated)
                out << i + 1 << ',' << k << ',' << r.branch_ext_ids[k].first
                    << ',' << r.branch_ext_ids[k].second << '\n';
    }
    return out.str();
}

/// Writes report.json / report.csv and any requested figure tables.
/// LAASIM_OUTDIR overrides the configured directory.
inline std::filesystem::path write_outputs(const RunReport& rep,
                                           const ScenarioConfig& cfg) {
    std::filesystem::path dir = cfg.output_directory;
    if (const char* env = std::getenv("LAASIM_OUTDIR")) dir = env;
    if (!dir.is_absolute()) dir = cfg.base_dir / dir;
    std::filesystem::create_directories(dir);
    const Json j = report_to_json(rep);
    if (cfg.output_formats.count("json")) {
        std::ofstream f(dir / (cfg.name + "_report.json"));
        f << j.dump(2) << '\n';
    }
    if (cfg.output_formats.count("csv")) {
        std::ofstream f(dir / (cfg.name + "_report.csv"));
        f << report_csv(rep);
    }
    for (const auto& tag : cfg.figures) {
        std::ofstream f(dir / (cfg.name + "_" + tag + ".csv"));
        f << emit_plotdata(j, tag);
    }
    return dir;
}

}  // namespace laasim
