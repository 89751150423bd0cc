#pragma once

// Scenario files: a line-oriented key/value format with [sections].
// '#' starts a comment. Unknown sections or keys are rejected, every value
// is validated before any computation runs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "laasim/attack.hpp"
#include "laasim/network.hpp"

namespace laasim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvLotConfig {
    int bus = -1;
    int stations = 0;
    int sessions = 0;
    double charger_kw = 50.0;
    double battery_kwh = 36.0;
    int arrival_start_step = 0;
    int arrival_end_step = 0;
    int dwell_min_steps = 4;
    int dwell_max_steps = 12;
    std::string sessions_csv;  // optional replacement for the generator
};

struct HeatPumpFleetConfig {
    bool enabled = false;
    int houses_per_bus = 0;
    std::set<int> exclude_buses;
    double cop = 2.2;
    double setpoint_low_c = 18.0;
    double setpoint_high_c = 24.0;
    double ua_kw_per_c_sqft = 2.5e-4;
    double rated_kw = 6.0;
    double thermal_capacity_kwh_per_c_sqft = 2.5e-3;
    double outdoor_mean_c = 2.0;
    double outdoor_amplitude_c = 4.0;
    double outdoor_coldest_hour = 4.0;
};

struct ResidentialEvConfig {
    bool enabled = false;
    int per_bus = 0;
    std::set<int> exclude_buses;
    double charger_kw = 11.0;
    double battery_kwh = 36.0;
    int arrival_start_step = 0;
    int arrival_end_step = 0;
};

struct AttackConfig {
    bool enabled = false;
    AttackKind kind = AttackKind::SynchronizedFcdcStart;
    int t_attack_step = 0;
    std::set<int> targets;
    double factor = 1.0;
    bool scale_q = true;
    CompromisedActor actor = CompromisedActor::EvBotnet;
};

struct TransmissionConfig {
    double scale_factor = 1.0;
    std::string scale_targets = "pq_load_buses";  // or "all_loads" / id list
    std::vector<int> explicit_targets;
    bool scale_q = true;
    bool enforce_q_limits = false;
    bool enforce_island_capacity = false;
};

struct ScenarioConfig {
    std::string name;
    std::string mode;  // "distribution" | "transmission"
    std::string case_path;
    int timestep_minutes = 15;
    int horizon_steps = 96;
    std::uint32_t seed = 0;
    std::vector<double> hourly_shape;  // 24 entries
    double base_scale = 1.0;
    HeatPumpFleetConfig heat_pumps;
    ResidentialEvConfig residential_ev;
    std::vector<EvLotConfig> lots;
    AttackConfig attack;
    double feeder_limit_mw = 0.0;  // 0 = no feeder screening
    TransmissionConfig transmission;
    std::string output_directory = "out";
    std::set<std::string> output_formats{"csv", "json"};
    std::vector<std::string> figures;
    std::filesystem::path base_dir;  // directory of the scenario file

    std::filesystem::path resolved_case_path() const {
        std::filesystem::path p(case_path);
        return p.is_absolute() ? p : base_dir / p;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        size_t idx = 0;
        double d = std::stod(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v +
                          "'");
    }
}

inline int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != static_cast<long long>(d))
        throw ConfigError("key '" + key + "': expected an integer");
    return static_cast<int>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false");
}

inline std::vector<std::string> split_ws(const std::string& v) {
    std::istringstream ss(v);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline std::set<int> to_int_set(const std::string& key, const std::string& v) {
    std::set<int> out;
    for (const auto& t : split_ws(v)) out.insert(to_int(key, t));
    return out;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text,
                                     const std::filesystem::path& base_dir) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    using detail::to_int_set;
    using detail::trim;

    ScenarioConfig cfg;
    cfg.base_dir = base_dir;
    std::istringstream in(text);
    std::string line;
    std::string section;
    EvLotConfig* lot = nullptr;
    int lineno = 0;

    static const std::set<std::string> known_sections{
        "scenario",       "base",   "heat_pumps", "residential_ev",
        "ev_lot",         "attack", "limits",     "transmission",
        "outputs"};

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw ConfigError("unknown section '" + section + "'");
            if (section == "ev_lot") {
                cfg.lots.emplace_back();
                lot = &cfg.lots.back();
            }
            if (section == "heat_pumps") cfg.heat_pumps.enabled = true;
            if (section == "residential_ev") cfg.residential_ev.enabled = true;
            if (section == "attack") cfg.attack.enabled = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string qkey = section + "." + key;

        if (section == "scenario") {
            if (key == "name") cfg.name = val;
            else if (key == "mode") cfg.mode = val;
            else if (key == "case") cfg.case_path = val;
            else if (key == "timestep_minutes") cfg.timestep_minutes = to_int(qkey, val);
            else if (key == "horizon_steps") cfg.horizon_steps = to_int(qkey, val);
            else if (key == "seed") cfg.seed = static_cast<std::uint32_t>(to_double(qkey, val));
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "base") {
            if (key == "hourly_shape") {
                for (const auto& t : detail::split_ws(val))
                    cfg.hourly_shape.push_back(to_double(qkey, t));
            } else if (key == "scale") {
                cfg.base_scale = to_double(qkey, val);
            } else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "heat_pumps") {
            auto& h = cfg.heat_pumps;
            if (key == "houses_per_bus") h.houses_per_bus = to_int(qkey, val);
            else if (key == "exclude_buses") h.exclude_buses = to_int_set(qkey, val);
            else if (key == "cop") h.cop = to_double(qkey, val);
            else if (key == "setpoint_low_c") h.setpoint_low_c = to_double(qkey, val);
            else if (key == "setpoint_high_c") h.setpoint_high_c = to_double(qkey, val);
            else if (key == "ua_kw_per_c_sqft") h.ua_kw_per_c_sqft = to_double(qkey, val);
            else if (key == "rated_kw") h.rated_kw = to_double(qkey, val);
            else if (key == "thermal_capacity_kwh_per_c_sqft")
                h.thermal_capacity_kwh_per_c_sqft = to_double(qkey, val);
            else if (key == "outdoor_mean_c") h.outdoor_mean_c = to_double(qkey, val);
            else if (key == "outdoor_amplitude_c") h.outdoor_amplitude_c = to_double(qkey, val);
            else if (key == "outdoor_coldest_hour") h.outdoor_coldest_hour = to_double(qkey, val);
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "residential_ev") {
            auto& r = cfg.residential_ev;
            if (key == "per_bus") r.per_bus = to_int(qkey, val);
            else if (key == "exclude_buses") r.exclude_buses = to_int_set(qkey, val);
            else if (key == "charger_kw") r.charger_kw = to_double(qkey, val);
            else if (key == "battery_kwh") r.battery_kwh = to_double(qkey, val);
            else if (key == "arrival_start_step") r.arrival_start_step = to_int(qkey, val);
            else if (key == "arrival_end_step") r.arrival_end_step = to_int(qkey, val);
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "ev_lot") {
            if (!lot) throw ConfigError("ev_lot keys outside an [ev_lot] section");
            if (key == "bus") lot->bus = to_int(qkey, val);
            else if (key == "stations") lot->stations = to_int(qkey, val);
            else if (key == "sessions") lot->sessions = to_int(qkey, val);
            else if (key == "charger_kw") lot->charger_kw = to_double(qkey, val);
            else if (key == "battery_kwh") lot->battery_kwh = to_double(qkey, val);
            else if (key == "arrival_start_step") lot->arrival_start_step = to_int(qkey, val);
            else if (key == "arrival_end_step") lot->arrival_end_step = to_int(qkey, val);
            else if (key == "dwell_min_steps") lot->dwell_min_steps = to_int(qkey, val);
            else if (key == "dwell_max_steps") lot->dwell_max_steps = to_int(qkey, val);
            else if (key == "sessions_csv") lot->sessions_csv = val;
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "attack") {
            auto& a = cfg.attack;
            if (key == "kind") {
                if (val == "synchronized_fcdc_start") a.kind = AttackKind::SynchronizedFcdcStart;
                else if (val == "uniform_load_scale") a.kind = AttackKind::UniformLoadScale;
                else if (val == "none") a.enabled = false;
                else throw ConfigError("key 'attack.kind': unknown kind '" + val + "'");
            } else if (key == "t_attack_step") a.t_attack_step = to_int(qkey, val);
            else if (key == "targets") a.targets = to_int_set(qkey, val);
            else if (key == "factor") a.factor = to_double(qkey, val);
            else if (key == "scale_q") a.scale_q = to_bool(qkey, val);
            else if (key == "actor") {
                if (val == "ev_botnet") a.actor = CompromisedActor::EvBotnet;
                else if (val == "charging_station") a.actor = CompromisedActor::ChargingStation;
                else if (val == "cpo") a.actor = CompromisedActor::Cpo;
                else if (val == "msp") a.actor = CompromisedActor::Msp;
                else throw ConfigError("key 'attack.actor': unknown actor '" + val + "'");
            } else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "limits") {
            if (key == "feeder_limit_mw") cfg.feeder_limit_mw = to_double(qkey, val);
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "transmission") {
            auto& t = cfg.transmission;
            if (key == "scale_factor") t.scale_factor = to_double(qkey, val);
            else if (key == "scale_targets") {
                if (val == "pq_load_buses" || val == "all_loads") {
                    t.scale_targets = val;
                } else {
                    t.scale_targets = "explicit";
                    for (const auto& tok : detail::split_ws(val))
                        t.explicit_targets.push_back(to_int(qkey, tok));
                }
            } else if (key == "scale_q") t.scale_q = to_bool(qkey, val);
            else if (key == "enforce_q_limits") t.enforce_q_limits = to_bool(qkey, val);
            else if (key == "enforce_island_capacity")
                t.enforce_island_capacity = to_bool(qkey, val);
            else throw ConfigError("unknown key '" + qkey + "'");
        } else if (section == "outputs") {
            if (key == "directory") cfg.output_directory = val;
            else if (key == "formats") {
                cfg.output_formats.clear();
                for (const auto& t : detail::split_ws(val)) {
                    if (t != "csv" && t != "json")
                        throw ConfigError("key 'outputs.formats': unknown format '" + t + "'");
                    cfg.output_formats.insert(t);
                }
            } else if (key == "figures") {
                cfg.figures = detail::split_ws(val);
            } else throw ConfigError("unknown key '" + qkey + "'");
        } else {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": key outside any section");
        }
    }

    // cross-field validation
    if (cfg.name.empty()) throw ConfigError("missing key 'scenario.name'");
    if (cfg.mode != "distribution" && cfg.mode != "transmission")
        throw ConfigError("key 'scenario.mode' must be distribution or transmission");
    if (cfg.case_path.empty()) throw ConfigError("missing key 'scenario.case'");
    if (cfg.timestep_minutes <= 0 || 60 % cfg.timestep_minutes != 0)
        throw ConfigError("key 'scenario.timestep_minutes' must divide 60");
    if (cfg.horizon_steps < 1)
        throw ConfigError("key 'scenario.horizon_steps' must be positive");
    if (cfg.mode == "distribution") {
        if (cfg.hourly_shape.empty())
            throw ConfigError("missing key 'base.hourly_shape'");
        if (cfg.hourly_shape.size() != 24)
            throw ConfigError("key 'base.hourly_shape' needs exactly 24 values");
        for (double v : cfg.hourly_shape)
            if (v < 0.0) throw ConfigError("key 'base.hourly_shape': negative value");
    }
    if (cfg.base_scale < 0.0) throw ConfigError("key 'base.scale' must be >= 0");
    if (cfg.heat_pumps.enabled) {
        const auto& h = cfg.heat_pumps;
        if (h.houses_per_bus < 0)
            throw ConfigError("key 'heat_pumps.houses_per_bus' must be >= 0");
        if (!(h.setpoint_low_c < h.setpoint_high_c))
            throw ConfigError("key 'heat_pumps.setpoint_low_c' must be below setpoint_high_c");
        if (h.cop <= 1.0) throw ConfigError("key 'heat_pumps.cop' must exceed 1");
        if (h.ua_kw_per_c_sqft <= 0.0)
            throw ConfigError("key 'heat_pumps.ua_kw_per_c_sqft' must be positive");
        if (h.rated_kw <= 0.0)
            throw ConfigError("key 'heat_pumps.rated_kw' must be positive");
    }
    std::set<int> lot_buses;
    for (const auto& l : cfg.lots)
        if (l.bus >= 0 && !lot_buses.insert(l.bus).second)
            throw ConfigError("key 'ev_lot.bus': duplicate lot at bus " +
                              std::to_string(l.bus));
    for (const auto& l : cfg.lots) {
        if (l.bus < 0) throw ConfigError("key 'ev_lot.bus' is required");
        if (l.stations < 1) throw ConfigError("key 'ev_lot.stations' must be >= 1");
        if (l.sessions_csv.empty()) {
            if (l.sessions < 0) throw ConfigError("key 'ev_lot.sessions' must be >= 0");
            if (l.arrival_end_step < l.arrival_start_step)
                throw ConfigError("key 'ev_lot.arrival_end_step' precedes arrival_start_step");
            if (l.dwell_min_steps < 1 || l.dwell_max_steps < l.dwell_min_steps)
                throw ConfigError("key 'ev_lot.dwell_min_steps'/'dwell_max_steps' invalid");
            if (l.arrival_end_step >= cfg.horizon_steps)
                throw ConfigError("key 'ev_lot.arrival_end_step' outside horizon");
        }
        if (l.charger_kw <= 0.0) throw ConfigError("key 'ev_lot.charger_kw' must be positive");
    }
    if (cfg.residential_ev.enabled) {
        const auto& r = cfg.residential_ev;
        if (r.per_bus < 0) throw ConfigError("key 'residential_ev.per_bus' must be >= 0");
        if (r.arrival_end_step < r.arrival_start_step ||
            r.arrival_end_step >= cfg.horizon_steps)
            throw ConfigError("key 'residential_ev.arrival_end_step' invalid");
    }
    if (cfg.attack.enabled) {
        const auto& a = cfg.attack;
        if (a.kind == AttackKind::SynchronizedFcdcStart &&
            (a.t_attack_step < 0 || a.t_attack_step >= cfg.horizon_steps))
            throw ConfigError("key 'attack.t_attack_step' outside horizon");
        if (a.kind == AttackKind::UniformLoadScale && a.factor < 0.0)
            throw ConfigError("key 'attack.factor' must be >= 0");
    }
    if (cfg.mode == "transmission" && cfg.transmission.scale_factor < 0.0)
        throw ConfigError("key 'transmission.scale_factor' must be >= 0");
    if (cfg.feeder_limit_mw < 0.0)
        throw ConfigError("key 'limits.feeder_limit_mw' must be >= 0");
    return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(),
                          std::filesystem::path(path).parent_path());
}

}  // namespace laasim
