#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "afe/analysis.hpp"
#include "afe/control.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/observer.hpp"
#include "afe/robustness.hpp"
#include "afe/sim.hpp"

namespace afe::io {

using json = nlohmann::ordered_json;

/// Fixed 12-significant-digit scientific text used in every CSV and table.
[[nodiscard]] inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

/// Step change of the grid-voltage deviation at t_on.
struct StepDisturbance {
    double t_on = 0.0;
    double v_gd = 0.0;
    double v_gq = 0.0;
};

struct SimSettings {
    SimMode mode = SimMode::linear;
    std::optional<double> dt;
    double t_end = 0.05;
    State x0{0.0, 0.0, 10.0};
    State x_hat0{0.0, 0.0, 0.0};
    std::size_t decimation = 10;
    GainProvenance framework = GainProvenance::frequency_domain;
    std::optional<StepDisturbance> disturbance;
    TimeWindow fit_window{0.005, 0.05};
};

struct SweepSettings {
    SweepOptions options;
    GainProvenance framework = GainProvenance::state_space;
};

/// Everything a configuration file can carry, with defaults applied.
struct RunConfig {
    SystemSpecs specs;
    std::optional<PoleSpec> poles;          ///< unset: current pair at -w_i, voltage pole at -w_v
    std::optional<PoleSpec> observer_poles; ///< unset: controller poles scaled by observer_scale
    double observer_scale = 10.0;
    std::optional<std::array<double, 3>> measurement; ///< output row C; unset: v_dc only
    SweepSettings sweep;
    SimSettings sim;
    std::vector<std::string> warnings;

    [[nodiscard]] PoleSpec controller_poles() const { return poles ? *poles : PoleSpec::from_bandwidths(specs); }
    [[nodiscard]] PoleSpec estimator_poles() const {
        return observer_poles ? *observer_poles : controller_poles().scaled(observer_scale);
    }
};

namespace detail {

inline const std::vector<std::string>& spec_keys() {
    static const std::vector<std::string> keys{"v_g",  "v_dc", "p_rated", "r_load", "f_sw", "f_0",
                                               "l_in", "c_dc", "r_s",     "f_i",    "f_v",  "m_cm"};
    return keys;
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number())
        throw ConfigError(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw ConfigError(where + ": value is not finite");
    return d;
}

inline bool boolean(const json& v, const std::string& where) {
    if (!v.is_boolean())
        throw ConfigError(where + ": expected true or false");
    return v.get<bool>();
}

inline std::size_t count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw ConfigError(where + ": expected a positive integer");
    return static_cast<std::size_t>(v.get<long long>());
}

inline std::array<double, 3> triple(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3)
        throw ConfigError(where + ": expected an array of three numbers");
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]"), number(v[2], where + "[2]")};
}

inline void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

inline GainProvenance framework(const json& v, const std::string& where) {
    if (!v.is_string())
        throw ConfigError(where + ": expected \"ss\" or \"fd\"");
    const auto s = v.get<std::string>();
    if (s == "ss")
        return GainProvenance::state_space;
    if (s == "fd")
        return GainProvenance::frequency_domain;
    throw ConfigError(where + ": expected \"ss\" or \"fd\", got \"" + s + "\"");
}

/// Poles as an array whose entries are real numbers, [re, im] pairs or {"re": .., "im": ..} objects [rad/s].
inline PoleSpec pole_list(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty())
        throw InvalidPoleSpec(where + ": expected a non-empty array of poles");
    std::vector<Eigenvalue> poles;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& e = v[i];
        const std::string at = where + "[" + std::to_string(i) + "]";
        if (e.is_number()) {
            poles.emplace_back(number(e, at), 0.0);
        } else if (e.is_array() && e.size() == 2) {
            poles.emplace_back(number(e[0], at + "[0]"), number(e[1], at + "[1]"));
        } else if (e.is_object()) {
            only_keys(e, at, {"re", "im"});
            if (!e.contains("re"))
                throw InvalidPoleSpec(at + ": missing 're'");
            poles.emplace_back(number(e["re"], at + ".re"), e.contains("im") ? number(e["im"], at + ".im") : 0.0);
        } else {
            throw InvalidPoleSpec(at + ": expected a number, [re, im] or {\"re\", \"im\"}");
        }
    }
    return PoleSpec(poles);
}

inline SimMode sim_mode(const json& v) {
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "linear")
        return SimMode::linear;
    if (s == "nonlinear")
        return SimMode::nonlinear;
    if (s == "observer_in_loop")
        return SimMode::observer_in_loop;
    throw ConfigError("sim.mode: expected \"linear\", \"nonlinear\" or \"observer_in_loop\"");
}

inline void read_sweep(const json& j, SweepSettings& out) {
    only_keys(j, "sweep", {"l_min", "l_max", "r_min", "r_max", "l_points", "r_points", "points", "freeze_operating_point",
                           "framework"});
    auto& o = out.options;
    if (j.contains("l_min"))
        o.l_min = number(j["l_min"], "sweep.l_min");
    if (j.contains("l_max"))
        o.l_max = number(j["l_max"], "sweep.l_max");
    if (j.contains("r_min"))
        o.r_min = number(j["r_min"], "sweep.r_min");
    if (j.contains("r_max"))
        o.r_max = number(j["r_max"], "sweep.r_max");
    if (j.contains("points"))
        o.l_points = o.r_points = count(j["points"], "sweep.points");
    if (j.contains("l_points"))
        o.l_points = count(j["l_points"], "sweep.l_points");
    if (j.contains("r_points"))
        o.r_points = count(j["r_points"], "sweep.r_points");
    if (j.contains("freeze_operating_point"))
        o.freeze_operating_point = boolean(j["freeze_operating_point"], "sweep.freeze_operating_point");
    if (j.contains("framework"))
        out.framework = framework(j["framework"], "sweep.framework");
}

inline void read_sim(const json& j, SimSettings& out) {
    only_keys(j, "sim", {"mode", "dt", "t_end", "x0", "x_hat0", "decimation", "framework", "disturbance", "fit_window"});
    if (j.contains("mode"))
        out.mode = sim_mode(j["mode"]);
    if (j.contains("dt"))
        out.dt = number(j["dt"], "sim.dt");
    if (j.contains("t_end")) {
        out.t_end = number(j["t_end"], "sim.t_end");
        if (!j.contains("fit_window"))
            out.fit_window.end = out.t_end;
    }
    if (j.contains("x0"))
        out.x0 = triple(j["x0"], "sim.x0");
    if (j.contains("x_hat0"))
        out.x_hat0 = triple(j["x_hat0"], "sim.x_hat0");
    if (j.contains("decimation"))
        out.decimation = count(j["decimation"], "sim.decimation");
    if (j.contains("framework"))
        out.framework = framework(j["framework"], "sim.framework");
    if (j.contains("disturbance")) {
        const auto& d = j["disturbance"];
        only_keys(d, "sim.disturbance", {"t_on", "v_gd", "v_gq"});
        StepDisturbance s;
        if (d.contains("t_on"))
            s.t_on = number(d["t_on"], "sim.disturbance.t_on");
        if (d.contains("v_gd"))
            s.v_gd = number(d["v_gd"], "sim.disturbance.v_gd");
        if (d.contains("v_gq"))
            s.v_gq = number(d["v_gq"], "sim.disturbance.v_gq");
        out.disturbance = s;
    }
    if (j.contains("fit_window")) {
        const auto& w = j["fit_window"];
        if (!w.is_array() || w.size() != 2)
            throw ConfigError("sim.fit_window: expected [begin, end]");
        out.fit_window = {number(w[0], "sim.fit_window[0]"), number(w[1], "sim.fit_window[1]")};
    }
    if (out.dt && !(*out.dt > 0.0))
        throw ConfigError("sim.dt: must be positive");
    if (!(out.t_end > 0.0))
        throw ConfigError("sim.t_end: must be positive");
}

} // namespace detail

/**
 * Build a RunConfig from a parsed JSON document. The physical fields sit at
 * the top level under their SystemSpecs names. Either p_rated or r_load may be
 * left out and is then derived from v_dc; a null r_load (or p_rated = 0 with
 * r_load absent) means no load.
 */
[[nodiscard]] inline RunConfig parse_config(const json& root) {
    if (!root.is_object())
        throw ConfigError("config: top level must be a JSON object");
    if (root.contains("omega_0"))
        throw ConfigError("config: omega_0 is derived from f_0 and must not be given");
    std::set<std::string> allowed(detail::spec_keys().begin(), detail::spec_keys().end());
    allowed.insert({"poles", "observer_poles", "sweep", "sim", "measurement"});
    detail::only_keys(root, "config", allowed);

    RunConfig cfg;
    SystemSpecs& s = cfg.specs;
    struct Field {
        const char* key;
        double* dst;
    };
    const Field required[] = {{"v_g", &s.v_g},   {"v_dc", &s.v_dc}, {"f_sw", &s.f_sw}, {"f_0", &s.f_0},
                              {"l_in", &s.l_in}, {"c_dc", &s.c_dc}, {"r_s", &s.r_s},   {"f_i", &s.f_i},
                              {"f_v", &s.f_v},   {"m_cm", &s.m_cm}};
    for (const auto& f : required) {
        if (!root.contains(f.key))
            throw ConfigError(std::string("config: missing required field '") + f.key + "'");
        *f.dst = detail::number(root[f.key], std::string("config.") + f.key);
    }

    const bool has_p = root.contains("p_rated");
    const bool has_r = root.contains("r_load");
    if (!has_p && !has_r)
        throw ConfigError("config: give p_rated, r_load or both");
    if (has_p)
        s.p_rated = detail::number(root["p_rated"], "config.p_rated");
    if (has_r && root["r_load"].is_null())
        s.r_load = std::numeric_limits<double>::infinity();
    else if (has_r)
        s.r_load = detail::number(root["r_load"], "config.r_load");
    else
        s.r_load = s.p_rated > 0.0 ? s.v_dc * s.v_dc / s.p_rated : std::numeric_limits<double>::infinity();
    if (!has_p)
        s.p_rated = std::isinf(s.r_load) ? 0.0 : s.v_dc * s.v_dc / s.r_load;

    cfg.warnings = validate_specs(s);

    if (root.contains("poles"))
        cfg.poles = detail::pole_list(root["poles"], "poles");
    if (root.contains("observer_poles")) {
        const auto& o = root["observer_poles"];
        if (o.is_object()) {
            detail::only_keys(o, "observer_poles", {"scale"});
            if (!o.contains("scale"))
                throw ConfigError("observer_poles: missing 'scale'");
            cfg.observer_scale = detail::number(o["scale"], "observer_poles.scale");
            if (!(cfg.observer_scale > 0.0))
                throw InvalidPoleSpec("observer_poles.scale: must be positive");
        } else {
            cfg.observer_poles = detail::pole_list(o, "observer_poles");
        }
    }
    if (root.contains("measurement")) {
        const auto& m = root["measurement"];
        detail::only_keys(m, "measurement", {"c"});
        if (!m.contains("c"))
            throw ConfigError("measurement: missing 'c'");
        cfg.measurement = detail::triple(m["c"], "measurement.c");
    }
    if (root.contains("sweep"))
        detail::read_sweep(root["sweep"], cfg.sweep);
    if (root.contains("sim"))
        detail::read_sim(root["sim"], cfg.sim);
    return cfg;
}

[[nodiscard]] inline RunConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config(root);
}

[[nodiscard]] inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Linear model with the configured output row applied.
[[nodiscard]] inline LinearModel configured_model(const RunConfig& cfg, const OperatingPoint& op) {
    LinearModel m = linearize(cfg.specs, op);
    if (cfg.measurement)
        for (std::size_t j = 0; j < 3; ++j)
            m.c(0, j) = (*cfg.measurement)[j];
    return m;
}

/// Grid-voltage disturbance function for the configured step, or an empty function.
[[nodiscard]] inline Disturbance make_disturbance(const std::optional<StepDisturbance>& d) {
    if (!d)
        return {};
    const StepDisturbance s = *d;
    return [s](double t) -> GridVoltage { return t >= s.t_on ? GridVoltage{s.v_gd, s.v_gq} : GridVoltage{0.0, 0.0}; };
}

// ---- JSON views -----------------------------------------------------------

[[nodiscard]] inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline json to_json(const std::vector<Eigenvalue>& ev) {
    json out = json::array();
    for (const auto& e : ev)
        out.push_back(json{{"re", e.real()}, {"im", e.imag()}});
    return out;
}

[[nodiscard]] inline json to_json(const SystemSpecs& s) {
    json j;
    j["v_g"] = s.v_g;
    j["v_dc"] = s.v_dc;
    j["p_rated"] = s.p_rated;
    j["r_load"] = std::isinf(s.r_load) ? json(nullptr) : json(s.r_load);
    j["f_sw"] = s.f_sw;
    j["f_0"] = s.f_0;
    j["l_in"] = s.l_in;
    j["c_dc"] = s.c_dc;
    j["r_s"] = s.r_s;
    j["f_i"] = s.f_i;
    j["f_v"] = s.f_v;
    j["m_cm"] = s.m_cm;
    return j;
}

[[nodiscard]] inline json to_json(const OperatingPoint& op, const SystemSpecs& s) {
    const auto res = operating_point_residuals(s, op);
    json j;
    j["i_gd"] = op.i_gd;
    j["i_gq"] = op.i_gq;
    j["m_d"] = op.m_d;
    j["m_q"] = op.m_q;
    j["v_gd"] = op.v_gd;
    j["v_gq"] = op.v_gq;
    j["v_dc"] = op.v_dc;
    j["v_cm"] = s.v_cm();
    j["modulation_magnitude"] = op.modulation_magnitude();
    j["residuals"] = {{"d_voltage", res[0]}, {"q_voltage", res[1]}, {"dc_power", res[2]}};
    return j;
}

[[nodiscard]] inline json to_json(const LinearModel& m) {
    return json{{"a", to_json(m.a)}, {"b1", to_json(m.b1)}, {"b2", to_json(m.b2)}, {"c", to_json(m.c)}, {"d", to_json(m.d)}};
}

[[nodiscard]] inline json to_json(const StructuralReport& r) {
    return json{{"ctrb_rank", r.ctrb_rank},
                {"obsv_rank", r.obsv_rank},
                {"controllable", r.controllable},
                {"observable", r.observable},
                {"ctrb_matrix", to_json(r.ctrb_matrix)},
                {"obsv_matrix", to_json(r.obsv_matrix)}};
}

[[nodiscard]] inline std::string framework_tag(GainProvenance p) {
    return p == GainProvenance::state_space ? "ss" : "fd";
}

[[nodiscard]] inline json to_json(const GainMatrix& g) {
    return json{{"provenance", framework_tag(g.provenance)}, {"k", to_json(g.k)}};
}

[[nodiscard]] inline json to_json(const GainComparison& c) {
    return json{{"relative_difference", to_json(c.relative_difference)},
                {"max_relative_difference", c.max_relative_difference},
                {"worst_entry", {c.worst_row + 1, c.worst_col + 1}}};
}

[[nodiscard]] inline json to_json(const ObserverGain& g) {
    return json{{"l", to_json(g.l)}, {"target_poles", to_json(g.target_poles.poles())}};
}

// ---- CSV ------------------------------------------------------------------

/// Header plus one row per gain matrix: provenance tag then k11..k23 row-major.
[[nodiscard]] inline std::string gains_csv(const std::vector<GainMatrix>& gains) {
    std::string out = "provenance,k11,k12,k13,k21,k22,k23\n";
    for (const auto& g : gains) {
        out += framework_tag(g.provenance);
        for (std::size_t i = 0; i < g.k.rows(); ++i)
            for (std::size_t j = 0; j < g.k.cols(); ++j)
                out += "," + format_number(g.k(i, j));
        out += "\n";
    }
    return out;
}

[[nodiscard]] inline std::string sweep_csv(const SweepGrid& grid) {
    std::string out = "l_scale,r_scale,eig1,eig2,eig3,feasible\n";
    out.reserve(out.size() + grid.cells.size() * 96);
    for (const auto& c : grid.cells) {
        out += format_number(c.l_scale);
        out += ',';
        out += format_number(c.r_scale);
        for (double e : c.eig) {
            out += ',';
            out += c.feasible ? format_number(e) : std::string("nan");
        }
        out += c.feasible ? ",1\n" : ",0\n";
    }
    return out;
}

[[nodiscard]] inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,i_gd,i_gq,v_dc,m_d,m_q";
    if (traj.has_estimates())
        out += ",i_gd_hat,i_gq_hat,v_dc_hat";
    out += '\n';
    out.reserve(out.size() + traj.size() * (traj.has_estimates() ? 160 : 110));
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += format_number(traj.t[i]);
        for (double v : traj.states[i]) {
            out += ',';
            out += format_number(v);
        }
        for (double v : traj.inputs[i]) {
            out += ',';
            out += format_number(v);
        }
        if (traj.has_estimates())
            for (double v : traj.estimates[i]) {
                out += ',';
                out += format_number(v);
            }
        out += '\n';
    }
    return out;
}

} // namespace afe::io
