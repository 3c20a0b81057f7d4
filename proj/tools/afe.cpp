// afe: command-line front end for the AFE rectifier control toolkit.
//
//   afe op-solve  --config cfg.json [--out dir] [--format table|json|csv]
//   afe analyze   --config cfg.json
//   afe design    --config cfg.json [--framework ss|fd|both]
//   afe observer  --config cfg.json
//   afe simulate  --config cfg.json [--mode linear|nonlinear|observer_in_loop] [--framework ss|fd]
//   afe sweep     --config cfg.json [--framework ss|fd] [--strict] [--freeze-op] [--points n]
//
// Exit codes: 0 ok, 1 internal, 2 configuration, 3 infeasible operating point,
// 4 structural (uncontrollable/unobservable), 5 strict sweep with infeasible
// cells, 6 simulation guard.

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "afe/afe.hpp"
#include "afe/io.hpp"

#ifndef AFE_VERSION
#define AFE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using afe::io::json;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = "afe-out";
    std::string format = "table";
    std::string framework;
    std::string mode;
    bool strict = false;
    bool freeze_op = false;
    std::size_t points = 0;
    std::optional<double> t_end;
    std::optional<double> dt;
    std::vector<double> x0;
};

/// What a command produced: files for the output directory plus the three stdout views.
struct Report {
    std::vector<std::pair<std::string, std::string>> files;
    json summary;
    std::string table;
    std::string csv;
    int exit_code = 0;
};

constexpr int exit_internal = 1;
constexpr int exit_config = 2;
constexpr int exit_infeasible = 3;
constexpr int exit_structural = 4;
constexpr int exit_sweep_strict = 5;
constexpr int exit_simulation = 6;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw afe::ConfigError("cannot write '" + path.string() + "'");
    out << content;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_eig(const afe::Eigenvalue& e) {
    if (e.imag() == 0.0)
        return fmt(e.real());
    return fmt(e.real()) + (e.imag() < 0 ? " - " : " + ") + fmt(std::abs(e.imag())) + "j";
}

std::string matrix_table(const afe::Matrix& m, const std::string& indent = "  ") {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += indent;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%16.8e", m(i, j));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string eig_list(const std::vector<afe::Eigenvalue>& ev) {
    std::string out;
    for (const auto& e : ev)
        out += "  " + fmt_eig(e) + " rad/s\n";
    return out;
}

afe::GainProvenance parse_framework(const std::string& s) {
    if (s == "ss")
        return afe::GainProvenance::state_space;
    if (s == "fd")
        return afe::GainProvenance::frequency_domain;
    throw afe::ConfigError("--framework: expected ss or fd, got '" + s + "'");
}

afe::GainMatrix design_gain(afe::GainProvenance which, const afe::io::RunConfig& cfg, const afe::LinearModel& model,
                            const afe::OperatingPoint& op) {
    if (which == afe::GainProvenance::state_space)
        return afe::place_poles(model, cfg.controller_poles());
    return afe::fd_gain_matrix(cfg.specs, op);
}

std::string kv_csv(const std::vector<std::pair<std::string, double>>& rows) {
    std::string out = "quantity,value\n";
    for (const auto& [k, v] : rows)
        out += k + "," + afe::io::format_number(v) + "\n";
    return out;
}

// ---- commands ---------------------------------------------------------------

Report cmd_op_solve(const afe::io::RunConfig& cfg) {
    const auto op = afe::solve_operating_point(cfg.specs);
    const auto res = afe::operating_point_residuals(cfg.specs, op);
    Report r;
    r.summary = {{"specs", afe::io::to_json(cfg.specs)}, {"operating_point", afe::io::to_json(op, cfg.specs)}};
    r.files.emplace_back("operating_point.json", r.summary.dump(2) + "\n");
    r.csv = kv_csv({{"i_gd", op.i_gd},
                    {"i_gq", op.i_gq},
                    {"m_d", op.m_d},
                    {"m_q", op.m_q},
                    {"v_cm", cfg.specs.v_cm()},
                    {"residual_d_voltage", res[0]},
                    {"residual_q_voltage", res[1]},
                    {"residual_dc_power", res[2]}});
    r.table = "Operating point\n"
              "  I_gd  = " + fmt(op.i_gd) + " A\n"
              "  I_gq  = " + fmt(op.i_gq) + " A\n"
              "  M_d   = " + fmt(op.m_d) + "\n"
              "  M_q   = " + fmt(op.m_q) + "\n"
              "  |M|   = " + fmt(op.modulation_magnitude()) + " (limit " + fmt(cfg.specs.m_cm) + ")\n"
              "  V_CM  = " + fmt(cfg.specs.v_cm()) + " V\n"
              "Steady-state residuals (relative)\n"
              "  d-axis voltage balance  " + fmt(res[0]) + "\n"
              "  q-axis voltage balance  " + fmt(res[1]) + "\n"
              "  DC power balance        " + fmt(res[2]) + "\n";
    return r;
}

Report cmd_analyze(const afe::io::RunConfig& cfg) {
    const auto op = afe::solve_operating_point(cfg.specs);
    const auto model = afe::io::configured_model(cfg, op);
    const auto rep = afe::structural_report(model);
    const auto ol = afe::eigenvalues(model.a);
    Report r;
    r.summary = {{"operating_point", afe::io::to_json(op, cfg.specs)},
                 {"model", afe::io::to_json(model)},
                 {"structure", afe::io::to_json(rep)},
                 {"open_loop_eigenvalues", afe::io::to_json(ol)}};
    r.files.emplace_back("analysis.json", r.summary.dump(2) + "\n");
    r.csv = kv_csv({{"ctrb_rank", static_cast<double>(rep.ctrb_rank)}, {"obsv_rank", static_cast<double>(rep.obsv_rank)}});
    r.table = "Small-signal model\n  A =\n" + matrix_table(model.a, "    ") + "  B1 =\n" + matrix_table(model.b1, "    ") +
              "  B2 =\n" + matrix_table(model.b2, "    ") + "  C =\n" + matrix_table(model.c, "    ") +
              "Structure\n  controllability rank " + std::to_string(rep.ctrb_rank) + " of 3" +
              (rep.controllable ? "" : "  (NOT controllable)") + "\n  observability rank   " +
              std::to_string(rep.obsv_rank) + " of 3" + (rep.observable ? "" : "  (NOT observable)") +
              "\nOpen-loop eigenvalues\n" + eig_list(ol);
    return r;
}

Report cmd_design(const afe::io::RunConfig& cfg, const Options& opt) {
    const std::string which = opt.framework.empty() ? "both" : opt.framework;
    if (which != "ss" && which != "fd" && which != "both")
        throw afe::ConfigError("--framework: expected ss, fd or both, got '" + which + "'");
    const auto op = afe::solve_operating_point(cfg.specs);
    const auto model = afe::io::configured_model(cfg, op);
    const auto targets = cfg.controller_poles();

    std::vector<afe::GainMatrix> gains;
    if (which != "fd")
        gains.push_back(afe::place_poles(model, targets));
    if (which != "ss")
        gains.push_back(afe::fd_gain_matrix(cfg.specs, op));

    Report r;
    r.summary["target_poles"] = afe::io::to_json(targets.poles());
    r.summary["gains"] = json::array();
    r.table = "Target poles\n" + eig_list(targets.poles());
    for (const auto& g : gains) {
        const auto ev = afe::eigenvalues(afe::closed_loop_matrix(model, g.k));
        json entry = afe::io::to_json(g);
        entry["closed_loop_eigenvalues"] = afe::io::to_json(ev);
        entry["max_pole_relative_error"] = afe::eigenvalue_set_mismatch(ev, targets.poles());
        r.summary["gains"].push_back(entry);
        r.table += std::string("\nK (") + afe::to_string(g.provenance) + ")\n" + matrix_table(g.k) +
                   "Closed-loop eigenvalues\n" + eig_list(ev) + "  max relative error to targets " +
                   fmt(entry["max_pole_relative_error"].get<double>()) + "\n";
    }
    if (gains.size() == 2) {
        const auto cmp = afe::compare_gains(gains[0], gains[1]);
        const auto ev_ss = afe::eigenvalues(afe::closed_loop_matrix(model, gains[0].k));
        const auto ev_fd = afe::eigenvalues(afe::closed_loop_matrix(model, gains[1].k));
        r.summary["comparison"] = afe::io::to_json(cmp);
        r.summary["comparison"]["eigenvalue_set_difference"] = afe::eigenvalue_set_mismatch(ev_fd, ev_ss);
        r.table += "\nPer-entry relative difference |K_ss - K_fd| / max(|K_ss|, |K_fd|)\n" +
                   matrix_table(cmp.relative_difference) + "  max " + fmt(cmp.max_relative_difference) + " at k" +
                   std::to_string(cmp.worst_row + 1) + std::to_string(cmp.worst_col + 1) + "\n";
    }
    r.csv = afe::io::gains_csv(gains);
    r.files.emplace_back("gains.csv", r.csv);
    r.files.emplace_back("gains.json", r.summary.dump(2) + "\n");
    return r;
}

json decay_fit_json(const afe::Trajectory& traj, afe::Channel ch, afe::TimeWindow w) {
    try {
        return afe::fit_decay_rate(traj, ch, w);
    } catch (const afe::InsufficientDecay&) {
        return nullptr;
    }
}

json trajectory_metrics(const afe::Trajectory& traj, afe::TimeWindow w) {
    static const std::pair<const char*, afe::Channel> channels[] = {
        {"i_gd", afe::Channel::i_gd}, {"i_gq", afe::Channel::i_gq}, {"v_dc", afe::Channel::v_dc}, {"norm", afe::Channel::norm}};
    json decay, settle;
    for (const auto& [name, ch] : channels) {
        decay[name] = decay_fit_json(traj, ch, w);
        settle[name] = afe::settling_time(traj, ch);
    }
    return {{"fit_window", {w.begin, w.end}}, {"decay_rate", decay}, {"settling_time_2pct", settle}};
}

std::string metrics_table(const json& m) {
    std::string out = "Decay-rate fits [1/s] over [" + fmt(m["fit_window"][0].get<double>()) + ", " +
                      fmt(m["fit_window"][1].get<double>()) + "] s\n";
    for (const auto& [k, v] : m["decay_rate"].items())
        out += "  " + k + std::string(6 - std::min<std::size_t>(6, k.size()), ' ') +
               (v.is_null() ? std::string("n/a (amplitude span below two decades)") : fmt(v.get<double>())) + "\n";
    out += "Settling time (2% band) [s]\n";
    for (const auto& [k, v] : m["settling_time_2pct"].items())
        out += "  " + k + std::string(6 - std::min<std::size_t>(6, k.size()), ' ') + fmt(v.get<double>()) + "\n";
    return out;
}

Report cmd_observer(const afe::io::RunConfig& cfg, const Options& opt) {
    const auto op = afe::solve_operating_point(cfg.specs);
    const auto model = afe::io::configured_model(cfg, op);
    const auto obs = afe::design_observer(model, cfg.estimator_poles());
    const auto ev = afe::eigenvalues(afe::observer_error_matrix(model, obs.l));
    const auto framework = opt.framework.empty() ? cfg.sim.framework : parse_framework(opt.framework);
    const auto gain = design_gain(framework, cfg, model, op);

    double slowest = std::numeric_limits<double>::infinity();
    for (const auto& p : obs.target_poles.poles())
        slowest = std::min(slowest, -p.real());

    afe::SimConfig sc;
    sc.mode = afe::SimMode::observer_in_loop;
    sc.dt = opt.dt;
    sc.t_end = opt.t_end.value_or(30.0 / slowest);
    sc.x0 = {10.0, -10.0, 0.0};
    sc.x_hat0 = {0.0, 0.0, 0.0};
    sc.gain = gain;
    sc.observer = obs;
    sc.decimation = 1;
    const auto err = afe::observer_error_trajectory(sc, model, cfg.specs, op);
    const afe::TimeWindow w{3.0 / slowest, sc.t_end};
    const json metrics = trajectory_metrics(err, w);

    Report r;
    r.summary = afe::io::to_json(obs);
    r.summary["error_matrix_eigenvalues"] = afe::io::to_json(ev);
    r.summary["max_pole_relative_error"] = afe::eigenvalue_set_mismatch(ev, obs.target_poles.poles());
    r.summary["slowest_observer_pole"] = -slowest;
    r.summary["controller"] = afe::io::to_json(gain);
    r.summary["error_decay"] = metrics;
    r.files.emplace_back("observer.json", r.summary.dump(2) + "\n");
    r.csv = afe::io::trajectory_csv(err);
    r.files.emplace_back("observer_error.csv", r.csv);
    r.table = "Observer gain L\n" + matrix_table(obs.l) + "Eigenvalues of A - LC\n" + eig_list(ev) +
              "Estimation error e = x - x_hat from e(0) = [10, -10, 0]\n" + metrics_table(metrics) +
              "  slowest observer pole " + fmt(-slowest) + " rad/s\n";
    return r;
}

Report cmd_simulate(const afe::io::RunConfig& cfg, const Options& opt) {
    const auto op = afe::solve_operating_point(cfg.specs);
    const auto model = afe::io::configured_model(cfg, op);
    afe::io::SimSettings s = cfg.sim;
    if (!opt.mode.empty()) {
        json m = opt.mode;
        s.mode = afe::io::detail::sim_mode(m);
    }
    if (!opt.framework.empty())
        s.framework = parse_framework(opt.framework);
    if (opt.t_end) {
        s.t_end = *opt.t_end;
        s.fit_window.end = std::min(s.fit_window.end, s.t_end);
    }
    if (opt.dt)
        s.dt = opt.dt;
    if (!opt.x0.empty())
        s.x0 = {opt.x0[0], opt.x0[1], opt.x0[2]};

    afe::SimConfig sc;
    sc.mode = s.mode;
    sc.dt = s.dt;
    sc.t_end = s.t_end;
    sc.x0 = s.x0;
    sc.x_hat0 = s.x_hat0;
    sc.decimation = s.decimation;
    sc.gain = design_gain(s.framework, cfg, model, op);
    sc.disturbance = afe::io::make_disturbance(s.disturbance);
    if (s.mode == afe::SimMode::observer_in_loop)
        sc.observer = afe::design_observer(model, cfg.estimator_poles());

    const auto traj = afe::simulate(sc, model, cfg.specs, op);

    // metrics always on small-signal deviations
    afe::Trajectory dev = traj;
    if (s.mode == afe::SimMode::nonlinear) {
        const auto x_op = op.state();
        for (auto& x : dev.states)
            for (std::size_t i = 0; i < 3; ++i)
                x[i] -= x_op[i];
    }
    const auto loop = afe::stiffness_matrix(sc, model);
    const auto ev = afe::eigenvalues(loop);

    Report r;
    r.summary["mode"] = afe::to_string(s.mode);
    r.summary["framework"] = afe::io::framework_tag(s.framework);
    r.summary["dt"] = afe::resolved_dt(sc);
    r.summary["t_end"] = s.t_end;
    r.summary["decimation"] = s.decimation;
    r.summary["samples"] = traj.size();
    r.summary["closed_loop_eigenvalues"] = afe::io::to_json(ev);
    r.summary["metrics"] = trajectory_metrics(dev, s.fit_window);
    if (s.mode == afe::SimMode::observer_in_loop) {
        afe::Trajectory err = traj;
        for (std::size_t i = 0; i < err.size(); ++i)
            for (std::size_t j = 0; j < 3; ++j)
                err.states[i][j] = traj.states[i][j] - traj.estimates[i][j];
        err.estimates.clear();
        r.summary["estimation_error_metrics"] = trajectory_metrics(err, s.fit_window);
    }
    r.csv = afe::io::trajectory_csv(traj);
    r.files.emplace_back("trajectory.csv", r.csv);
    r.files.emplace_back("metrics.json", r.summary.dump(2) + "\n");
    r.table = std::string("Simulation: ") + afe::to_string(s.mode) + ", K_" + afe::io::framework_tag(s.framework) + ", dt " +
              fmt(afe::resolved_dt(sc)) + " s, " + std::to_string(traj.size()) + " samples\n" +
              (s.mode == afe::SimMode::observer_in_loop ? "Plant + observer eigenvalues (separation)\n"
                                                        : "Closed-loop eigenvalues\n") +
              eig_list(ev) + metrics_table(r.summary["metrics"]);
    return r;
}

unsigned sweep_threads() {
    if (const char* env = std::getenv("AFE_SWEEP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0)
            throw afe::ConfigError("AFE_SWEEP_THREADS: expected a non-negative integer");
        return static_cast<unsigned>(v);
    }
    return 0;
}

Report cmd_sweep(const afe::io::RunConfig& cfg, const Options& opt) {
    afe::io::SweepSettings s = cfg.sweep;
    if (!opt.framework.empty())
        s.framework = parse_framework(opt.framework);
    if (opt.freeze_op)
        s.options.freeze_operating_point = true;
    if (opt.points > 0)
        s.options.l_points = s.options.r_points = opt.points;
    s.options.threads = sweep_threads();

    const auto op = afe::solve_operating_point(cfg.specs);
    const auto model = afe::io::configured_model(cfg, op);
    const auto gain = design_gain(s.framework, cfg, model, op);
    const auto grid = afe::robustness_sweep(cfg.specs, gain, s.options);

    Report r;
    r.summary["framework"] = afe::io::framework_tag(s.framework);
    r.summary["gain"] = afe::io::to_json(gain);
    r.summary["freeze_operating_point"] = s.options.freeze_operating_point;
    r.summary["l_range"] = {s.options.l_min, s.options.l_max, s.options.l_points};
    r.summary["r_range"] = {s.options.r_min, s.options.r_max, s.options.r_points};
    r.summary["cells"] = grid.cells.size();
    r.summary["infeasible_cells"] = grid.infeasible_count;
    r.summary["certified"] = grid.certified;
    if (grid.infeasible_count < grid.cells.size()) {
        const auto& w = grid.cells[grid.worst_index];
        r.summary["worst_eigenvalue"] = grid.worst_eigenvalue;
        r.summary["worst_cell"] = {{"l_scale", w.l_scale}, {"r_scale", w.r_scale}};
    } else {
        r.summary["worst_eigenvalue"] = nullptr;
    }
    r.csv = afe::io::sweep_csv(grid);
    r.files.emplace_back("sweep.csv", r.csv);
    r.files.emplace_back("sweep.json", r.summary.dump(2) + "\n");

    r.table = std::string(grid.certified ? "CERTIFIED" : "NOT-CERTIFIED") + "\n  grid " +
              std::to_string(s.options.l_points) + " x " + std::to_string(s.options.r_points) + ", K_" +
              afe::io::framework_tag(s.framework) + ", operating point " +
              (s.options.freeze_operating_point ? "frozen" : "re-solved per cell") + "\n";
    if (grid.infeasible_count < grid.cells.size()) {
        const auto& w = grid.cells[grid.worst_index];
        r.table += "  worst eigenvalue " + fmt(grid.worst_eigenvalue) + " at L x" + fmt(w.l_scale) + ", r x" +
                   fmt(w.r_scale) + "\n";
    }
    r.table += "  infeasible cells " + std::to_string(grid.infeasible_count) + "\n";
    if (opt.strict && grid.infeasible_count > 0)
        r.exit_code = exit_sweep_strict;
    return r;
}

const char* error_kind(const afe::Error& e) {
#define AFE_KIND(T)                                                                                                    \
    if (dynamic_cast<const afe::T*>(&e))                                                                               \
        return #T;
    AFE_KIND(InvalidSpecs)
    AFE_KIND(InvalidPoleSpec)
    AFE_KIND(ConfigError)
    AFE_KIND(InfeasibleLoad)
    AFE_KIND(ModulationLimit)
    AFE_KIND(InvalidOperatingPoint)
    AFE_KIND(DegenerateOperatingPoint)
    AFE_KIND(Uncontrollable)
    AFE_KIND(Unobservable)
    AFE_KIND(MultiplicityExceeded)
    AFE_KIND(StiffnessGuard)
    AFE_KIND(NonFinite)
    AFE_KIND(InsufficientDecay)
    AFE_KIND(SingularMatrix)
    AFE_KIND(NoConvergence)
#undef AFE_KIND
    return "Error";
}

int exit_code_for(const afe::Error& e) {
    if (dynamic_cast<const afe::ConfigError*>(&e))
        return exit_config;
    if (dynamic_cast<const afe::Infeasible*>(&e))
        return exit_infeasible;
    if (dynamic_cast<const afe::StructuralError*>(&e))
        return exit_structural;
    if (dynamic_cast<const afe::SimulationError*>(&e))
        return exit_simulation;
    return exit_internal;
}

void emit(const Report& r, const std::string& format) {
    if (format == "json")
        std::cout << r.summary.dump(2) << "\n";
    else if (format == "csv")
        std::cout << r.csv;
    else
        std::cout << r.table;
}

int run(const std::string& verb, const Options& opt) {
    std::optional<std::string> text;
    int code = 0;
    std::string message;
    try {
        text = afe::io::read_file(opt.config_path);
        const auto cfg = afe::io::parse_config_text(*text);
        for (const auto& w : cfg.warnings)
            std::cerr << "warning: " << w << "\n";

        Report r;
        if (verb == "op-solve")
            r = cmd_op_solve(cfg);
        else if (verb == "analyze")
            r = cmd_analyze(cfg);
        else if (verb == "design")
            r = cmd_design(cfg, opt);
        else if (verb == "observer")
            r = cmd_observer(cfg, opt);
        else if (verb == "simulate")
            r = cmd_simulate(cfg, opt);
        else
            r = cmd_sweep(cfg, opt);

        fs::create_directories(opt.out_dir);
        for (const auto& [name, content] : r.files)
            write_file(fs::path(opt.out_dir) / name, content);
        emit(r, opt.format);
        code = r.exit_code;
        if (code == exit_sweep_strict)
            message = "StrictSweep: infeasible cells present and --strict is set";
    } catch (const afe::Error& e) {
        code = exit_code_for(e);
        message = std::string(error_kind(e)) + ": " + e.what();
    } catch (const std::exception& e) {
        code = exit_internal;
        message = std::string("internal: ") + e.what();
    }

    if (text) {
        try {
            fs::create_directories(opt.out_dir);
            json manifest;
            manifest["command"] = verb;
            manifest["config_path"] = opt.config_path;
            manifest["output_directory"] = opt.out_dir;
            manifest["tool_version"] = AFE_VERSION;
            manifest["input_digest"] = {{"algorithm", "sha256"}, {"value", sha256_hex(*text)}};
            manifest["timestamp"] = utc_timestamp();
            manifest["exit_code"] = code;
            write_file(fs::path(opt.out_dir) / "manifest.json", manifest.dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "error: could not write manifest: " << e.what() << "\n";
            if (code == 0)
                code = exit_internal;
        }
    }
    if (!message.empty())
        std::cerr << "error: " << message << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFE rectifier modelling, control design and robustness toolkit"};
    app.set_version_flag("--version", AFE_VERSION);
    app.require_subcommand(1, 1);

    Options opt;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON configuration file")->required();
        sub->add_option("--out", opt.out_dir, "output directory")->default_val("afe-out");
        sub->add_option("--format", opt.format, "standard-output format")
            ->check(CLI::IsMember({"json", "csv", "table"}))
            ->default_val("table");
    };

    auto* op_solve = app.add_subcommand("op-solve", "steady-state operating point");
    common(op_solve);
    auto* analyze = app.add_subcommand("analyze", "small-signal model, ranks and open-loop eigenvalues");
    common(analyze);
    auto* design = app.add_subcommand("design", "state-feedback gains");
    common(design);
    design->add_option("--framework", opt.framework, "ss, fd or both")->check(CLI::IsMember({"ss", "fd", "both"}));
    auto* observer = app.add_subcommand("observer", "Luenberger observer gain and error decay");
    common(observer);
    observer->add_option("--framework", opt.framework, "controller used in the loop: ss or fd")
        ->check(CLI::IsMember({"ss", "fd"}));
    observer->add_option("--t-end", opt.t_end, "error-decay horizon [s]");
    observer->add_option("--dt", opt.dt, "integration step [s]");
    auto* simulate = app.add_subcommand("simulate", "closed-loop time-domain run");
    common(simulate);
    simulate->add_option("--mode", opt.mode, "linear, nonlinear or observer_in_loop")
        ->check(CLI::IsMember({"linear", "nonlinear", "observer_in_loop"}));
    simulate->add_option("--framework", opt.framework, "ss or fd")->check(CLI::IsMember({"ss", "fd"}));
    simulate->add_option("--t-end", opt.t_end, "horizon [s]");
    simulate->add_option("--dt", opt.dt, "integration step [s]");
    simulate->add_option("--x0", opt.x0, "initial small-signal state i_gd i_gq v_dc")->expected(3);
    auto* sweep = app.add_subcommand("sweep", "Lyapunov robustness sweep over L and r scalings");
    common(sweep);
    sweep->add_option("--framework", opt.framework, "ss or fd")->check(CLI::IsMember({"ss", "fd"}));
    sweep->add_flag("--strict", opt.strict, "exit 5 when any cell is infeasible");
    sweep->add_flag("--freeze-op", opt.freeze_op, "keep the nominal operating point in every cell");
    sweep->add_option("--points", opt.points, "grid points per axis")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }
    return run(app.get_subcommands().front()->get_name(), opt);
}
