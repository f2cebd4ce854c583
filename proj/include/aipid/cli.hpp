#pragma once

// Subcommands behind the command-line tool. Each takes a manifest, writes its
// files into the output directory and returns a process exit status:
//   0 success, 1 bad input, 2 simulation diverged, 3 tolerance exceeded, 4 I/O.

#include <aipid/config.hpp>
#include <aipid/controller.hpp>
#include <aipid/errors.hpp>
#include <aipid/io.hpp>
#include <aipid/metrics.hpp>
#include <aipid/pid.hpp>
#include <aipid/simloop.hpp>
#include <aipid/sweep.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace aipid::cli {

enum ExitCode : int { kOk = 0, kBadInput = 1, kDiverged = 2, kToleranceExceeded = 3, kIoError = 4 };

struct EmittedFile {
    std::string name;
    std::string kind;
    std::string checksum;
};

struct RunManifest {
    std::filesystem::path config_path;
    std::filesystem::path output_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    std::vector<EmittedFile> emitted;
};

class IoFailure : public Error {
public:
    using Error::Error;
};

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot read " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Config file, then --set overrides, then the --seed override.
inline ScenarioConfig load_scenario(const RunManifest &m) {
    ScenarioConfig cfg = parse_config(read_file(m.config_path));
    if (!m.overrides.empty()) {
        cfg = apply_overrides(cfg, m.overrides);
    }
    if (m.seed) {
        cfg.sim.seed = *m.seed;
    }
    return cfg;
}

/// Writes one output file and records its checksum in the manifest.
inline void emit(RunManifest &m, const std::string &name, const std::string &kind, const std::string &content) {
    std::filesystem::create_directories(m.output_dir);
    const std::filesystem::path path = m.output_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot write " + path.string());
    }
    out << content;
    out.close();
    if (!out) {
        throw IoFailure("write failed for " + path.string());
    }
    m.emitted.push_back({name, kind, checksum(content)});
}

/// manifest.json: inputs plus every emitted file and its checksum.
inline void write_manifest(RunManifest &m, const std::string &command) {
    Json files = Json::array();
    for (const EmittedFile &f : m.emitted) {
        files.push_back(Json{{"name", f.name}, {"kind", f.kind}, {"checksum", f.checksum}});
    }
    Json doc{{"command", command},
             {"config", m.config_path.string()},
             {"overrides", m.overrides},
             {"seed", m.seed ? Json(*m.seed) : Json(nullptr)},
             {"emitted", files}};
    std::filesystem::create_directories(m.output_dir);
    std::ofstream out(m.output_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot write manifest.json");
    }
    out << doc.dump(2) << "\n";
}

namespace detail {

template <typename Fn>
int guarded(std::ostream &err, Fn &&fn) {
    try {
        return fn();
    } catch (const IntegrationDiverged &e) {
        err << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const PlantDiverged &e) {
        err << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const IoFailure &e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kBadInput;
    }
}

inline std::string trace_text(const Trajectory &traj) {
    std::ostringstream s;
    write_trace_csv(s, traj);
    return s.str();
}

} // namespace detail

inline int cmd_run(RunManifest &m, std::ostream &err) {
    return detail::guarded(err, [&] {
        const ScenarioConfig cfg = load_scenario(m);
        emit(m, "normalised-config.json", "config", dump_config(cfg));
        const Trajectory traj = run_closed_loop(cfg);
        emit(m, "trace.csv", "trace", detail::trace_text(traj));
        emit(m, "metrics.json", "metrics", metrics_to_json(scenario_metrics(cfg, traj)).dump(2) + "\n");
        write_manifest(m, "run");
        return static_cast<int>(kOk);
    });
}

inline int cmd_sweep(RunManifest &m, const std::string &param_path, const std::vector<double> &values,
                     std::ostream &err) {
    return detail::guarded(err, [&] {
        const ScenarioConfig cfg = load_scenario(m);
        emit(m, "normalised-config.json", "config", dump_config(cfg));
        const std::vector<SweepRow> rows = sweep(cfg, param_path, values);
        std::ostringstream s;
        write_sweep_csv(s, param_path, rows);
        emit(m, "sweep.csv", "sweep", s.str());
        write_manifest(m, "sweep");
        return static_cast<int>(kOk);
    });
}

struct PidComparison {
    double max_abs_deviation = 0.0;
    PidGains gains;
    std::vector<std::array<double, 5>> rows;  ///< t, e, u_ai, u_pid, |diff| at the record stride
};

/// Runs the clamped controller in closed loop and feeds the same error
/// sequence to the classical PID with gains mapped from the precisions.
inline PidComparison compare_with_pid(ScenarioConfig cfg) {
    cfg.controller.config.clamp_expectations = true;
    cfg.controller.config.learn_precisions = false;
    const PidGains gains = gains_from_precisions(cfg.controller.initial_precisions(), cfg.controller.config.kappa_a);

    PidState pid;
    pid.kp = gains.kp;
    pid.ki = gains.ki;
    pid.kd = gains.kd;
    pid.n_filt = cfg.controller.n_filt;
    pid.u_max = cfg.controller.config.u_max;
    // Same starting output as the controller's initial action.
    pid.integral = gains.ki != 0.0 ? cfg.controller.initial_action / gains.ki : 0.0;

    PidComparison out;
    out.gains = gains;
    const double dt = cfg.sim.dt;
    const std::size_t stride = cfg.sim.record_stride;
    const double obs_gain = cfg.controller.obs_gain;
    run_closed_loop(cfg, [&](const TickInfo &tick) {
        const double e = obs_gain * tick.v - tick.y;
        double u_pid = 0.0;
        std::tie(pid, u_pid) = pid_step(pid, e, dt);
        const double u_ai = tick.state.action;
        const double diff = std::abs(u_ai - u_pid);
        out.max_abs_deviation = std::max(out.max_abs_deviation, diff);
        if (tick.tick % stride == 0) {
            out.rows.push_back({tick.t, e, u_ai, u_pid, diff});
        }
    });
    return out;
}

inline int cmd_compare_pid(RunManifest &m, std::ostream &err) {
    return detail::guarded(err, [&] {
        const ScenarioConfig cfg = load_scenario(m);
        emit(m, "normalised-config.json", "config", dump_config(cfg));
        const PidComparison cmp = compare_with_pid(cfg);
        const double tolerance = m.tolerance.value_or(1e-2);

        std::ostringstream csv;
        csv << "t,e,u_ai,u_pid,abs_diff\n";
        for (const auto &r : cmp.rows) {
            csv << format_number(r[0]) << ',' << format_number(r[1]) << ',' << format_number(r[2]) << ','
                << format_number(r[3]) << ',' << format_number(r[4]) << '\n';
        }
        emit(m, "compare.csv", "trace", csv.str());
        const bool pass = cmp.max_abs_deviation <= tolerance;
        const Json report{{"max_abs_deviation", cmp.max_abs_deviation},
                          {"tolerance", tolerance},
                          {"dt", cfg.sim.dt},
                          {"gains", Json{{"ki", cmp.gains.ki}, {"kp", cmp.gains.kp}, {"kd", cmp.gains.kd}}},
                          {"pass", pass}};
        emit(m, "compare.json", "report", report.dump(2) + "\n");
        write_manifest(m, "compare-pid");
        if (!pass) {
            err << "error: max |u_ai - u_pid| = " << format_number(cmp.max_abs_deviation) << " exceeds tolerance "
                << format_number(tolerance) << "\n";
            return static_cast<int>(kToleranceExceeded);
        }
        return static_cast<int>(kOk);
    });
}

struct TuneResult {
    Trajectory trajectory;
    std::vector<std::vector<double>> gain_rows;  ///< t, ki, kp, kd, pi_w... at the record stride
    PidGains initial_gains;
    PidGains final_gains;
    PrecisionState final_precisions;
    double iae_first = 0.0;  ///< ∫|v − y| over the first 20% of the run
    double iae_last = 0.0;   ///< over the last 20%
    OrderVector mse_eps_z_last;  ///< mean pre-update ε_z² per order over the last 20% of ticks
};

inline TuneResult tune(ScenarioConfig cfg) {
    cfg.controller.config.learn_precisions = true;
    const double kappa_a = cfg.controller.config.kappa_a;
    const double obs_gain = cfg.controller.obs_gain;
    const std::size_t depth = cfg.controller.depth;
    TuneResult res;
    res.initial_gains = gains_from_precisions(cfg.controller.initial_precisions(), kappa_a);
    res.final_precisions = cfg.controller.initial_precisions();
    res.mse_eps_z_last = OrderVector(depth, 0.0);
    const std::size_t stride = cfg.sim.record_stride;
    const std::size_t ticks = tick_count(cfg.sim);
    const std::size_t tail_from = ticks - ticks / 5;
    std::size_t tail_count = 0;
    // The smoothed errors that drive learning are taken before the recognition
    // update, i.e. against the previous tick's expectations.
    GeneralisedSignal prev_mu = cfg.controller.model(setpoint_at(cfg.setpoints, 0.0)).setpoint;
    res.trajectory = run_closed_loop(cfg, [&](const TickInfo &tick) {
        if (tick.tick % stride == 0) {
            const PidGains g = gains_from_precisions(tick.state.pr, kappa_a);
            std::vector<double> row{tick.t, g.ki, g.kp, g.kd};
            for (std::size_t i = 0; i + 1 < depth; ++i) {
                row.push_back(tick.state.pr.pi_w(i));
            }
            res.gain_rows.push_back(std::move(row));
        }
        if (tick.tick >= tail_from) {
            for (std::size_t k = 0; k < depth; ++k) {
                const double e = tick.y_embedded.orders[k] - obs_gain * prev_mu.orders[k];
                res.mse_eps_z_last[k] += e * e;
            }
            ++tail_count;
        }
        prev_mu = tick.state.mu_x;
        res.final_precisions = tick.state.pr;
    });
    res.final_gains = gains_from_precisions(res.final_precisions, kappa_a);
    for (double &v : res.mse_eps_z_last) {
        v /= static_cast<double>(std::max<std::size_t>(1, tail_count));
    }

    const std::vector<TraceRow> &rows = res.trajectory.rows;
    const std::size_t n = rows.size();
    const std::size_t fifth = std::max<std::size_t>(1, n / 5);
    const double h = res.trajectory.dt_record;
    for (std::size_t i = 0; i < fifth; ++i) {
        res.iae_first += std::abs(rows[i].v - rows[i].y) * h;
    }
    for (std::size_t i = n - fifth; i < n; ++i) {
        res.iae_last += std::abs(rows[i].v - rows[i].y) * h;
    }
    return res;
}

inline int cmd_tune(RunManifest &m, std::ostream &err) {
    return detail::guarded(err, [&] {
        ScenarioConfig cfg = load_scenario(m);
        cfg.controller.config.learn_precisions = true;
        validate(cfg);
        emit(m, "normalised-config.json", "config", dump_config(cfg));
        const TuneResult res = tune(cfg);

        std::ostringstream csv;
        csv << "t,ki,kp,kd";
        for (std::size_t i = 0; i + 1 < cfg.controller.depth; ++i) {
            csv << ",pi_w" << i;
        }
        csv << '\n';
        for (const auto &row : res.gain_rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                csv << (i ? "," : "") << format_number(row[i]);
            }
            csv << '\n';
        }
        emit(m, "gains.csv", "gains", csv.str());
        emit(m, "trace.csv", "trace", detail::trace_text(res.trajectory));
        emit(m, "metrics.json", "metrics",
             metrics_to_json(scenario_metrics(cfg, res.trajectory)).dump(2) + "\n");

        auto gains_json = [](const PidGains &g) { return Json{{"ki", g.ki}, {"kp", g.kp}, {"kd", g.kd}}; };
        auto vec = [](const OrderVector &v) { return std::vector<double>(v.begin(), v.end()); };
        const Json report{{"iae_first_20pct", res.iae_first},
                          {"iae_last_20pct", res.iae_last},
                          {"initial_gains", gains_json(res.initial_gains)},
                          {"final_gains", gains_json(res.final_gains)},
                          {"final_pi_z", vec(res.final_precisions.pi_z_all())},
                          {"final_pi_w", vec(res.final_precisions.pi_w_all())},
                          {"mse_eps_z_last_20pct", vec(res.mse_eps_z_last)}};
        emit(m, "tune_report.json", "report", report.dump(2) + "\n");
        write_manifest(m, "tune");
        return static_cast<int>(kOk);
    });
}

} // namespace aipid::cli
