#pragma once

// CSV and JSON emission for traces, metrics and sweeps.

#include <aipid/config.hpp>
#include <aipid/metrics.hpp>
#include <aipid/simloop.hpp>
#include <aipid/sweep.hpp>

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace aipid {

/// 17 significant digits, enough to round-trip any double.
inline std::string format_number(double v) {
    std::array<char, 40> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    (void)ec;
    return std::string(buf.data(), ptr);
}

inline std::vector<std::string> trace_header(std::size_t depth) {
    std::vector<std::string> h{"t", "y", "x_plant", "u", "v", "d"};
    for (std::size_t i = 0; i < depth; ++i) {
        h.push_back("mu_x" + std::to_string(i));
    }
    for (std::size_t i = 0; i < depth; ++i) {
        h.push_back("eps_z" + std::to_string(i));
    }
    for (std::size_t i = 0; i + 1 < depth; ++i) {
        h.push_back("eps_w" + std::to_string(i));
    }
    for (std::size_t i = 0; i < depth; ++i) {
        h.push_back("pi_z" + std::to_string(i));
    }
    for (std::size_t i = 0; i + 1 < depth; ++i) {
        h.push_back("pi_w" + std::to_string(i));
    }
    for (const char *f : {"F_total", "F_obs", "F_dyn", "F_hyper"}) {
        h.emplace_back(f);
    }
    return h;
}

namespace detail {

inline void write_csv_line(std::ostream &out, const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            out << ',';
        }
        out << cells[i];
    }
    out << '\n';
}

} // namespace detail

/// F_total in the trace is the state/action free energy (no log-precision
/// terms), so F_total = F_obs + F_dyn + F_hyper.
inline void write_trace_csv(std::ostream &out, const Trajectory &traj) {
    detail::write_csv_line(out, trace_header(traj.depth));
    std::vector<std::string> cells;
    for (const TraceRow &r : traj.rows) {
        cells.clear();
        for (double v : {r.t, r.y, r.x_plant, r.u, r.v, r.d}) {
            cells.push_back(format_number(v));
        }
        for (const OrderVector *vec : {&r.mu_x, &r.eps_z, &r.eps_w, &r.pi_z, &r.pi_w}) {
            for (double v : *vec) {
                cells.push_back(format_number(v));
            }
        }
        cells.push_back(format_number(r.F.total));
        cells.push_back(format_number(r.F.f_obs));
        cells.push_back(format_number(r.F.f_dyn));
        cells.push_back(format_number(r.F.f_hyper_z + r.F.f_hyper_w));
        detail::write_csv_line(out, cells);
    }
}

/// Non-finite values (e.g. a rise time that never happened) become null.
inline Json metrics_to_json(const Metrics &m) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return Json{{"iae", num(m.iae)},
                {"ie", num(m.ie)},
                {"overshoot_pct", num(m.overshoot_pct)},
                {"rise_time_10_90", num(m.rise_time_10_90)},
                {"settling_time_2pct", num(m.settling_time_2pct)},
                {"steady_state_error", num(m.steady_state_error)},
                {"peak_u", num(m.peak_u)}};
}

inline void write_sweep_csv(std::ostream &out, std::string_view param_path, const std::vector<SweepRow> &rows) {
    out << "param,value,iae,ie,overshoot_pct,rise_time_10_90,settling_time_2pct,steady_state_error,peak_u\n";
    for (const SweepRow &r : rows) {
        const Metrics &m = r.metrics;
        out << param_path;
        for (double v : {r.value, m.iae, m.ie, m.overshoot_pct, m.rise_time_10_90, m.settling_time_2pct,
                         m.steady_state_error, m.peak_u}) {
            out << ',' << format_number(v);
        }
        out << '\n';
    }
}

/// FNV-1a 64-bit, hex encoded.
inline std::string checksum(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

} // namespace aipid
