#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "beamsim/errors.hpp"

namespace beamsim {

/// Native cadence of per-beam SNR snapshots: one full segment scan.
inline constexpr double kTraceDtMs = 6.25;

/// Dense per-beam SNR time series on a uniform grid. -inf marks beams with
/// no received energy.
struct SnrTrace {
    std::string run_id;
    double dt_ms = kTraceDtMs;
    int n_beams = 0;
    std::vector<double> samples;  // row-major [time index][beam id]

    int rows() const { return n_beams > 0 ? static_cast<int>(samples.size()) / n_beams : 0; }
    double duration_ms() const { return (rows() - 1) * dt_ms; }
    double at(int row, int beam) const { return samples[static_cast<std::size_t>(row) * n_beams + beam]; }
    double& at(int row, int beam) { return samples[static_cast<std::size_t>(row) * n_beams + beam]; }
};

inline void validate_trace(const SnrTrace& t) {
    if (t.n_beams < 1) throw ConfigError("trace: n_beams must be >= 1");
    if (!(t.dt_ms > 0.0)) throw ConfigError("trace: dt_ms must be positive");
    if (t.samples.size() % t.n_beams != 0)
        throw ConfigError("trace: sample table is not rectangular");
    if (t.rows() < 2) throw ConfigError("trace: need at least 2 time samples");
}

/// Zero-order hold lookup: value of the latest sample at or before t_ms.
inline double snr_at(const SnrTrace& t, double t_ms, int beam_id) {
    if (beam_id < 0 || beam_id >= t.n_beams)
        throw ConfigError("snr_at: beam_id " + std::to_string(beam_id) + " out of range");
    if (!(t_ms >= 0.0) || t_ms > t.duration_ms())
        throw ConfigError("snr_at: t_ms " + std::to_string(t_ms) + " out of range [0, " +
                          std::to_string(t.duration_ms()) + "]");
    int row = static_cast<int>(std::floor(t_ms / t.dt_ms));
    if (row > t.rows() - 1) row = t.rows() - 1;
    return t.at(row, beam_id);
}

namespace detail {

inline std::string format_value(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline double parse_snr(const std::string& tok, const std::string& where) {
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v))
        throw ConfigError(where + ": unparsable snr_db value '" + tok + "'");
    return v;
}

inline double parse_double(const std::string& tok, const std::string& where) {
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v))
        throw ConfigError(where + ": unparsable number '" + tok + "'");
    return v;
}

inline long parse_int(const std::string& tok, const std::string& where) {
    const char* s = tok.c_str();
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end == s || *end != '\0')
        throw ConfigError(where + ": unparsable integer '" + tok + "'");
    return v;
}

}  // namespace detail

/// Trace CSV: header `t_ms,beam_id,snr_db`, long format, rows sorted by t_ms
/// then beam_id, complete grid, `-inf` literal permitted, LF line endings.
inline void write_trace(const SnrTrace& trace, const std::string& path) {
    validate_trace(trace);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t_ms,beam_id,snr_db\n";
    for (int r = 0; r < trace.rows(); ++r) {
        const std::string t = detail::format_value(r * trace.dt_ms);
        for (int b = 0; b < trace.n_beams; ++b)
            out << t << ',' << b << ',' << detail::format_value(trace.at(r, b)) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline SnrTrace load_trace(const std::string& path, int expected_n_beams = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trace file: " + path);

    std::string line;
    if (!std::getline(in, line) || line != "t_ms,beam_id,snr_db")
        throw ConfigError(path + ": missing or malformed header (expected t_ms,beam_id,snr_db)");

    SnrTrace trace;
    trace.run_id = std::filesystem::path(path).stem().string();
    trace.n_beams = 0;

    std::vector<double> row_times;
    int beams_in_row = 0;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + " line " + std::to_string(line_no);

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw ConfigError(where + ": expected exactly 3 comma-separated fields");
        const double t = detail::parse_double(line.substr(0, c1), where + " (t_ms)");
        const long beam = detail::parse_int(line.substr(c1 + 1, c2 - c1 - 1), where + " (beam_id)");
        const double snr = detail::parse_snr(line.substr(c2 + 1), where);

        if (row_times.empty() || t != row_times.back()) {
            // new time row; the previous one must have been complete
            if (!row_times.empty()) {
                if (trace.n_beams == 0) trace.n_beams = beams_in_row;
                if (beams_in_row != trace.n_beams)
                    throw ConfigError(where + ": missing cell, time row " +
                                      detail::format_value(row_times.back()) + " has " +
                                      std::to_string(beams_in_row) + " of " +
                                      std::to_string(trace.n_beams) + " beams");
                if (t <= row_times.back())
                    throw ConfigError(where + ": t_ms not strictly increasing");
            }
            row_times.push_back(t);
            beams_in_row = 0;
        }
        if (beam != beams_in_row)
            throw ConfigError(where + ": expected beam_id " + std::to_string(beams_in_row) +
                              " at t_ms " + detail::format_value(t) + ", got " +
                              std::to_string(beam));
        if (expected_n_beams > 0 && beam >= expected_n_beams)
            throw ConfigError(where + ": beam_id " + std::to_string(beam) +
                              " out of range (expected " + std::to_string(expected_n_beams) +
                              " beams)");
        ++beams_in_row;
        trace.samples.push_back(snr);
    }
    if (row_times.empty()) throw ConfigError(path + ": no data rows");
    if (trace.n_beams == 0) trace.n_beams = beams_in_row;
    if (beams_in_row != trace.n_beams)
        throw ConfigError(path + ": missing cell, last time row " +
                          detail::format_value(row_times.back()) + " has " +
                          std::to_string(beams_in_row) + " of " +
                          std::to_string(trace.n_beams) + " beams");
    if (expected_n_beams > 0 && trace.n_beams != expected_n_beams)
        throw ConfigError(path + ": expected " + std::to_string(expected_n_beams) +
                          " beams per time row, found " + std::to_string(trace.n_beams));
    if (row_times.size() < 2)
        throw ConfigError(path + ": need at least 2 time samples");

    // uniform grid check
    const double dt = row_times[1] - row_times[0];
    const double tol = 1e-9 * std::max(1.0, std::abs(dt));
    if (!(dt > 0.0)) throw ConfigError(path + ": non-increasing time grid");
    for (std::size_t i = 2; i < row_times.size(); ++i) {
        if (std::abs((row_times[i] - row_times[i - 1]) - dt) > tol)
            throw ConfigError(path + ": non-uniform time grid at t_ms " +
                              detail::format_value(row_times[i]));
    }
    trace.dt_ms = dt;
    validate_trace(trace);
    return trace;
}

}  // namespace beamsim
