#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/codebook.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/trace.hpp"

namespace beamsim {

/// Beam-management policy: sweep period T, dwell Ts, RX chains, outage margin.
struct SweepConfig {
    double sweep_period_ms = 300.0;
    double dwell_ms = 0.125;
    int n_chains = 4;
    double outage_margin_db = 5.0;
    double bandwidth_hz = 100e6;
    int switch_cost_slots = 0;  // reactive-switch penalty, in zero-rate slots
};

enum class Phase { Sweeping, Serving };

struct MonitoredBeam {
    int beam = -1;
    double ref_snr_db = -std::numeric_limits<double>::infinity();
};

/// Link bookkeeping while a simulation runs: the serving beam with the SNR
/// recorded at selection time, plus up to n_chains monitored beams. The
/// serving beam is always a member of the monitored set.
struct LinkState {
    Phase phase = Phase::Serving;
    int serving_beam = -1;
    double ref_snr_db = -std::numeric_limits<double>::infinity();
    std::vector<MonitoredBeam> monitored;
    long slots_into_cycle = 0;
};

struct SlotRecord {
    double t_ms = 0.0;
    Phase phase = Phase::Sweeping;
    int serving_beam = -1;  // -1 during sweep slots
    double actual_snr_db = std::numeric_limits<double>::quiet_NaN();
    bool outage = false;
    double rate_bps = 0.0;
};

/// Per-slot log plus aggregates for one (trace, config) pair.
struct SimResult {
    std::vector<SlotRecord> slots;
    double mean_rate_bps = 0.0;   // time-average over all slots
    double outage_fraction = 0.0; // serving-phase slots only
    long n_sweeps = 0;
    long n_reactive_switches = 0;
};

/// Shannon rate at full duty: B * log2(1 + linear SNR); -inf SNR gives 0.
inline double slot_rate_bps(double snr_db, double bandwidth_hz) {
    return bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

/// True iff the actual SNR fell strictly more than margin below the reference.
inline bool detect_outage(double ref_snr_db, double actual_snr_db, double margin_db) {
    if (!(margin_db >= 0.0)) throw ConfigError("detect_outage: margin_db must be >= 0");
    return actual_snr_db < ref_snr_db - margin_db;
}

/// Argmax by SNR; ties go to the lowest beam id. Returns (beam id, reference
/// SNR) of the winning measurement.
inline std::pair<int, double> select_beam(const std::vector<std::pair<int, double>>& measurements) {
    if (measurements.empty()) throw ConfigError("select_beam: empty measurement list");
    int best_id = measurements.front().first;
    double best = -std::numeric_limits<double>::infinity();
    bool first = true;
    for (const auto& [id, snr] : measurements) {
        if (first || snr > best || (snr == best && id < best_id)) {
            best = snr;
            best_id = id;
            first = false;
        }
    }
    return {best_id, best};
}

/// Partitions the faces evenly across chains; chain c sweeps the beams of
/// faces [c*F/n, (c+1)*F/n) in id order.
inline std::vector<std::vector<int>> sweep_schedule(const BeamCodebook& cb, int n_chains) {
    const int faces = cb.face_count();
    if (n_chains < 1 || faces % n_chains != 0)
        throw ConfigError("sweep_schedule: n_chains=" + std::to_string(n_chains) +
                          " must divide the number of faces (" + std::to_string(faces) + ")");
    const int faces_per_chain = faces / n_chains;
    std::vector<std::vector<int>> schedule(n_chains);
    for (const Beam& b : cb.beams) {
        const int chain = b.face / faces_per_chain;
        if (chain < 0 || chain >= n_chains)
            throw ConfigError("sweep_schedule: beam face " + std::to_string(b.face) +
                              " outside the face list");
        schedule[chain].push_back(b.id);
    }
    for (auto& list : schedule) std::sort(list.begin(), list.end());
    return schedule;
}

namespace detail {

// Compensated accumulation keeps the static-channel closed form tight.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

}  // namespace detail

/// Runs the P3 beam-sweeping state machine over a trace at dwell resolution.
///
/// Slots cover start times in [0, trace duration). A sweep cycle begins at
/// t = 0 and at every multiple of the sweep period; during a sweep each chain
/// measures one of its beams per slot. At sweep end the best measurement
/// becomes the serving beam (reference SNR fixed until the next selection)
/// and the top n_chains measurements become the monitored set. Serving slots
/// transmit at the reference-SNR Shannon rate unless the serving beam's
/// actual SNR drops more than the margin below the reference (outage, rate
/// 0). With several chains an outage slot immediately re-serves on the best
/// qualifying monitored beam; with one chain outage lasts until the next
/// sweep.
inline SimResult run_simulation(const SnrTrace& trace, const BeamCodebook& cb,
                                const SweepConfig& config) {
    validate_trace(trace);
    if (trace.n_beams != cb.size())
        throw ConfigError("run_simulation: trace has " + std::to_string(trace.n_beams) +
                          " beams but codebook has " + std::to_string(cb.size()));
    if (!(config.dwell_ms > 0.0)) throw ConfigError("run_simulation: dwell_ms must be positive");
    if (!(config.outage_margin_db >= 0.0))
        throw ConfigError("run_simulation: outage_margin_db must be >= 0");
    if (!(config.bandwidth_hz > 0.0))
        throw ConfigError("run_simulation: bandwidth_hz must be positive");
    if (config.switch_cost_slots < 0)
        throw ConfigError("run_simulation: switch_cost_slots must be >= 0");

    const auto schedule = sweep_schedule(cb, config.n_chains);
    std::size_t sweep_len = 0;
    for (const auto& list : schedule) sweep_len = std::max(sweep_len, list.size());
    const double sweep_duration_ms = static_cast<double>(sweep_len) * config.dwell_ms;
    if (!(config.sweep_period_ms > sweep_duration_ms))
        throw ConfigError("run_simulation: sweep_period_ms " +
                          std::to_string(config.sweep_period_ms) +
                          " must exceed the sweep duration " +
                          std::to_string(sweep_duration_ms) + " ms");

    const double duration = trace.duration_ms();
    long n_slots = static_cast<long>(std::floor(duration / config.dwell_ms));
    if (static_cast<double>(n_slots) * config.dwell_ms < duration) ++n_slots;
    if (n_slots < static_cast<long>(sweep_len))
        throw ConfigError("run_simulation: trace shorter than one full sweep");

    SimResult result;
    result.slots.reserve(n_slots);

    LinkState link;
    std::vector<std::pair<int, double>> measurements;
    measurements.reserve(cb.size());
    std::size_t sweep_pos = 0;
    long next_sweep = 0;  // sweep due times are next_sweep * sweep_period_ms
    int switch_cooldown = 0;

    detail::NeumaierSum rate_sum;
    long serving_slots = 0;
    long outage_slots = 0;

    for (long s = 0; s < n_slots; ++s) {
        const double t = static_cast<double>(s) * config.dwell_ms;

        if (link.phase == Phase::Serving &&
            t >= static_cast<double>(next_sweep) * config.sweep_period_ms - 1e-9) {
            link.phase = Phase::Sweeping;
            link.slots_into_cycle = 0;
            sweep_pos = 0;
            measurements.clear();
            ++next_sweep;
            ++result.n_sweeps;
        }

        SlotRecord rec;
        rec.t_ms = t;
        ++link.slots_into_cycle;
        if (link.phase == Phase::Sweeping) {
            rec.phase = Phase::Sweeping;
            for (int c = 0; c < config.n_chains; ++c) {
                if (sweep_pos < schedule[c].size()) {
                    const int beam = schedule[c][sweep_pos];
                    measurements.emplace_back(beam, snr_at(trace, t, beam));
                }
            }
            ++sweep_pos;
            if (sweep_pos >= sweep_len) {
                const auto [beam, snr] = select_beam(measurements);
                link.serving_beam = beam;
                link.ref_snr_db = snr;
                // top n_chains measurements by SNR (ties to lower id)
                std::vector<std::pair<int, double>> sorted = measurements;
                std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
                    if (a.second != b.second) return a.second > b.second;
                    return a.first < b.first;
                });
                link.monitored.clear();
                for (int i = 0; i < config.n_chains && i < static_cast<int>(sorted.size()); ++i)
                    link.monitored.push_back({sorted[i].first, sorted[i].second});
                link.phase = Phase::Serving;
                switch_cooldown = 0;
            }
        } else {
            rec.phase = Phase::Serving;
            rec.serving_beam = link.serving_beam;
            double actual = snr_at(trace, t, link.serving_beam);
            bool outage = !std::isfinite(link.ref_snr_db) ||
                          detect_outage(link.ref_snr_db, actual, config.outage_margin_db);

            if (outage && config.n_chains > 1) {
                // Reactive re-serve: best monitored beam whose current SNR is
                // still within margin of its own reference.
                int pick = -1;
                double pick_snr = -std::numeric_limits<double>::infinity();
                for (const auto& m : link.monitored) {
                    const double cur = snr_at(trace, t, m.beam);
                    if (!std::isfinite(cur)) continue;
                    if (cur < m.ref_snr_db - config.outage_margin_db) continue;
                    if (cur > pick_snr || (cur == pick_snr && pick >= 0 && m.beam < pick)) {
                        pick = m.beam;
                        pick_snr = cur;
                    }
                }
                if (pick >= 0) {
                    link.serving_beam = pick;
                    link.ref_snr_db = pick_snr;
                    for (auto& m : link.monitored)
                        if (m.beam == pick) m.ref_snr_db = pick_snr;
                    ++result.n_reactive_switches;
                    switch_cooldown = config.switch_cost_slots;
                    actual = pick_snr;
                    outage = false;
                    rec.serving_beam = pick;
                }
            }

            rec.actual_snr_db = actual;
            rec.outage = outage;
            if (outage) {
                rec.rate_bps = 0.0;
                ++outage_slots;
            } else if (switch_cooldown > 0) {
                rec.rate_bps = 0.0;
                --switch_cooldown;
            } else {
                rec.rate_bps = slot_rate_bps(link.ref_snr_db, config.bandwidth_hz);
            }
            ++serving_slots;
        }

        rate_sum.add(rec.rate_bps);
        result.slots.push_back(rec);
    }

    result.mean_rate_bps = rate_sum.value() / static_cast<double>(n_slots);
    result.outage_fraction =
        serving_slots > 0 ? static_cast<double>(outage_slots) / static_cast<double>(serving_slots)
                          : 0.0;
    return result;
}

/// Per-slot log CSV: `t_ms,phase,serving_beam,actual_snr_db,outage,rate_bps`.
inline void write_slot_log_csv(const SimResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "t_ms,phase,serving_beam,actual_snr_db,outage,rate_bps\n";
    char line[160];
    for (const SlotRecord& r : result.slots) {
        std::snprintf(line, sizeof(line), "%.10g,%s,%d,%.12g,%d,%.12g\n", r.t_ms,
                      r.phase == Phase::Sweeping ? "sweep" : "serve", r.serving_beam,
                      r.actual_snr_db, r.outage ? 1 : 0, r.rate_bps);
        out << line;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace beamsim
