#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "beamsim/angles.hpp"
#include "beamsim/codebook.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/scenario.hpp"
#include "beamsim/trace.hpp"

namespace beamsim {

inline constexpr double kSpeedOfLightMps = 299792458.0;

/// Free-space path loss, 20 log10(4 pi d / lambda), in dB.
inline double fspl_db(double distance_m, double carrier_ghz) {
    const double lambda_m = kSpeedOfLightMps / (carrier_ghz * 1e9);
    return 20.0 * std::log10(4.0 * kPi * distance_m / lambda_m);
}

/// Thermal noise floor in dBm: -174 dBm/Hz + 10 log10(B) + NF.
inline double noise_floor_dbm(double bandwidth_hz, double noise_figure_db) {
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

/// Per-path bookkeeping during synthesis.
struct PathState {
    Direction arrival;    // at the RX, toward the path source
    Direction departure;  // at the TX
    double length_m = 0.0;
    double extra_loss_db = 0.0;
    bool blocked = false;
    double block_loss_db = 0.0;
};

/// Synthesizes the per-beam SNR trace for a scenario at the 6.25 ms cadence.
/// Per sample and beam the path powers are combined as a linear power sum;
/// blockage evolves per path as a two-state Markov chain with the loss drawn
/// once at block onset. Identical seeds yield identical traces.
inline SnrTrace synthesize_trace(const Scenario& sc, const BeamCodebook& cb) {
    validate_scenario(sc);
    if (cb.beams.empty()) throw ConfigError("synthesize_trace: empty codebook");

    const double dt_ms = kTraceDtMs;
    const double dt_s = dt_ms / 1000.0;
    const int rows = static_cast<int>(std::llround(sc.duration_s * 1000.0 / dt_ms)) + 1;
    if (rows < 2) throw ConfigError("synthesize_trace: duration shorter than one sample");

    const TxPattern tx = resolved_tx_pattern(sc);
    const double noise_dbm = noise_floor_dbm(sc.bandwidth_hz, sc.noise_figure_db);
    const int n_paths = (sc.los_present ? 1 : 0) + static_cast<int>(sc.scatterers.size());

    std::vector<Vec3> beam_units;
    beam_units.reserve(cb.beams.size());
    for (const Beam& b : cb.beams) beam_units.push_back(unit_vector(b.boresight));

    std::mt19937_64 rng(sc.seed);
    auto uniform = [&rng] { return detail::uniform01(rng); };
    const double p_block = sc.blockage.p_block_per_s * dt_s;
    const double p_unblock = sc.blockage.p_unblock_per_s * dt_s;

    std::vector<PathState> paths(n_paths);
    SnrTrace trace;
    trace.run_id = sc.run_id;
    trace.dt_ms = dt_ms;
    trace.n_beams = cb.size();
    trace.samples.resize(static_cast<std::size_t>(rows) * cb.size());

    std::vector<double> path_common_dbm(n_paths);
    std::vector<Vec3> arrival_units(n_paths);

    for (int k = 0; k < rows; ++k) {
        const double t_s = k * dt_s;
        const Vec3 rx = rx_position_at(sc, t_s);

        // Blockage draw order: per sample, per path (LOS first, then
        // scatterers in listed order); one uniform per path per step plus one
        // loss draw at each block onset.
        for (PathState& p : paths) {
            if (!p.blocked) {
                if (uniform() < p_block) {
                    p.blocked = true;
                    p.block_loss_db = sc.blockage.loss_db_min +
                                      uniform() * (sc.blockage.loss_db_max - sc.blockage.loss_db_min);
                }
            } else {
                if (uniform() < p_unblock) {
                    p.blocked = false;
                    p.block_loss_db = 0.0;
                }
            }
        }

        int pi = 0;
        if (sc.los_present) {
            PathState& p = paths[pi];
            p.length_m = distance(sc.tx_position_m, rx);
            if (p.length_m < 1e-9)
                throw ConfigError("synthesize_trace: RX coincides with TX (zero path length)");
            p.departure = direction_from_to(sc.tx_position_m, rx);
            p.arrival = direction_from_to(rx, sc.tx_position_m);
            p.extra_loss_db = 0.0;
            ++pi;
        }
        for (const Scatterer& s : sc.scatterers) {
            PathState& p = paths[pi];
            const double leg1 = distance(sc.tx_position_m, s.position_m);
            const double leg2 = distance(s.position_m, rx);
            if (leg1 < 1e-9 || leg2 < 1e-9)
                throw ConfigError("synthesize_trace: scatterer coincides with TX or RX");
            p.length_m = leg1 + leg2;
            p.departure = direction_from_to(sc.tx_position_m, s.position_m);
            p.arrival = direction_from_to(rx, s.position_m);
            p.extra_loss_db = s.reflection_loss_db;
            ++pi;
        }

        for (int p = 0; p < n_paths; ++p) {
            const PathState& ps = paths[p];
            path_common_dbm[p] = sc.tx_power_dbm + tx_gain_dbi(tx, ps.departure) -
                                 fspl_db(ps.length_m, sc.carrier_ghz) - ps.extra_loss_db -
                                 (ps.blocked ? ps.block_loss_db : 0.0);
            arrival_units[p] = unit_vector(ps.arrival);
        }

        for (int b = 0; b < cb.size(); ++b) {
            double linear_mw = 0.0;
            for (int p = 0; p < n_paths; ++p) {
                const double psi = angular_distance_deg(beam_units[b], arrival_units[p]);
                const double rx_gain =
                    pattern_gain_dbi(cb.beams[b].peak_gain_dbi, cb.beams[b].hpbw_deg, psi);
                linear_mw += std::pow(10.0, (path_common_dbm[p] + rx_gain) / 10.0);
            }
            trace.at(k, b) = 10.0 * std::log10(linear_mw) - noise_dbm;
        }
    }
    return trace;
}

}  // namespace beamsim
