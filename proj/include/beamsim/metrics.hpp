#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "beamsim/codebook.hpp"
#include "beamsim/engine.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/trace.hpp"

namespace beamsim {

/// Fraction of time available for data transmission:
/// eta = 1 - (M * Ts) / (n_chains * T), clamped at 0.
struct TransmissionFraction {
    double eta = 0.0;
    bool clamped = false;
};

inline TransmissionFraction transmission_fraction(int m_beams, double dwell_ms,
                                                  double period_ms, int n_chains) {
    if (!(period_ms > 0.0)) throw ConfigError("transmission_fraction: T must be positive");
    if (m_beams < 1 || n_chains < 1)
        throw ConfigError("transmission_fraction: M and n_chains must be >= 1");
    const double eta = 1.0 - (m_beams * dwell_ms) / (n_chains * period_ms);
    if (eta < 0.0) return {0.0, true};
    return {eta, false};
}

/// Data rate eta * B * log2(1 + SNR), with SNR given in dB (-inf maps to 0).
inline double shannon_rate(double snr_db, double bandwidth_hz, double eta) {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("shannon_rate: bandwidth must be positive");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("shannon_rate: eta must lie in [0, 1]");
    return eta * bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

/// Sweep-period grid for the throughput curves.
struct PeriodGrid {
    std::vector<double> periods_ms{50, 75, 100, 150, 200, 300, 500, 700, 1000, 1500, 2000};
};

inline PeriodGrid default_period_grid() { return {}; }

inline void validate_grid(const PeriodGrid& grid) {
    if (grid.periods_ms.empty()) throw ConfigError("period grid must not be empty");
    for (std::size_t i = 0; i < grid.periods_ms.size(); ++i) {
        if (!(grid.periods_ms[i] > 0.0))
            throw ConfigError("period grid entries must be positive");
        if (i > 0 && !(grid.periods_ms[i] > grid.periods_ms[i - 1]))
            throw ConfigError("period grid must be strictly increasing");
    }
}

/// Per-simulation knobs shared across a grid evaluation.
struct SimParams {
    double dwell_ms = 0.125;
    double outage_margin_db = 5.0;
    double bandwidth_hz = 100e6;
};

inline SweepConfig make_sweep_config(const SimParams& p, double period_ms, int n_chains) {
    SweepConfig c;
    c.sweep_period_ms = period_ms;
    c.dwell_ms = p.dwell_ms;
    c.n_chains = n_chains;
    c.outage_margin_db = p.outage_margin_db;
    c.bandwidth_hz = p.bandwidth_hz;
    return c;
}

/// Serving-phase outage fraction of one simulation (sweep slots excluded from
/// numerator and denominator).
inline double outage_likelihood(const SnrTrace& trace, const BeamCodebook& cb, double period_ms,
                                int n_chains, const SimParams& params = {}) {
    return run_simulation(trace, cb, make_sweep_config(params, period_ms, n_chains))
        .outage_fraction;
}

/// Raw grid evaluation: mean rate and outage fraction per (run, n_chains, T).
struct GridResult {
    std::vector<std::string> run_ids;
    std::vector<int> chain_counts;
    std::vector<double> grid_ms;
    // indexed [run][chain index][period index]
    std::vector<std::vector<std::vector<double>>> mean_rate_bps;
    std::vector<std::vector<std::vector<double>>> outage_fraction;
};

/// Runs every (trace, n, T) simulation. Jobs > 1 dispatches simulations to a
/// small worker pool; results are folded back in key order regardless of
/// completion order.
inline GridResult simulate_grid(const std::vector<SnrTrace>& traces, const BeamCodebook& cb,
                                const PeriodGrid& grid, const std::vector<int>& chain_counts,
                                const SimParams& params = {}, int jobs = 1) {
    if (traces.empty()) throw ConfigError("simulate_grid: no traces");
    if (chain_counts.empty()) throw ConfigError("simulate_grid: no chain counts");
    validate_grid(grid);

    GridResult out;
    for (const SnrTrace& t : traces) out.run_ids.push_back(t.run_id);
    out.chain_counts = chain_counts;
    out.grid_ms = grid.periods_ms;

    const std::size_t n_runs = traces.size();
    const std::size_t n_chainsets = chain_counts.size();
    const std::size_t n_periods = grid.periods_ms.size();
    out.mean_rate_bps.assign(n_runs, std::vector<std::vector<double>>(
                                         n_chainsets, std::vector<double>(n_periods, 0.0)));
    out.outage_fraction = out.mean_rate_bps;

    struct Job {
        std::size_t run, chain, period;
    };
    std::vector<Job> jobs_list;
    jobs_list.reserve(n_runs * n_chainsets * n_periods);
    for (std::size_t r = 0; r < n_runs; ++r)
        for (std::size_t c = 0; c < n_chainsets; ++c)
            for (std::size_t p = 0; p < n_periods; ++p) jobs_list.push_back({r, c, p});

    auto run_one = [&](const Job& j) {
        const SweepConfig cfg =
            make_sweep_config(params, grid.periods_ms[j.period], chain_counts[j.chain]);
        const SimResult res = run_simulation(traces[j.run], cb, cfg);
        out.mean_rate_bps[j.run][j.chain][j.period] = res.mean_rate_bps;
        out.outage_fraction[j.run][j.chain][j.period] = res.outage_fraction;
    };

    if (jobs <= 1) {
        for (const Job& j : jobs_list) run_one(j);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs_list.size()) break;
                run_one(jobs_list[i]);
            }
        };
        std::vector<std::future<void>> pool;
        for (int w = 0; w < jobs; ++w) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();  // propagates the first exception
    }
    return out;
}

struct CurvePoint {
    double period_ms = 0.0;
    double mean_rate_bps = 0.0;
    double normalized_rate = 0.0;
    double outage_fraction = 0.0;
};

struct RunCurve {
    std::string run_id;
    std::vector<CurvePoint> points;
};

/// Normalized throughput over the period grid for one chain count: per-run
/// curves plus the ensemble mean of the normalized curves.
struct ThroughputCurve {
    int n_chains = 0;
    std::vector<double> grid_ms;
    std::vector<RunCurve> runs;
    std::vector<double> ensemble_normalized;
};

namespace detail {

inline std::size_t chain_index(const GridResult& table, int n_chains) {
    for (std::size_t i = 0; i < table.chain_counts.size(); ++i)
        if (table.chain_counts[i] == n_chains) return i;
    throw ConfigError("grid result does not contain n_chains=" + std::to_string(n_chains));
}

}  // namespace detail

/// Builds the per-run-normalized curve for one chain count from a grid table.
inline ThroughputCurve curve_from_table(const GridResult& table, int n_chains) {
    const std::size_t ci = detail::chain_index(table, n_chains);
    ThroughputCurve curve;
    curve.n_chains = n_chains;
    curve.grid_ms = table.grid_ms;
    curve.ensemble_normalized.assign(table.grid_ms.size(), 0.0);
    for (std::size_t r = 0; r < table.run_ids.size(); ++r) {
        const auto& rates = table.mean_rate_bps[r][ci];
        const double max_rate = *std::max_element(rates.begin(), rates.end());
        if (!(max_rate > 0.0))
            throw ConfigError("run " + table.run_ids[r] +
                              ": max rate over the grid is 0, cannot normalize");
        RunCurve rc;
        rc.run_id = table.run_ids[r];
        for (std::size_t p = 0; p < table.grid_ms.size(); ++p) {
            CurvePoint pt;
            pt.period_ms = table.grid_ms[p];
            pt.mean_rate_bps = rates[p];
            pt.normalized_rate = rates[p] / max_rate;
            pt.outage_fraction = table.outage_fraction[r][ci][p];
            rc.points.push_back(pt);
            curve.ensemble_normalized[p] += pt.normalized_rate;
        }
        curve.runs.push_back(std::move(rc));
    }
    for (double& v : curve.ensemble_normalized) v /= static_cast<double>(table.run_ids.size());
    return curve;
}

/// Simulates the grid and returns the normalized throughput curve for one
/// chain count.
inline ThroughputCurve throughput_curve(const std::vector<SnrTrace>& traces,
                                        const BeamCodebook& cb, const PeriodGrid& grid,
                                        int n_chains, const SimParams& params = {},
                                        int jobs = 1) {
    return curve_from_table(simulate_grid(traces, cb, grid, {n_chains}, params, jobs), n_chains);
}

/// Argmax of the ensemble mean normalized curve; ties go to the smaller T.
inline double optimal_period(const ThroughputCurve& curve) {
    if (curve.ensemble_normalized.empty() || curve.grid_ms.empty())
        throw ConfigError("optimal_period: empty curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.ensemble_normalized.size(); ++i)
        if (curve.ensemble_normalized[i] > curve.ensemble_normalized[best]) best = i;
    return curve.grid_ms[best];
}

/// One chain count's cross-normalized ensemble curve with its peak and the
/// number of grid periods achieving at least 95% of that peak.
struct ChainCurve {
    int n_chains = 0;
    std::vector<double> ensemble_normalized;
    double peak = 0.0;
    int plateau_points = 0;
};

struct ChainComparison {
    std::vector<double> grid_ms;
    std::vector<ChainCurve> chains;
};

enum class ChainNormalization { CrossChain, PerChain };

/// Builds the chain comparison from a grid table. By default each run is
/// normalized against its maximum across ALL chain counts and periods so the
/// chain gaps survive averaging; PerChain normalizes within each chain count
/// instead.
inline ChainComparison comparison_from_table(
    const GridResult& table, ChainNormalization norm = ChainNormalization::CrossChain) {
    ChainComparison cmp;
    cmp.grid_ms = table.grid_ms;
    const std::size_t n_runs = table.run_ids.size();

    std::vector<double> run_max(n_runs, 0.0);
    for (std::size_t r = 0; r < n_runs; ++r) {
        for (std::size_t c = 0; c < table.chain_counts.size(); ++c)
            for (double v : table.mean_rate_bps[r][c]) run_max[r] = std::max(run_max[r], v);
        if (!(run_max[r] > 0.0))
            throw ConfigError("run " + table.run_ids[r] +
                              ": max rate over the grid is 0, cannot normalize");
    }

    for (std::size_t c = 0; c < table.chain_counts.size(); ++c) {
        ChainCurve cc;
        cc.n_chains = table.chain_counts[c];
        cc.ensemble_normalized.assign(table.grid_ms.size(), 0.0);
        for (std::size_t r = 0; r < n_runs; ++r) {
            double denom = run_max[r];
            if (norm == ChainNormalization::PerChain) {
                denom = *std::max_element(table.mean_rate_bps[r][c].begin(),
                                          table.mean_rate_bps[r][c].end());
                if (!(denom > 0.0))
                    throw ConfigError("run " + table.run_ids[r] +
                                      ": max rate over the grid is 0, cannot normalize");
            }
            for (std::size_t p = 0; p < table.grid_ms.size(); ++p)
                cc.ensemble_normalized[p] += table.mean_rate_bps[r][c][p] / denom;
        }
        for (double& v : cc.ensemble_normalized) v /= static_cast<double>(n_runs);
        cc.peak = *std::max_element(cc.ensemble_normalized.begin(), cc.ensemble_normalized.end());
        for (double v : cc.ensemble_normalized)
            if (v >= 0.95 * cc.peak) ++cc.plateau_points;
        cmp.chains.push_back(std::move(cc));
    }
    return cmp;
}

/// Simulates the grid for every chain count and compares them.
inline ChainComparison chain_comparison(const std::vector<SnrTrace>& traces,
                                        const BeamCodebook& cb, const PeriodGrid& grid,
                                        const SimParams& params = {},
                                        std::vector<int> chain_counts = {1, 2, 4},
                                        int jobs = 1,
                                        ChainNormalization norm = ChainNormalization::CrossChain) {
    return comparison_from_table(simulate_grid(traces, cb, grid, chain_counts, params, jobs),
                                 norm);
}

}  // namespace beamsim
