#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsim/codebook.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/metrics.hpp"
#include "beamsim/scenario.hpp"
#include "beamsim/synth.hpp"
#include "beamsim/trace.hpp"
#include "beamsim/version.hpp"

namespace beamsim {

enum class Normalization { PerRun, CrossChain };

/// One config file drives every subcommand; flags only override file values.
struct ExperimentConfig {
    CodebookParams codebook;
    // exactly one trace source:
    std::vector<std::string> trace_files;
    std::vector<Scenario> scenarios;
    bool use_default_ensemble = false;
    PeriodGrid grid;
    std::vector<int> chain_counts{1, 2, 4};
    SimParams sim;
    std::string out_dir = "out";
    uint64_t seed = 0;
    int jobs = 1;
    Normalization curve_normalization = Normalization::PerRun;
    Normalization chain_normalization = Normalization::CrossChain;
};

namespace detail {

inline Normalization parse_normalization(const std::string& s, const std::string& where) {
    if (s == "per-run") return Normalization::PerRun;
    if (s == "cross-chain") return Normalization::CrossChain;
    throw ConfigError(where + ": expected 'per-run' or 'cross-chain', got '" + s + "'");
}

inline const char* normalization_name(Normalization n) {
    return n == Normalization::PerRun ? "per-run" : "cross-chain";
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    detail::reject_unknown_keys(
        j,
        {"codebook", "traces", "scenarios", "preset", "period_grid_ms", "n_chains", "dwell_ms",
         "outage_margin_db", "bandwidth_hz", "out_dir", "seed", "jobs", "curve_normalization",
         "chain_normalization"},
        "config");

    ExperimentConfig cfg;
    if (j.contains("codebook")) {
        const auto& c = j.at("codebook");
        detail::reject_unknown_keys(c,
                                    {"face_boresights_deg", "beams_per_face", "az_halfspan_deg",
                                     "el_halfspan_deg", "hpbw_deg", "peak_gain_dbi"},
                                    "config.codebook");
        if (c.contains("face_boresights_deg"))
            cfg.codebook.face_boresights_deg =
                c.at("face_boresights_deg").get<std::vector<double>>();
        if (c.contains("beams_per_face"))
            cfg.codebook.beams_per_face = c.at("beams_per_face").get<int>();
        if (c.contains("az_halfspan_deg"))
            cfg.codebook.az_halfspan_deg = c.at("az_halfspan_deg").get<double>();
        if (c.contains("el_halfspan_deg"))
            cfg.codebook.el_halfspan_deg = c.at("el_halfspan_deg").get<double>();
        if (c.contains("hpbw_deg")) cfg.codebook.hpbw_deg = c.at("hpbw_deg").get<double>();
        if (c.contains("peak_gain_dbi"))
            cfg.codebook.peak_gain_dbi = c.at("peak_gain_dbi").get<double>();
    }

    int sources = 0;
    if (j.contains("traces")) {
        cfg.trace_files = j.at("traces").get<std::vector<std::string>>();
        ++sources;
    }
    if (j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios")) cfg.scenarios.push_back(scenario_from_json(s));
        ++sources;
    }
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        if (preset != "default-nlos")
            throw ConfigError("config.preset: unknown preset '" + preset + "'");
        cfg.use_default_ensemble = true;
        ++sources;
    }
    if (sources > 1)
        throw ConfigError("config: 'traces', 'scenarios' and 'preset' are mutually exclusive");

    if (j.contains("period_grid_ms"))
        cfg.grid.periods_ms = j.at("period_grid_ms").get<std::vector<double>>();
    validate_grid(cfg.grid);
    if (j.contains("n_chains")) cfg.chain_counts = j.at("n_chains").get<std::vector<int>>();
    if (cfg.chain_counts.empty()) throw ConfigError("config.n_chains: must not be empty");
    if (j.contains("dwell_ms")) cfg.sim.dwell_ms = j.at("dwell_ms").get<double>();
    if (j.contains("outage_margin_db"))
        cfg.sim.outage_margin_db = j.at("outage_margin_db").get<double>();
    if (j.contains("bandwidth_hz")) cfg.sim.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (cfg.jobs < 1) throw ConfigError("config.jobs: must be >= 1");
    if (j.contains("curve_normalization"))
        cfg.curve_normalization = detail::parse_normalization(
            j.at("curve_normalization").get<std::string>(), "config.curve_normalization");
    if (j.contains("chain_normalization"))
        cfg.chain_normalization = detail::parse_normalization(
            j.at("chain_normalization").get<std::string>(), "config.chain_normalization");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// Canonical JSON for the result-affecting part of the config (sorted keys,
/// no whitespace), hashed for provenance. Execution details that cannot
/// change the outputs (out_dir, jobs) are excluded.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["codebook"] = {{"face_boresights_deg", cfg.codebook.face_boresights_deg},
                     {"beams_per_face", cfg.codebook.beams_per_face},
                     {"az_halfspan_deg", cfg.codebook.az_halfspan_deg},
                     {"el_halfspan_deg", cfg.codebook.el_halfspan_deg},
                     {"hpbw_deg", cfg.codebook.hpbw_deg},
                     {"peak_gain_dbi", cfg.codebook.peak_gain_dbi}};
    if (!cfg.trace_files.empty()) j["traces"] = cfg.trace_files;
    if (!cfg.scenarios.empty()) {
        auto arr = nlohmann::json::array();
        for (const Scenario& s : cfg.scenarios) arr.push_back(scenario_to_json(s));
        j["scenarios"] = arr;
    }
    if (cfg.use_default_ensemble) j["preset"] = "default-nlos";
    j["period_grid_ms"] = cfg.grid.periods_ms;
    j["n_chains"] = cfg.chain_counts;
    j["dwell_ms"] = cfg.sim.dwell_ms;
    j["outage_margin_db"] = cfg.sim.outage_margin_db;
    j["bandwidth_hz"] = cfg.sim.bandwidth_hz;
    j["seed"] = cfg.seed;
    j["curve_normalization"] = detail::normalization_name(cfg.curve_normalization);
    j["chain_normalization"] = detail::normalization_name(cfg.chain_normalization);
    return j;
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
    return buf;
}

/// Resolves the configured trace source: loads files or synthesizes from
/// scenarios (deterministic).
inline std::vector<SnrTrace> resolve_traces(const ExperimentConfig& cfg, const BeamCodebook& cb) {
    std::vector<SnrTrace> traces;
    if (!cfg.trace_files.empty()) {
        for (const std::string& path : cfg.trace_files) {
            if (!std::filesystem::exists(path))
                throw ConfigError("trace file not found: " + path);
            traces.push_back(load_trace(path, cb.size()));
        }
    } else {
        std::vector<Scenario> scenarios = cfg.scenarios;
        if (cfg.use_default_ensemble) scenarios = default_nlos_ensemble(cfg.seed);
        if (scenarios.empty())
            throw ConfigError("config: need one trace source ('traces', 'scenarios' or 'preset')");
        for (const Scenario& sc : scenarios) traces.push_back(synthesize_trace(sc, cb));
    }
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t k = i + 1; k < traces.size(); ++k)
            if (traces[i].run_id == traces[k].run_id)
                throw ConfigError("duplicate run_id: " + traces[i].run_id);
    return traces;
}

/// In-memory result of `analyze`: the two deliverable files as strings.
struct AnalysisOutput {
    std::string results_csv;
    std::string summary_json;
};

namespace detail {

inline std::string fmt_g(double v, const char* fmt = "%.12g") {
    char buf[40];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace detail

/// Runs the full grid analysis. Deterministic: identical configs (including
/// seeds) produce identical strings, regardless of the jobs count.
inline AnalysisOutput run_analysis(const ExperimentConfig& cfg) {
    const BeamCodebook cb = build_codebook(cfg.codebook);
    const std::vector<SnrTrace> traces = resolve_traces(cfg, cb);
    const GridResult table =
        simulate_grid(traces, cb, cfg.grid, cfg.chain_counts, cfg.sim, cfg.jobs);

    // ---- results CSV (rows sorted by run_id, then n_chains, then T) ----
    struct Row {
        std::string run_id;
        int n_chains;
        double t_ms, rate, norm, outage;
    };
    std::vector<Row> rows;
    for (std::size_t c = 0; c < table.chain_counts.size(); ++c) {
        ThroughputCurve curve = curve_from_table(table, table.chain_counts[c]);
        for (const RunCurve& rc : curve.runs)
            for (const CurvePoint& pt : rc.points)
                rows.push_back({rc.run_id, curve.n_chains, pt.period_ms, pt.mean_rate_bps,
                                pt.normalized_rate, pt.outage_fraction});
    }
    if (cfg.curve_normalization == Normalization::CrossChain) {
        // normalized column against each run's cross-chain max instead
        std::vector<double> run_max(table.run_ids.size(), 0.0);
        for (std::size_t r = 0; r < table.run_ids.size(); ++r)
            for (std::size_t c = 0; c < table.chain_counts.size(); ++c)
                for (double v : table.mean_rate_bps[r][c])
                    run_max[r] = std::max(run_max[r], v);
        for (Row& row : rows) {
            for (std::size_t r = 0; r < table.run_ids.size(); ++r)
                if (table.run_ids[r] == row.run_id && run_max[r] > 0.0)
                    row.norm = row.rate / run_max[r];
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.run_id != b.run_id) return a.run_id < b.run_id;
        if (a.n_chains != b.n_chains) return a.n_chains < b.n_chains;
        return a.t_ms < b.t_ms;
    });
    std::ostringstream csv;
    csv << "run_id,n_chains,T_ms,mean_rate_bps,normalized_rate,outage_fraction\n";
    for (const Row& r : rows)
        csv << r.run_id << ',' << r.n_chains << ',' << detail::fmt_g(r.t_ms, "%.10g") << ','
            << detail::fmt_g(r.rate) << ',' << detail::fmt_g(r.norm) << ','
            << detail::fmt_g(r.outage) << '\n';

    // ---- summary JSON ----
    nlohmann::json summary;
    summary["tool_version"] = kVersion;
    summary["config_hash"] = config_hash(cfg);
    summary["grid_ms"] = table.grid_ms;
    summary["chain_counts"] = table.chain_counts;

    nlohmann::json per_chain = nlohmann::json::object();
    for (int n : table.chain_counts) {
        ThroughputCurve curve = curve_from_table(table, n);
        nlohmann::json entry;
        entry["ensemble_normalized"] = curve.ensemble_normalized;
        entry["optimal_period_ms"] = optimal_period(curve);
        nlohmann::json outage = nlohmann::json::object();
        const std::size_t ci = detail::chain_index(table, n);
        for (std::size_t p = 0; p < table.grid_ms.size(); ++p) {
            double mean_outage = 0.0;
            for (std::size_t r = 0; r < table.run_ids.size(); ++r)
                mean_outage += table.outage_fraction[r][ci][p];
            outage[detail::fmt_g(table.grid_ms[p], "%.10g")] =
                mean_outage / static_cast<double>(table.run_ids.size());
        }
        entry["mean_outage_fraction"] = outage;
        per_chain[std::to_string(n)] = entry;
    }
    summary["per_chain"] = per_chain;

    const ChainComparison cmp = comparison_from_table(
        table, cfg.chain_normalization == Normalization::CrossChain
                   ? ChainNormalization::CrossChain
                   : ChainNormalization::PerChain);
    nlohmann::json chains = nlohmann::json::object();
    for (const ChainCurve& cc : cmp.chains) {
        chains[std::to_string(cc.n_chains)] = {{"cross_normalized", cc.ensemble_normalized},
                                               {"peak", cc.peak},
                                               {"plateau_points", cc.plateau_points}};
    }
    summary["chain_comparison"] = chains;

    nlohmann::json provenance;
    provenance["config_hash"] = config_hash(cfg);
    provenance["run_ids"] = table.run_ids;
    std::vector<uint64_t> seeds;
    if (cfg.use_default_ensemble)
        for (const Scenario& s : default_nlos_ensemble(cfg.seed)) seeds.push_back(s.seed);
    for (const Scenario& s : cfg.scenarios) seeds.push_back(s.seed);
    provenance["seeds"] = seeds;
    provenance["tool_version"] = kVersion;
    summary["provenance"] = provenance;

    AnalysisOutput out;
    out.results_csv = csv.str();
    out.summary_json = summary.dump(2) + "\n";
    return out;
}

/// Writes a file atomically (temp-then-rename).
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace beamsim
