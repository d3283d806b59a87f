// beamsim: desk-scale mmWave V2I beam-sweep experiments.
//
// Subcommands:
//   codebook   write the receive codebook CSV and print its coverage stats
//   synth      synthesize per-scenario SNR trace CSVs plus a manifest
//   analyze    run the sweep-period / RX-chain grid and write results

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beamsim/codebook.hpp"
#include "beamsim/experiment.hpp"
#include "beamsim/metrics.hpp"
#include "beamsim/scenario.hpp"
#include "beamsim/synth.hpp"
#include "beamsim/trace.hpp"
#include "beamsim/version.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int jobs = 0;
};

beamsim::ExperimentConfig effective_config(const CliOptions& opt) {
    beamsim::ExperimentConfig cfg;
    if (!opt.config_path.empty()) cfg = beamsim::load_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.seed >= 0) cfg.seed = static_cast<uint64_t>(opt.seed);
    if (opt.jobs > 0) cfg.jobs = opt.jobs;
    return cfg;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw beamsim::IoError("cannot create output directory " + dir + ": " + ec.message());
}

int cmd_codebook(const CliOptions& opt) {
    const auto cfg = effective_config(opt);
    const auto cb = beamsim::build_codebook(cfg.codebook);
    ensure_out_dir(cfg.out_dir);
    const std::string path = (fs::path(cfg.out_dir) / "codebook.csv").string();
    beamsim::write_codebook_csv(cb, path);
    const double covering = beamsim::covering_radius_deg(cb, 0.25, cfg.codebook.el_halfspan_deg);
    std::printf("codebook: %d beams on %d faces -> %s\n", cb.size(), cb.face_count(),
                path.c_str());
    std::printf("covering radius (0.25 deg grid): %.4f deg\n", covering);
    return 0;
}

int cmd_synth(const CliOptions& opt) {
    const auto cfg = effective_config(opt);
    std::vector<beamsim::Scenario> scenarios = cfg.scenarios;
    if (cfg.use_default_ensemble) scenarios = beamsim::default_nlos_ensemble(cfg.seed);
    if (scenarios.empty())
        throw beamsim::ConfigError("synth: config needs 'scenarios' or 'preset'");

    const auto cb = beamsim::build_codebook(cfg.codebook);
    ensure_out_dir(cfg.out_dir);

    nlohmann::json manifest;
    manifest["config_hash"] = beamsim::config_hash(cfg);
    manifest["tool_version"] = beamsim::kVersion;
    auto files = nlohmann::json::array();
    std::vector<uint64_t> seeds;
    std::vector<std::string> run_ids;
    for (const auto& sc : scenarios) {
        const auto trace = beamsim::synthesize_trace(sc, cb);
        const std::string path = (fs::path(cfg.out_dir) / (sc.run_id + ".csv")).string();
        beamsim::write_trace(trace, path);
        files.push_back(path);
        seeds.push_back(sc.seed);
        run_ids.push_back(sc.run_id);
        std::printf("synth: %s (%d samples x %d beams) -> %s\n", sc.run_id.c_str(), trace.rows(),
                    trace.n_beams, path.c_str());
    }
    manifest["files"] = files;
    manifest["seeds"] = seeds;
    manifest["run_ids"] = run_ids;
    beamsim::write_file_atomic((fs::path(cfg.out_dir) / "manifest.json").string(),
                               manifest.dump(2) + "\n");
    return 0;
}

int cmd_analyze(const CliOptions& opt) {
    const auto cfg = effective_config(opt);
    const auto output = beamsim::run_analysis(cfg);
    ensure_out_dir(cfg.out_dir);
    beamsim::write_file_atomic((fs::path(cfg.out_dir) / "results.csv").string(),
                               output.results_csv);
    beamsim::write_file_atomic((fs::path(cfg.out_dir) / "summary.json").string(),
                               output.summary_json);
    std::printf("analyze: wrote %s and %s\n",
                (fs::path(cfg.out_dir) / "results.csv").string().c_str(),
                (fs::path(cfg.out_dir) / "summary.json").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave V2I beam-sweep period simulator"};
    app.set_version_flag("--version", beamsim::kVersion);
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "experiment config JSON");
    app.add_option("--out", opt.out_dir, "output directory (overrides config)");
    app.add_option("--seed", opt.seed, "base seed (overrides config)");
    app.add_option("--jobs", opt.jobs, "parallel workers (overrides config)");

    auto* codebook = app.add_subcommand("codebook", "write the beam codebook CSV");
    auto* synth = app.add_subcommand("synth", "synthesize SNR traces from scenarios");
    auto* analyze = app.add_subcommand("analyze", "run the sweep-period grid analysis");
    for (auto* sub : {codebook, synth, analyze}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (codebook->parsed()) return cmd_codebook(opt);
        if (synth->parsed()) return cmd_synth(opt);
        if (analyze->parsed()) return cmd_analyze(opt);
    } catch (const beamsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
