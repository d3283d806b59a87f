#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsim/angles.hpp"
#include "beamsim/codebook.hpp"
#include "beamsim/errors.hpp"

namespace beamsim {

struct Scatterer {
    Vec3 position_m;
    double reflection_loss_db = 0.0;
};

/// Two-state Markov blockage, sampled at the trace cadence. Rates are per
/// second; loss is drawn once per blocking event.
struct BlockageModel {
    double p_block_per_s = 0.2;
    double p_unblock_per_s = 1.0;
    double loss_db_min = 10.0;
    double loss_db_max = 20.0;
};

/// Geometric/mobility/blockage description used to synthesize an SnrTrace.
struct Scenario {
    std::string run_id = "run";
    uint64_t seed = 0;
    Vec3 tx_position_m{0.0, 0.0, 2.9};
    TxPattern tx_pattern;
    bool tx_auto_aim = true;  // aim the TX at the route midpoint
    double rx_height_m = 2.4;
    std::vector<std::array<double, 2>> waypoints_m{{0.0, 50.0}};  // ground polyline
    double speed_mps = 4.69;
    double duration_s = 15.0;
    double carrier_ghz = 28.3;
    double bandwidth_hz = 100e6;
    double noise_figure_db = 7.0;
    double tx_power_dbm = 0.0;
    std::vector<Scatterer> scatterers;
    BlockageModel blockage;
    bool los_present = true;
};

inline void validate_scenario(const Scenario& sc) {
    if (sc.run_id.empty()) throw ConfigError("scenario: run_id must not be empty");
    if (!(sc.duration_s > 0.0)) throw ConfigError("scenario: duration_s must be positive");
    if (!(sc.speed_mps >= 0.0)) throw ConfigError("scenario: speed_mps must be >= 0");
    if (sc.waypoints_m.empty()) throw ConfigError("scenario: waypoints_m must not be empty");
    if (!(sc.carrier_ghz > 0.0)) throw ConfigError("scenario: carrier_ghz must be positive");
    if (!(sc.bandwidth_hz > 0.0)) throw ConfigError("scenario: bandwidth_hz must be positive");
    if (!(sc.blockage.loss_db_min <= sc.blockage.loss_db_max))
        throw ConfigError("scenario: blockage loss_db_min must be <= loss_db_max");
    if (sc.blockage.p_block_per_s < 0.0 || sc.blockage.p_block_per_s > 1.0 ||
        sc.blockage.p_unblock_per_s < 0.0 || sc.blockage.p_unblock_per_s > 1.0)
        throw ConfigError("scenario: blockage probabilities must lie in [0, 1]");
    if (!sc.los_present && sc.scatterers.empty())
        throw ConfigError("scenario: need at least one path source (LOS or scatterers)");
    for (const Scatterer& s : sc.scatterers)
        if (!(s.reflection_loss_db >= 0.0))
            throw ConfigError("scenario: scatterer reflection_loss_db must be >= 0");
    for (const auto& wp : sc.waypoints_m) {
        const Vec3 rx{wp[0], wp[1], sc.rx_height_m};
        if (distance(rx, sc.tx_position_m) < 1e-9)
            throw ConfigError("scenario: RX waypoint coincident with TX (zero distance)");
    }
}

/// RX position after traveling `t_s` seconds along the waypoint polyline at
/// constant speed; clamps at the final waypoint.
inline Vec3 rx_position_at(const Scenario& sc, double t_s) {
    double remaining = sc.speed_mps * t_s;
    for (std::size_t i = 0; i + 1 < sc.waypoints_m.size(); ++i) {
        const auto& a = sc.waypoints_m[i];
        const auto& b = sc.waypoints_m[i + 1];
        const double seg = std::hypot(b[0] - a[0], b[1] - a[1]);
        if (remaining <= seg || seg == 0.0) {
            const double f = seg == 0.0 ? 0.0 : remaining / seg;
            return {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), sc.rx_height_m};
        }
        remaining -= seg;
    }
    const auto& last = sc.waypoints_m.back();
    return {last[0], last[1], sc.rx_height_m};
}

/// Midpoint of the polyline by arc length (the default TX aim point).
inline Vec3 route_midpoint(const Scenario& sc) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < sc.waypoints_m.size(); ++i)
        total += std::hypot(sc.waypoints_m[i + 1][0] - sc.waypoints_m[i][0],
                            sc.waypoints_m[i + 1][1] - sc.waypoints_m[i][1]);
    double remaining = total / 2.0;
    for (std::size_t i = 0; i + 1 < sc.waypoints_m.size(); ++i) {
        const auto& a = sc.waypoints_m[i];
        const auto& b = sc.waypoints_m[i + 1];
        const double seg = std::hypot(b[0] - a[0], b[1] - a[1]);
        if (remaining <= seg || seg == 0.0) {
            const double f = seg == 0.0 ? 0.0 : remaining / seg;
            return {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), sc.rx_height_m};
        }
        remaining -= seg;
    }
    return {sc.waypoints_m.back()[0], sc.waypoints_m.back()[1], sc.rx_height_m};
}

/// TX pattern with the boresight resolved (auto-aim points at the route
/// midpoint).
inline TxPattern resolved_tx_pattern(const Scenario& sc) {
    TxPattern p = sc.tx_pattern;
    if (sc.tx_auto_aim) p.boresight = direction_from_to(sc.tx_position_m, route_midpoint(sc));
    return p;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

/// Parses a scenario JSON object. Unknown keys are rejected.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
    detail::reject_unknown_keys(
        j,
        {"run_id", "seed", "tx_position_m", "tx_height_m", "tx_pattern", "rx_height_m",
         "waypoints_m", "speed_mps", "duration_s", "carrier_ghz", "bandwidth_hz",
         "noise_figure_db", "tx_power_dbm", "scatterers", "blockage", "los_present"},
        "scenario");

    Scenario sc;
    if (j.contains("run_id")) sc.run_id = j.at("run_id").get<std::string>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<uint64_t>();
    if (j.contains("tx_position_m"))
        sc.tx_position_m = detail::parse_vec3(j.at("tx_position_m"), "scenario.tx_position_m");
    if (j.contains("tx_height_m")) sc.tx_position_m.z = j.at("tx_height_m").get<double>();
    if (j.contains("rx_height_m")) sc.rx_height_m = j.at("rx_height_m").get<double>();
    if (j.contains("waypoints_m")) {
        sc.waypoints_m.clear();
        for (const auto& wp : j.at("waypoints_m")) {
            if (!wp.is_array() || wp.size() != 2)
                throw ConfigError("scenario.waypoints_m: expected [x, y] pairs");
            sc.waypoints_m.push_back({wp[0].get<double>(), wp[1].get<double>()});
        }
    }
    if (j.contains("speed_mps")) sc.speed_mps = j.at("speed_mps").get<double>();
    if (j.contains("duration_s")) sc.duration_s = j.at("duration_s").get<double>();
    if (j.contains("carrier_ghz")) sc.carrier_ghz = j.at("carrier_ghz").get<double>();
    if (j.contains("bandwidth_hz")) sc.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    if (j.contains("noise_figure_db")) sc.noise_figure_db = j.at("noise_figure_db").get<double>();
    if (j.contains("tx_power_dbm")) sc.tx_power_dbm = j.at("tx_power_dbm").get<double>();
    if (j.contains("tx_pattern")) {
        const auto& p = j.at("tx_pattern");
        detail::reject_unknown_keys(
            p, {"azimuth_deg", "elevation_deg", "hpbw_deg", "peak_gain_dbi"},
            "scenario.tx_pattern");
        if (p.contains("hpbw_deg")) sc.tx_pattern.hpbw_deg = p.at("hpbw_deg").get<double>();
        if (p.contains("peak_gain_dbi"))
            sc.tx_pattern.peak_gain_dbi = p.at("peak_gain_dbi").get<double>();
        if (p.contains("azimuth_deg") || p.contains("elevation_deg")) {
            sc.tx_auto_aim = false;
            sc.tx_pattern.boresight = Direction::normalized(
                p.value("azimuth_deg", 0.0), p.value("elevation_deg", 0.0));
        }
    }
    if (j.contains("scatterers")) {
        for (const auto& s : j.at("scatterers")) {
            detail::reject_unknown_keys(s, {"position_m", "reflection_loss_db"},
                                        "scenario.scatterers[]");
            Scatterer sc_item;
            sc_item.position_m = detail::parse_vec3(s.at("position_m"),
                                                    "scenario.scatterers[].position_m");
            sc_item.reflection_loss_db = s.value("reflection_loss_db", 0.0);
            sc.scatterers.push_back(sc_item);
        }
    }
    if (j.contains("blockage")) {
        const auto& b = j.at("blockage");
        detail::reject_unknown_keys(
            b, {"p_block_per_s", "p_unblock_per_s", "loss_db_min", "loss_db_max"},
            "scenario.blockage");
        sc.blockage.p_block_per_s = b.value("p_block_per_s", sc.blockage.p_block_per_s);
        sc.blockage.p_unblock_per_s = b.value("p_unblock_per_s", sc.blockage.p_unblock_per_s);
        sc.blockage.loss_db_min = b.value("loss_db_min", sc.blockage.loss_db_min);
        sc.blockage.loss_db_max = b.value("loss_db_max", sc.blockage.loss_db_max);
    }
    if (j.contains("los_present")) sc.los_present = j.at("los_present").get<bool>();
    validate_scenario(sc);
    return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    j["run_id"] = sc.run_id;
    j["seed"] = sc.seed;
    j["tx_position_m"] = {sc.tx_position_m.x, sc.tx_position_m.y, sc.tx_position_m.z};
    if (!sc.tx_auto_aim) {
        j["tx_pattern"] = {{"azimuth_deg", sc.tx_pattern.boresight.azimuth_deg},
                           {"elevation_deg", sc.tx_pattern.boresight.elevation_deg},
                           {"hpbw_deg", sc.tx_pattern.hpbw_deg},
                           {"peak_gain_dbi", sc.tx_pattern.peak_gain_dbi}};
    } else {
        j["tx_pattern"] = {{"hpbw_deg", sc.tx_pattern.hpbw_deg},
                           {"peak_gain_dbi", sc.tx_pattern.peak_gain_dbi}};
    }
    j["rx_height_m"] = sc.rx_height_m;
    auto wps = nlohmann::json::array();
    for (const auto& wp : sc.waypoints_m) wps.push_back({wp[0], wp[1]});
    j["waypoints_m"] = wps;
    j["speed_mps"] = sc.speed_mps;
    j["duration_s"] = sc.duration_s;
    j["carrier_ghz"] = sc.carrier_ghz;
    j["bandwidth_hz"] = sc.bandwidth_hz;
    j["noise_figure_db"] = sc.noise_figure_db;
    j["tx_power_dbm"] = sc.tx_power_dbm;
    auto scs = nlohmann::json::array();
    for (const auto& s : sc.scatterers)
        scs.push_back({{"position_m", {s.position_m.x, s.position_m.y, s.position_m.z}},
                       {"reflection_loss_db", s.reflection_loss_db}});
    j["scatterers"] = scs;
    j["blockage"] = {{"p_block_per_s", sc.blockage.p_block_per_s},
                     {"p_unblock_per_s", sc.blockage.p_unblock_per_s},
                     {"loss_db_min", sc.blockage.loss_db_min},
                     {"loss_db_max", sc.blockage.loss_db_max}};
    j["los_present"] = sc.los_present;
    return j;
}

namespace detail {

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + salt + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// The six-run NLOS-style synthetic ensemble: 15 s drive-bys at 4.69 m/s past
/// a TX at 2.9 m, no LOS, three fixed scatterers per run, Markov blockage.
/// Geometry draws use a stream mixed from the seed so the blockage stream
/// consumed by synthesis stays disjoint.
inline std::vector<Scenario> default_nlos_ensemble(uint64_t base_seed = 0) {
    std::vector<Scenario> runs;
    for (int i = 0; i < 6; ++i) {
        const uint64_t seed = base_seed + static_cast<uint64_t>(i);
        std::mt19937_64 g(detail::mix_seed(seed, 0xC0DEB00CULL));
        auto u = [&] { return detail::uniform01(g); };

        Scenario sc;
        sc.run_id = "NL" + std::to_string(i + 1);
        sc.seed = seed;
        sc.tx_position_m = {0.0, 0.0, 2.9};
        sc.rx_height_m = 2.4;
        sc.speed_mps = 4.69;
        sc.duration_s = 15.0;
        sc.los_present = false;
        const double standoff = 30.0 + 15.0 * u();
        const double half = sc.speed_mps * sc.duration_s / 2.0;
        sc.waypoints_m = {{-half, standoff}, {half, standoff}};
        sc.scatterers.clear();
        for (int s = 0; s < 3; ++s) {
            Scatterer sct;
            sct.position_m = {-45.0 + 90.0 * u(), 10.0 + 50.0 * u(), 2.0 + 6.0 * u()};
            sct.reflection_loss_db = 15.0 + 10.0 * u();
            sc.scatterers.push_back(sct);
        }
        validate_scenario(sc);
        runs.push_back(sc);
    }
    return runs;
}

}  // namespace beamsim
