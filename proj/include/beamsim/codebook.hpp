#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/angles.hpp"
#include "beamsim/errors.hpp"

namespace beamsim {

// RX phased-array module: 3 dB beamwidth and boresight gain.
inline constexpr double kRxHpbwDeg = 16.8;
inline constexpr double kRxPeakGainDbi = 43.3;
// TX phased-array module.
inline constexpr double kTxHpbwDeg = 54.1;
inline constexpr double kTxPeakGainDbi = 36.8;
// Sidelobe floor of the parabolic pattern model, dB below peak.
inline constexpr double kSidelobeFloorDb = 30.0;

struct Beam {
    int id = 0;
    int face = 0;
    Direction boresight;
    double hpbw_deg = kRxHpbwDeg;
    double peak_gain_dbi = kRxPeakGainDbi;
};

struct TxPattern {
    Direction boresight;
    double hpbw_deg = kTxHpbwDeg;
    double peak_gain_dbi = kTxPeakGainDbi;
};

/// The receive codebook: beams in id order, grouped face-major.
struct BeamCodebook {
    std::vector<Beam> beams;
    std::vector<double> face_boresights_deg{0.0, 90.0, 180.0, -90.0};

    int size() const { return static_cast<int>(beams.size()); }
    int face_count() const { return static_cast<int>(face_boresights_deg.size()); }
};

struct CodebookParams {
    std::vector<double> face_boresights_deg{0.0, 90.0, 180.0, -90.0};
    int beams_per_face = 50;
    double az_halfspan_deg = 45.0;
    double el_halfspan_deg = 30.0;
    double hpbw_deg = kRxHpbwDeg;
    double peak_gain_dbi = kRxPeakGainDbi;
};

/// Parabolic main lobe clipped at a constant sidelobe floor:
/// gain(psi) = peak - min(12 (psi/hpbw)^2, 30) dBi.
inline double pattern_gain_dbi(double peak_gain_dbi, double hpbw_deg, double off_axis_deg) {
    const double ratio = off_axis_deg / hpbw_deg;
    return peak_gain_dbi - std::min(12.0 * ratio * ratio, kSidelobeFloorDb);
}

inline double beam_gain_dbi(const Beam& beam, const Direction& toward) {
    return pattern_gain_dbi(beam.peak_gain_dbi, beam.hpbw_deg,
                            angular_distance_deg(beam.boresight, toward));
}

inline double tx_gain_dbi(const TxPattern& pattern, const Direction& toward) {
    return pattern_gain_dbi(pattern.peak_gain_dbi, pattern.hpbw_deg,
                            angular_distance_deg(pattern.boresight, toward));
}

/// Row/column counts realizing beams_per_face on the staggered lattice:
/// 1 collapses to the face boresight, otherwise 2*r^2 gives r rows of 2r beams.
inline std::pair<int, int> lattice_shape(int beams_per_face) {
    if (beams_per_face == 1) return {1, 1};
    if (beams_per_face >= 2) {
        const int r = static_cast<int>(std::lround(std::sqrt(beams_per_face / 2.0)));
        if (r >= 1 && 2 * r * r == beams_per_face) return {r, 2 * r};
    }
    throw ConfigError("beams_per_face=" + std::to_string(beams_per_face) +
                      " does not fit the row/column lattice (expected 1 or 2*r^2)");
}

/// Builds the hexagonally staggered per-face lattice. Rows sit at cell-center
/// elevations; odd rows are shifted right by half a column. Beam ids run
/// face-major, then row-major (bottom row first), then by ascending azimuth.
inline BeamCodebook build_codebook(const CodebookParams& params = {}) {
    if (!(params.az_halfspan_deg > 0.0) || !(params.el_halfspan_deg > 0.0))
        throw ConfigError("codebook az_halfspan_deg/el_halfspan_deg must be positive");
    if (params.el_halfspan_deg > 90.0)
        throw ConfigError("codebook el_halfspan_deg must not exceed 90");
    if (params.face_boresights_deg.empty())
        throw ConfigError("codebook needs at least one face boresight");
    if (!(params.hpbw_deg > 0.0) || !std::isfinite(params.peak_gain_dbi))
        throw ConfigError("codebook hpbw_deg must be positive and peak gain finite");

    const auto [rows, cols] = lattice_shape(params.beams_per_face);
    const double el_step = 2.0 * params.el_halfspan_deg / rows;
    const double az_step = 2.0 * params.az_halfspan_deg / cols;

    BeamCodebook cb;
    cb.face_boresights_deg = params.face_boresights_deg;
    cb.beams.reserve(params.face_boresights_deg.size() * params.beams_per_face);
    int id = 0;
    for (std::size_t f = 0; f < params.face_boresights_deg.size(); ++f) {
        const double face_az = params.face_boresights_deg[f];
        for (int r = 0; r < rows; ++r) {
            const double el = -params.el_halfspan_deg + (r + 0.5) * el_step;
            const double stagger = (r % 2 == 1) ? az_step / 2.0 : 0.0;
            for (int c = 0; c < cols; ++c) {
                const double az_off = -params.az_halfspan_deg + (c + 0.5) * az_step + stagger;
                cb.beams.push_back(Beam{id++, static_cast<int>(f),
                                        Direction::normalized(face_az + az_off, el),
                                        params.hpbw_deg, params.peak_gain_dbi});
            }
        }
    }
    return cb;
}

/// Id of the beam whose boresight is closest to `toward`; ties go to the
/// lowest id.
inline int nearest_beam(const BeamCodebook& cb, const Direction& toward) {
    if (cb.beams.empty()) throw ConfigError("nearest_beam: empty codebook");
    const Vec3 t = unit_vector(toward);
    int best_id = cb.beams.front().id;
    double best = std::numeric_limits<double>::infinity();
    for (const Beam& b : cb.beams) {
        const double d = angular_distance_deg(unit_vector(b.boresight), t);
        if (d < best) {
            best = d;
            best_id = b.id;
        }
    }
    return best_id;
}

/// Max over a dense azimuth/elevation grid of the great-circle distance to
/// the nearest boresight, within the +/-el_halfspan segment.
inline double covering_radius_deg(const BeamCodebook& cb, double step_deg = 0.25,
                                  double el_halfspan_deg = 30.0) {
    if (cb.beams.empty()) throw ConfigError("covering_radius_deg: empty codebook");
    if (!(step_deg > 0.0)) throw ConfigError("covering_radius_deg: step must be positive");
    std::vector<Vec3> units;
    units.reserve(cb.beams.size());
    for (const Beam& b : cb.beams) units.push_back(unit_vector(b.boresight));

    const long n_az = std::lround(std::floor(360.0 / step_deg));
    const long n_el = std::lround(std::floor(2.0 * el_halfspan_deg / step_deg)) + 1;
    double worst_dot = 1.0;
    for (long j = 0; j < n_el; ++j) {
        const double el = -el_halfspan_deg + j * step_deg;
        for (long i = 0; i < n_az; ++i) {
            const double az = -180.0 + i * step_deg;
            const Vec3 p = unit_vector(Direction{az, el});
            double best = -1.0;
            for (const Vec3& u : units) {
                const double dot = u.x * p.x + u.y * p.y + u.z * p.z;
                if (dot > best) best = dot;
            }
            if (best < worst_dot) worst_dot = best;
        }
    }
    return rad2deg(std::acos(std::clamp(worst_dot, -1.0, 1.0)));
}

/// Minimum pairwise great-circle distance between beam boresights.
inline double min_separation_deg(const BeamCodebook& cb) {
    if (cb.beams.size() < 2) throw ConfigError("min_separation_deg: need at least two beams");
    std::vector<Vec3> units;
    units.reserve(cb.beams.size());
    for (const Beam& b : cb.beams) units.push_back(unit_vector(b.boresight));
    double best = 180.0;
    for (std::size_t i = 0; i < units.size(); ++i)
        for (std::size_t j = i + 1; j < units.size(); ++j)
            best = std::min(best, angular_distance_deg(units[i], units[j]));
    return best;
}

/// Minimum pairwise boresight spacing in lattice coordinates,
/// sqrt(wrapped_dAz^2 + dEl^2). This is the metric in which the default
/// lattice's spacing equals its 9 deg column pitch.
inline double min_grid_separation_deg(const BeamCodebook& cb) {
    if (cb.beams.size() < 2)
        throw ConfigError("min_grid_separation_deg: need at least two beams");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cb.beams.size(); ++i) {
        for (std::size_t j = i + 1; j < cb.beams.size(); ++j) {
            const Direction& a = cb.beams[i].boresight;
            const Direction& b = cb.beams[j].boresight;
            const double daz = wrap_azimuth_deg(a.azimuth_deg - b.azimuth_deg);
            const double del = a.elevation_deg - b.elevation_deg;
            best = std::min(best, std::hypot(daz, del));
        }
    }
    return best;
}

/// Codebook CSV: `beam_id,face,azimuth_deg,elevation_deg,hpbw_deg,peak_gain_dbi`.
inline void write_codebook_csv(const BeamCodebook& cb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "beam_id,face,azimuth_deg,elevation_deg,hpbw_deg,peak_gain_dbi\n";
    char line[256];
    for (const Beam& b : cb.beams) {
        std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.6f,%.6f,%.6f\n", b.id, b.face,
                      b.boresight.azimuth_deg, b.boresight.elevation_deg, b.hpbw_deg,
                      b.peak_gain_dbi);
        out << line;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace beamsim
