#pragma once

#include <cmath>
#include <numbers>

#include "beamsim/errors.hpp"

namespace beamsim {

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an azimuth in degrees to [-180, 180).
inline double wrap_azimuth_deg(double az) {
    double a = std::fmod(az + 180.0, 360.0);
    if (a < 0.0) a += 360.0;
    return a - 180.0;
}

/// A pointing direction on the sphere. Azimuth is measured in the horizontal
/// plane, elevation from the horizon; azimuth is kept in [-180, 180),
/// elevation in [-90, 90].
struct Direction {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;

    static Direction normalized(double az_deg, double el_deg) {
        if (!(el_deg >= -90.0 && el_deg <= 90.0))
            throw ConfigError("elevation " + std::to_string(el_deg) +
                              " outside [-90, 90]");
        return Direction{wrap_azimuth_deg(az_deg), el_deg};
    }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

inline double norm(const Vec3& v) {
    return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline Vec3 unit_vector(const Direction& d) {
    const double az = deg2rad(d.azimuth_deg);
    const double el = deg2rad(d.elevation_deg);
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

/// Great-circle angle between two unit vectors, in degrees. The atan2 form is
/// well conditioned for both nearly-parallel and nearly-antipodal pairs.
inline double angular_distance_deg(const Vec3& u, const Vec3& v) {
    const double dot = u.x * v.x + u.y * v.y + u.z * v.z;
    const Vec3 c{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
    return rad2deg(std::atan2(norm(c), dot));
}

/// Great-circle angle between two directions, in degrees ([0, 180]).
inline double angular_distance_deg(const Direction& a, const Direction& b) {
    return angular_distance_deg(unit_vector(a), unit_vector(b));
}

/// Bearing of `to` as seen from `from` (azimuth/elevation in the world frame).
inline Direction direction_from_to(const Vec3& from, const Vec3& to) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    const double dz = to.z - from.z;
    const double ground = std::hypot(dx, dy);
    const double az = rad2deg(std::atan2(dy, dx));
    const double el = rad2deg(std::atan2(dz, ground));
    return Direction::normalized(az, el);
}

}  // namespace beamsim
