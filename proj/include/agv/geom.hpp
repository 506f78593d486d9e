#pragma once

#include <cmath>

namespace agv {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
}

// Planar (XZ) point/direction. The world is flat; y is carried along as data only.
struct Vec2 {
    double x = 0.0;
    double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.z * s}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Axis-aligned box, stored as center + half-sizes. Only x/z extents matter
// for collisions and rays; y is kept for scene-file round trips.
struct Aabb {
    Vec3 center;
    Vec3 half;
};

inline double planar_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dz * dz);
}

}  // namespace agv
