// Small planar geometry kit shared by the whole library: vectors, boxes,
// polar helpers, and closed-form areas for the region shapes we use.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fragnorm {

inline constexpr double kTau = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline Vec2 normalized(Vec2 a) {
    double n = norm(a);
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {a.x / n, a.y / n};
}
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

struct Box {
    Vec2 lo, hi;

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    bool contains(const Box& b) const {
        return b.lo.x >= lo.x && b.lo.y >= lo.y && b.hi.x <= hi.x && b.hi.y <= hi.y;
    }
    Box united(const Box& b) const {
        return {{std::min(lo.x, b.lo.x), std::min(lo.y, b.lo.y)},
                {std::max(hi.x, b.hi.x), std::max(hi.y, b.hi.y)}};
    }
    Box inflated(double m) const { return {{lo.x - m, lo.y - m}, {hi.x + m, hi.y + m}}; }
};

// Angle in [0, tau) of p relative to origin c.
inline double polar_angle(Vec2 p, Vec2 c) {
    double a = std::atan2(p.y - c.y, p.x - c.x);
    if (a < 0.0) a += kTau;
    if (a >= kTau) a -= kTau;
    return a;
}

inline double wrap_tau(double a) {
    a = std::fmod(a, kTau);
    if (a < 0.0) a += kTau;
    return a;
}

inline Vec2 rotate_about(Vec2 c, Vec2 p, double angle) {
    double s = std::sin(angle), co = std::cos(angle);
    Vec2 d = p - c;
    return {c.x + co * d.x - s * d.y, c.y + s * d.x + co * d.y};
}

// Distance from point p to segment [a, b].
inline double segment_distance(Vec2 a, Vec2 b, Vec2 p) {
    Vec2 ab = b - a;
    double len2 = norm2(ab);
    if (len2 == 0.0) return norm(p - a);
    double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return norm(p - (a + ab * t));
}

// ---- closed-form areas ------------------------------------------------

inline double disc_area(double r) { return std::numbers::pi * r * r; }
inline double annulus_area(double r0, double r1) {
    return std::numbers::pi * (r1 * r1 - r0 * r0);
}
// Annular sector spanning `width` radians between radii r0 < r1.
inline double annular_sector_area(double r0, double r1, double width) {
    return 0.5 * width * (r1 * r1 - r0 * r0);
}
// Intersection of two round discs with center distance d (lens).
inline double disc_lens_area(double r0, double r1, double d) {
    if (d >= r0 + r1) return 0.0;
    if (d <= std::abs(r0 - r1)) return disc_area(std::min(r0, r1));
    double a0 = std::acos(std::clamp((d * d + r0 * r0 - r1 * r1) / (2 * d * r0), -1.0, 1.0));
    double a1 = std::acos(std::clamp((d * d + r1 * r1 - r0 * r0) / (2 * d * r1), -1.0, 1.0));
    return r0 * r0 * (a0 - std::sin(a0) * std::cos(a0)) +
           r1 * r1 * (a1 - std::sin(a1) * std::cos(a1));
}

// ---- deterministic splittable RNG --------------------------------------
// splitmix64: every (seed, index) pair yields an independent value, so
// sampling order never depends on thread scheduling.

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform01(uint64_t seed, uint64_t index) {
    // 53 random bits into [0,1).
    return double(splitmix64(seed ^ splitmix64(index)) >> 11) * 0x1.0p-53;
}

inline Vec2 box_sample(const Box& b, uint64_t seed, uint64_t index) {
    return {b.lo.x + b.width() * uniform01(seed, 2 * index),
            b.lo.y + b.height() * uniform01(seed, 2 * index + 1)};
}

} // namespace fragnorm
