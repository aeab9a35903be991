#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace thinfilm {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Lattice site with integer coordinates; third coordinate is the slab height.
struct Site {
    int x = 0, y = 0, z = 0;

    bool operator==(const Site&) const = default;
    bool operator<(const Site& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
    Site operator+(const Site& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Site operator-(const Site& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 to_vec() const { return {double(x), double(y), double(z)}; }
    Vec2 proj() const { return {double(x), double(y)}; }
    double norm() const { return std::sqrt(double(x) * x + double(y) * y + double(z) * z); }
    long long norm2() const {
        return (long long)x * x + (long long)y * y + (long long)z * z;
    }
};

struct SiteHash {
    std::size_t operator()(const Site& s) const {
        // pack into 64 bits: 21 bits per signed coordinate
        uint64_t k = (uint64_t(uint32_t(s.x)) & 0x1fffff) |
                     ((uint64_t(uint32_t(s.y)) & 0x1fffff) << 21) |
                     ((uint64_t(uint32_t(s.z)) & 0x1fffff) << 42);
        k ^= k >> 33;
        k *= 0xff51afd7ed558ccdULL;
        k ^= k >> 33;
        return std::size_t(k);
    }
};

struct IVec2 {
    int x = 0, y = 0;
    bool operator==(const IVec2&) const = default;
    bool operator<(const IVec2& o) const { return x != o.x ? x < o.x : y < o.y; }
    IVec2 operator+(IVec2 o) const { return {x + o.x, y + o.y}; }
    IVec2 operator-(IVec2 o) const { return {x - o.x, y - o.y}; }
    IVec2 operator*(int s) const { return {x * s, y * s}; }
    IVec2 operator-() const { return {-x, -y}; }
    Vec2 to_vec() const { return {double(x), double(y)}; }
};

inline long long idot(IVec2 a, IVec2 b) { return (long long)a.x * b.x + (long long)a.y * b.y; }

struct IVec2Hash {
    std::size_t operator()(const IVec2& v) const {
        uint64_t k = (uint64_t(uint32_t(v.x)) << 32) | uint32_t(v.y);
        k *= 0x9e3779b97f4a7c15ULL;
        k ^= k >> 29;
        return std::size_t(k);
    }
};

/// Half-open integer rectangle [x0,x1) x [y0,y1) used for generation regions
/// and axis-aligned energy windows.
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool empty() const { return x1 <= x0 || y1 <= y0; }
    long long columns() const { return empty() ? 0 : (long long)(x1 - x0) * (y1 - y0); }
    double area() const { return empty() ? 0.0 : double(x1 - x0) * double(y1 - y0); }
    bool contains(Vec2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
    bool contains(IVec2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
    bool contains_rect(const Rect& o) const {
        return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
    }
    static Rect centered(int half_x, int half_y) { return {-half_x, -half_y, half_x, half_y}; }
};

/// Oriented rectangular window Q_nu(center, t): side t along nu, side t_perp
/// along the interface direction (t_perp < 0 means a square). Membership is
/// half-open along both axes so that translates tile the plane.
struct OrientedSquare {
    Vec2 center{0.0, 0.0};
    Vec2 nu{0.0, 1.0};  // unit normal to the interface
    double t = 0.0;
    double t_perp = -1.0;

    double side_nu() const { return t; }
    double side_perp() const { return t_perp < 0 ? t : t_perp; }
    Vec2 tangent() const { return {-nu.y, nu.x}; }
    bool contains(Vec2 p) const {
        const Vec2 d = p - center;
        const double a = dot(d, nu), b = dot(d, tangent());
        return a >= -side_nu() / 2 && a < side_nu() / 2 && b >= -side_perp() / 2 &&
               b < side_perp() / 2;
    }
    // Euclidean distance from an interior point to the rectangle boundary
    double boundary_dist(Vec2 p) const {
        const Vec2 d = p - center;
        return std::min(side_nu() / 2 - std::abs(dot(d, nu)),
                        side_perp() / 2 - std::abs(dot(d, tangent())));
    }
    Rect bounding_box(double pad = 0.0) const {
        const double r = std::hypot(side_nu(), side_perp()) / 2 + pad;
        return {int(std::floor(center.x - r)) - 1, int(std::floor(center.y - r)) - 1,
                int(std::ceil(center.x + r)) + 2, int(std::ceil(center.y + r)) + 2};
    }
};

/// Rational interface direction: coprime integer normal plus the primitive
/// generator of Z_nu = { z in Z^2 : <z,nu> = 0 }.
struct RationalDirection {
    IVec2 nu_int{0, 1};   // coprime
    IVec2 z_generator{1, 0};  // primitive, orthogonal to nu_int
    IVec2 coset_step{0, 1};   // completes (z_generator, coset_step) to a Z^2 basis

    Vec2 nu_unit() const {
        const double n = std::sqrt(double(idot(nu_int, nu_int)));
        return {nu_int.x / n, nu_int.y / n};
    }
    double nu_norm() const { return std::sqrt(double(idot(nu_int, nu_int))); }
    // signed distance of z to {nu}^perp
    double band_coord(IVec2 z) const { return double(idot(z, nu_int)) / nu_norm(); }

    static RationalDirection from(IVec2 v);
};

inline int gcd_int(int a, int b) { return std::gcd(std::abs(a), std::abs(b)); }

inline RationalDirection RationalDirection::from(IVec2 v) {
    RationalDirection d;
    const int g = gcd_int(v.x, v.y);
    d.nu_int = (g > 0) ? IVec2{v.x / g, v.y / g} : IVec2{0, 1};
    // primitive orthogonal generator (nu = (0,1) gives (1,0))
    d.z_generator = {d.nu_int.y, -d.nu_int.x};
    // complete to a unimodular basis: h with gx*hy - gy*hx = 1, via extended gcd
    const long long a = d.z_generator.x, b = d.z_generator.y;
    long long r0 = std::llabs(a), r1 = std::llabs(b);
    long long s0 = 1, s1 = 0, t0 = 0, t1 = 1;
    while (r1 != 0) {
        const long long q = r0 / r1;
        const long long r = r0 - q * r1, s = s0 - q * s1, t = t0 - q * t1;
        r0 = r1; r1 = r;
        s0 = s1; s1 = s;
        t0 = t1; t1 = t;
    }
    // s0*|a| + t0*|b| = 1; fold signs back so sa*a + tb*b = 1
    const long long sa = (a < 0) ? -s0 : s0;
    const long long tb = (b < 0) ? -t0 : t0;
    // then a*hy - b*hx = 1 with hy = sa, hx = -tb
    d.coset_step = {int(-tb), int(sa)};
    return d;
}

/// Coordinates of z in the (z_generator, coset_step) basis: z = s*g + t*h.
inline std::pair<long long, long long> lattice_coords(const RationalDirection& d, IVec2 z) {
    const long long gx = d.z_generator.x, gy = d.z_generator.y;
    const long long hx = d.coset_step.x, hy = d.coset_step.y;
    const long long det = gx * hy - gy * hx;  // +1 by construction
    return {(hy * z.x - hx * z.y) / det, (gx * z.y - gy * z.x) / det};
}

// ---------------------------------------------------------------------------
// Convex polygon clipping (Sutherland-Hodgman) with double coordinates.
// Used for Voronoi faces/cells; inputs are bisectors of integer points, so
// genuinely positive areas are far above the clipping tolerance.
// ---------------------------------------------------------------------------

using Polygon2 = std::vector<Vec2>;

/// Clip polygon by the half-plane a*x + b*y <= c.
inline Polygon2 clip_halfplane(const Polygon2& poly, double a, double b, double c) {
    Polygon2 out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly[i], q = poly[(i + 1) % n];
        const double fp = a * p.x + b * p.y - c;
        const double fq = a * q.x + b * q.y - c;
        if (fp <= 0) out.push_back(p);
        if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
            const double s = fp / (fp - fq);
            out.push_back({p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)});
        }
    }
    return out;
}

inline double polygon_area(const Polygon2& poly) {
    double twice = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) twice += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * std::abs(twice);
}

inline Polygon2 rect_polygon(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace thinfilm
