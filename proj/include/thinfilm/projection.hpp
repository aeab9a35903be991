#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "thinfilm/energy.hpp"
#include "thinfilm/geometry.hpp"
#include "thinfilm/lattice.hpp"

namespace thinfilm {

/// Averaged and projected spin field Pu: one value in co(S) per projected
/// point, piecewise constant on the 2-D Voronoi cells of the projected points.
/// Columns sharing a projected coordinate are merged before averaging.
struct ProjectedField {
    std::vector<IVec2> points;                // sorted
    std::vector<std::vector<double>> values;  // convex combinations of S

    int find(IVec2 p) const {
        auto it = std::lower_bound(points.begin(), points.end(), p);
        return (it != points.end() && *it == p) ? int(it - points.begin()) : -1;
    }
    const std::vector<double>& value_at(IVec2 p) const {
        const int i = find(p);
        if (i < 0) throw std::out_of_range("ProjectedField: no such projected point");
        return values[std::size_t(i)];
    }
};

inline ProjectedField project_and_average(const ThinLattice& lat, const SpinConfig& u) {
    if (u.lattice != &lat)
        throw std::invalid_argument("project_and_average: config bound to another lattice");
    ProjectedField f;
    const std::size_t dim = u.states.empty() ? 0 : u.states[0].size();
    // sites are lexicographically sorted, so columns are contiguous
    int i = 0;
    const int n = lat.size();
    while (i < n) {
        const IVec2 col{lat.site(i).x, lat.site(i).y};
        std::vector<double> acc(dim, 0.0);
        int count = 0;
        while (i < n && lat.site(i).x == col.x && lat.site(i).y == col.y) {
            if (!u.is_set(i)) throw std::invalid_argument("project_and_average: missing label");
            const auto& s = u.states[u.labels[std::size_t(i)]];
            for (std::size_t k = 0; k < dim; ++k) acc[k] += s[k];
            ++count;
            ++i;
        }
        for (std::size_t k = 0; k < dim; ++k) acc[k] /= double(count);
        f.points.push_back(col);
        f.values.push_back(std::move(acc));
    }
    return f;
}

namespace detail {

/// Voronoi cell of points[i] clipped to the window, by expanding competitor
/// search until no farther site can cut the polygon.
inline Polygon2 projected_cell(const std::vector<IVec2>& points, int i, const Rect& window) {
    const Vec2 s = points[std::size_t(i)].to_vec();
    Polygon2 poly = rect_polygon(window.x0, window.y0, window.x1, window.y1);
    const double window_diam = std::hypot(double(window.x1 - window.x0),
                                          double(window.y1 - window.y0));
    double r = 4.0;
    std::vector<char> used(points.size(), 0);
    while (true) {
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (int(j) == i || used[j]) continue;
            const Vec2 d = points[j].to_vec() - s;
            const double dist = norm(d);
            if (dist > r) continue;
            used[j] = 1;
            // |z - s| <= |z - p_j|  <=>  2 <z, d> <= |p_j|^2 - |s|^2
            const double c = dot(points[j].to_vec(), points[j].to_vec()) - dot(s, s);
            poly = clip_halfplane(poly, 2.0 * d.x, 2.0 * d.y, c);
            if (poly.empty()) return poly;
        }
        double max_vertex = 0.0;
        for (const Vec2& vtx : poly) max_vertex = std::max(max_vertex, norm(vtx - s));
        if (r / 2.0 >= max_vertex || r > 2.0 * window_diam + 8.0) break;
        r *= 2.0;
    }
    return poly;
}

inline Polygon2 intersect_convex(Polygon2 a, const Polygon2& b) {
    for (std::size_t k = 0; k < b.size() && !a.empty(); ++k) {
        const Vec2 p = b[k], q = b[(k + 1) % b.size()];
        a = clip_halfplane(a, q.y - p.y, -(q.x - p.x), (q.y - p.y) * p.x - (q.x - p.x) * p.y);
    }
    return a;
}

inline double value_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(acc);
}

}  // namespace detail

/// Integral over the window of |f - g| for the piecewise-constant
/// interpolations, by exact overlay of the two projected Voronoi partitions.
inline double l1_distance(const ProjectedField& f, const ProjectedField& g, const Rect& window) {
    if (window.empty()) return 0.0;
    if (f.points.empty() || g.points.empty())
        throw std::invalid_argument("l1_distance: empty projected field");

    std::vector<Polygon2> gcells(g.points.size());
    std::vector<std::array<double, 4>> gbox(g.points.size());
    for (std::size_t j = 0; j < g.points.size(); ++j) {
        gcells[j] = detail::projected_cell(g.points, int(j), window);
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Vec2& v : gcells[j]) {
            x0 = std::min(x0, v.x);
            y0 = std::min(y0, v.y);
            x1 = std::max(x1, v.x);
            y1 = std::max(y1, v.y);
        }
        gbox[j] = {x0, y0, x1, y1};
    }

    double total = 0.0;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
        const Polygon2 fcell = detail::projected_cell(f.points, int(i), window);
        if (fcell.empty()) continue;
        double fx0 = 1e300, fy0 = 1e300, fx1 = -1e300, fy1 = -1e300;
        for (const Vec2& v : fcell) {
            fx0 = std::min(fx0, v.x);
            fy0 = std::min(fy0, v.y);
            fx1 = std::max(fx1, v.x);
            fy1 = std::max(fy1, v.y);
        }
        for (std::size_t j = 0; j < g.points.size(); ++j) {
            if (gcells[j].empty() || gbox[j][0] > fx1 || gbox[j][2] < fx0 || gbox[j][1] > fy1 ||
                gbox[j][3] < fy0)
                continue;
            const double dv = detail::value_dist(f.values[i], g.values[j]);
            if (dv == 0.0) continue;
            const Polygon2 overlap = detail::intersect_convex(fcell, gcells[j]);
            if (overlap.size() >= 3) total += dv * polygon_area(overlap);
        }
    }
    return total;
}

}  // namespace thinfilm
