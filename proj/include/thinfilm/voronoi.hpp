#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "thinfilm/geometry.hpp"
#include "thinfilm/lattice.hpp"

namespace thinfilm {

// Voronoi faces of integer point sets have area bounded away from zero when
// they are genuinely (d-1)-dimensional; degenerate intersections (segments,
// points) fall far below this tolerance.
constexpr double kFaceAreaTol = 1e-9;

struct NeighborGraph {
    std::vector<std::pair<int, int>> pairs;  // canonical (a < b), sorted
    std::vector<double> face_areas;

    bool are_neighbors(int a, int b) const {
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        return std::binary_search(pairs.begin(), pairs.end(), key);
    }
    double face_area(int a, int b) const {
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
        return (it != pairs.end() && *it == key) ? face_areas[std::size_t(it - pairs.begin())]
                                                 : 0.0;
    }
};

namespace detail {

/// Area of the shared truncated-Voronoi face of sites x and y: the bisector
/// plane polygon clipped to the slab R^2 x [-2M, 2M], to the cutoff disk's
/// bounding square, and by the bisector half-planes of competing sites.
inline double bisector_face_area(const ThinLattice& lat, const Site& sx, const Site& sy,
                                 double cutoff, const std::vector<int>& competitors) {
    const Vec3 x = sx.to_vec(), y = sy.to_vec();
    const Vec3 n = y - x;
    const double nn = norm(n);
    if (nn == 0.0 || nn > 2.0 * cutoff) return 0.0;
    const Vec3 m = (x + y) * 0.5;

    // in-plane orthonormal basis
    Vec3 ref = std::abs(n.x) <= std::abs(n.y) && std::abs(n.x) <= std::abs(n.z)
                   ? Vec3{1, 0, 0}
                   : (std::abs(n.y) <= std::abs(n.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    Vec3 u = cross(n, ref);
    u = u * (1.0 / norm(u));
    Vec3 v = cross(n, u);
    v = v * (1.0 / norm(v));

    const double rho2 = cutoff * cutoff - nn * nn / 4.0;
    if (rho2 <= 0.0) return 0.0;
    const double rho = std::sqrt(rho2);
    Polygon2 poly = rect_polygon(-rho, -rho, rho, rho);

    // slab truncation [-2M, 2M] on the third coordinate
    const double zmax = 2.0 * std::max(1, lat.slab_height());
    poly = clip_halfplane(poly, u.z, v.z, zmax - m.z);
    poly = clip_halfplane(poly, -u.z, -v.z, zmax + m.z);

    for (int ci : competitors) {
        const Site& sc = lat.site(ci);
        if (sc == sx || sc == sy) continue;
        const Vec3 d = sc.to_vec() - x;
        const double c = dot(sc.to_vec(), sc.to_vec()) - dot(x, x) - 2.0 * dot(m, d);
        poly = clip_halfplane(poly, 2.0 * dot(u, d), 2.0 * dot(v, d), c);
        if (poly.empty()) return 0.0;
    }
    return polygon_area(poly);
}

}  // namespace detail

/// Nearest neighbours of the truncated Voronoi tessellation: pairs whose
/// cells share a face of positive area. Pair (x, y) is included iff the
/// polygon on their bisector plane, clipped to the slab and against all
/// competing sites near the pair, has area above tolerance.
inline NeighborGraph nearest_neighbors(const ThinLattice& lat, double cutoff) {
    NeighborGraph g;
    const auto& sites = lat.sites();
    const int n = int(sites.size());

    // bucket sites for range queries
    const double cell = std::max(1.0, cutoff);
    std::unordered_map<Site, std::vector<int>, SiteHash> buckets;
    auto bucket_of = [&](Vec3 p) {
        return Site{int(std::floor(p.x / cell)), int(std::floor(p.y / cell)),
                    int(std::floor(p.z / cell))};
    };
    for (int i = 0; i < n; ++i) buckets[bucket_of(sites[std::size_t(i)].to_vec())].push_back(i);
    auto gather = [&](Vec3 c, double radius) {
        std::vector<int> out;
        const int reach = int(std::ceil(radius / cell)) + 1;
        const Site b = bucket_of(c);
        for (int dx = -reach; dx <= reach; ++dx)
            for (int dy = -reach; dy <= reach; ++dy)
                for (int dz = -reach; dz <= reach; ++dz) {
                    auto it = buckets.find({b.x + dx, b.y + dy, b.z + dz});
                    if (it == buckets.end()) continue;
                    for (int i : it->second)
                        if (norm(sites[std::size_t(i)].to_vec() - c) <= radius) out.push_back(i);
                }
        return out;
    };

    for (int i = 0; i < n; ++i) {
        const Vec3 xi = sites[std::size_t(i)].to_vec();
        for (int j : gather(xi, cutoff)) {
            if (j <= i) continue;
            const Vec3 m = (xi + sites[std::size_t(j)].to_vec()) * 0.5;
            const double rho = cutoff;  // conservative in-plane extent
            std::vector<int> comp = gather(m, cutoff + rho * std::sqrt(2.0) + 1.0);
            const double area =
                detail::bisector_face_area(lat, sites[std::size_t(i)], sites[std::size_t(j)],
                                           cutoff, comp);
            if (area > kFaceAreaTol) {
                g.pairs.push_back({i, j});
                g.face_areas.push_back(area);
            }
        }
    }
    // canonical order (site order is already sorted, gather order is not)
    std::vector<std::size_t> idx(g.pairs.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return g.pairs[a] < g.pairs[b]; });
    NeighborGraph sorted;
    sorted.pairs.reserve(g.pairs.size());
    sorted.face_areas.reserve(g.pairs.size());
    for (std::size_t k : idx) {
        sorted.pairs.push_back(g.pairs[k]);
        sorted.face_areas.push_back(g.face_areas[k]);
    }
    return sorted;
}

}  // namespace thinfilm
