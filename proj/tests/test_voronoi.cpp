#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <tuple>

#include "thinfilm/kernel.hpp"
#include "thinfilm/voronoi.hpp"

using namespace thinfilm;

namespace {

/// All unit-distance axis pairs of a lattice, the known answer for full grids.
std::set<std::pair<int, int>> unit_axis_pairs(const ThinLattice& lat) {
    std::set<std::pair<int, int>> out;
    for (int i = 0; i < lat.size(); ++i)
        for (const Site& off : Kernel::unit_offsets()) {
            const int j = lat.index_of(lat.site(i) + off);
            if (j > i) out.insert({i, j});
        }
    return out;
}

}  // namespace

TEST_CASE("full slab grids have exactly the unit-axis neighbour pairs") {
    for (const auto& [nx, ny, M] : std::vector<std::tuple<int, int, int>>{
             {4, 4, 1}, {5, 3, 2}, {8, 8, 4}}) {
        const ThinLattice lat = generate_layered(M, {0, 0, nx, ny});
        const NeighborGraph g = nearest_neighbors(lat, 3.0);
        const auto expect = unit_axis_pairs(lat);
        std::set<std::pair<int, int>> got(g.pairs.begin(), g.pairs.end());
        CHECK(got == expect);
        for (double a : g.face_areas) CHECK(a > kFaceAreaTol);
    }
}

TEST_CASE("two isolated points are neighbours with positive truncated face") {
    const ThinLattice lat = ThinLattice::from_sites({{0, 0, 0}, {4, 0, 1}}, 2, {0, 0, 5, 1});
    const NeighborGraph g = nearest_neighbors(lat, 10.0);
    REQUIRE(g.pairs.size() == 1);
    CHECK(g.are_neighbors(0, 1));
    CHECK(g.face_areas[0] > 1.0);  // unbounded face, clipped by slab and cutoff
}

TEST_CASE("vacancy degenerates the opposite-pair face to a point") {
    // full slab except the origin: (1,0,0) and (-1,0,0) share only a
    // zero-dimensional bisector set, so they are not neighbours
    std::vector<Site> sites;
    for (int x = -3; x <= 3; ++x)
        for (int y = -3; y <= 3; ++y)
            for (int z = 0; z <= 2; ++z)
                if (!(x == 0 && y == 0 && z == 0)) sites.push_back({x, y, z});
    const ThinLattice lat = ThinLattice::from_sites(sites, 2, {-3, -3, 4, 4});
    const NeighborGraph g = nearest_neighbors(lat, 2.5);
    const int a = lat.index_of({1, 0, 0});
    const int b = lat.index_of({-1, 0, 0});
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    CHECK_FALSE(g.are_neighbors(a, b));
    // sanity: in-plane pairs around the hole stay intact
    CHECK(g.are_neighbors(lat.index_of({1, 0, 0}), lat.index_of({1, 1, 0})));
}

TEST_CASE("neighbour relation is symmetric and canonically ordered") {
    const ThinLattice lat = generate_deposition({0.5, 2, {0, 0, 5, 5}, 31});
    const NeighborGraph g = nearest_neighbors(lat, 4.0);
    for (std::size_t k = 0; k < g.pairs.size(); ++k) {
        CHECK(g.pairs[k].first < g.pairs[k].second);
        CHECK(g.are_neighbors(g.pairs[k].second, g.pairs[k].first));
        if (k) CHECK(g.pairs[k - 1] < g.pairs[k]);
    }
}
