#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "thinfilm/groundstate.hpp"
#include "thinfilm/rng.hpp"

using namespace thinfilm;

namespace {

/// Random dyadic-valued kernel (multiples of 1/16) on the unit offsets plus
/// an optional in-plane diagonal; exactly representable at the capacity scale.
Kernel random_kernel(SplitMix& rng, bool with_diagonal = false) {
    std::vector<std::pair<Site, double>> entries;
    for (const Site& u : Kernel::unit_offsets())
        entries.push_back({u, double(1 + int(rng.next_below(16))) / 16.0});
    double range = 1.0;
    if (with_diagonal) {
        const double v = double(int(rng.next_below(8))) / 16.0;
        entries.push_back({{1, 1, 0}, v});
        entries.push_back({{-1, -1, 0}, v});
        range = 1.5;
    }
    return Kernel(range, entries);
}

struct RandomInstance {
    ThinLattice lat;
    Kernel kernel;
    SpinConfig boundary;
    Window window;
    double trace_width = -1.0;
};

/// Small random instance: random lattice, random kernel, random frozen ring.
RandomInstance make_instance(SplitMix& rng, int max_free = 16) {
    RandomInstance inst{generate_layered(0, {0, 0, 1, 1}), Kernel::nearest_neighbor(1.0),
                        SpinConfig{}, Window::axis({0, 0, 1, 1})};
    while (true) {
        const int w = 3 + int(rng.next_below(3));
        const int h = 3 + int(rng.next_below(2));
        const int M = int(rng.next_below(2));
        inst.lat = (rng.next_double() < 0.5)
                       ? generate_layered(M, {0, 0, w, h})
                       : generate_deposition({0.6, M, {0, 0, w, h}, rng.next()});
        inst.kernel = random_kernel(rng, rng.next_double() < 0.3);
        inst.window = Window::axis({0, 0, w, h});
        inst.boundary = SpinConfig::empty_two_state(inst.lat);
        int free_count = 0;
        for (int i = 0; i < inst.lat.size(); ++i) {
            const Site& s = inst.lat.site(i);
            const bool edge = s.x == 0 || s.x == w - 1 || s.y == 0 || s.y == h - 1;
            if (edge)
                inst.boundary.set_spin(i, rng.next_double() < 0.5 ? -1 : +1, true);
            else
                ++free_count;
        }
        if (free_count >= 1 && free_count <= max_free) return inst;
    }
}

/// Exhaustive minimum by enumerating every labelling of the free sites and
/// re-evaluating with the energy module (independent of the cut reduction).
double exhaustive_min(const RandomInstance& inst, SpinConfig* argmin = nullptr,
                      std::vector<SpinConfig>* all_minimizers = nullptr) {
    std::vector<int> free;
    for (int i = 0; i < inst.lat.size(); ++i)
        if (!inst.boundary.frozen[std::size_t(i)]) free.push_back(i);
    SpinConfig cfg = inst.boundary;
    double best = 1e300;
    for (uint64_t mask = 0; mask < (1ULL << free.size()); ++mask) {
        for (std::size_t b = 0; b < free.size(); ++b)
            cfg.set_spin(free[b], (mask >> b) & 1 ? +1 : -1);
        const double e = energy(inst.lat, inst.kernel, cfg, inst.window).total;
        if (e < best - 1e-12) {
            best = e;
            if (argmin) *argmin = cfg;
            if (all_minimizers) {
                all_minimizers->clear();
                all_minimizers->push_back(cfg);
            }
        } else if (all_minimizers && e < best + 1e-12) {
            all_minimizers->push_back(cfg);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("fully frozen window gives an empty instance carrying the boundary energy") {
    const ThinLattice lat = generate_layered(0, {0, 0, 3, 3});
    const Kernel k = Kernel::nearest_neighbor(1.0);
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    for (int i = 0; i < lat.size(); ++i) boundary.set_spin(i, lat.site(i).x < 1 ? -1 : +1, true);
    const Window w = Window::axis({0, 0, 3, 3});
    const CutInstance inst = build_cut_instance(lat, k, boundary, w, 2.0);
    CHECK(inst.free_count() == 0);
    CHECK(inst.frozen_offset == doctest::Approx(energy(lat, k, boundary, w).total));
    const GroundState gs = solve_mincut(inst, k);
    CHECK(gs.energy == doctest::Approx(inst.frozen_offset));
}

TEST_CASE("single free site between opposite frozen neighbours has symmetric ties") {
    const ThinLattice lat =
        ThinLattice::from_sites({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, 0, {0, 0, 3, 1});
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    boundary.set_spin(lat.index_of({0, 0, 0}), +1, true);
    boundary.set_spin(lat.index_of({2, 0, 0}), -1, true);
    const CutInstance inst = build_cut_instance(lat, Kernel::nearest_neighbor(1.0), boundary,
                                                Window::axis({0, 0, 3, 1}), -1.0);
    REQUIRE(inst.free_count() == 1);
    CHECK(inst.source_ties[0] == 4.0);
    CHECK(inst.sink_ties[0] == 4.0);
}

TEST_CASE("unfixed site inside the trace band is rejected") {
    const ThinLattice lat = generate_layered(0, {0, 0, 4, 4});
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    CHECK_THROWS_AS(build_cut_instance(lat, Kernel::nearest_neighbor(1.0), boundary,
                                       Window::axis({0, 0, 4, 4}), 1.0),
                    std::invalid_argument);
}

TEST_CASE("min-cut equals the exhaustive oracle on random small instances") {
    SplitMix rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        const RandomInstance ri = make_instance(rng);
        const CutInstance ci =
            build_cut_instance(ri.lat, ri.kernel, ri.boundary, ri.window, ri.trace_width);
        const GroundState gs = solve_mincut(ci, ri.kernel);
        const double oracle = exhaustive_min(ri);
        CHECK(gs.energy == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(gs.energy == doctest::Approx(gs.cut_value).epsilon(1e-9));
    }
}

TEST_CASE("minimal minimizer: degenerate chain returns the fewest +1 labels") {
    const ThinLattice lat = ThinLattice::from_sites(
        {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, 0, {0, 0, 4, 1});
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    boundary.set_spin(lat.index_of({0, 0, 0}), +1, true);
    boundary.set_spin(lat.index_of({3, 0, 0}), -1, true);
    const Kernel k = Kernel::nearest_neighbor(1.0);
    const CutInstance ci = build_cut_instance(lat, k, boundary, Window::axis({0, 0, 4, 1}), -1.0);
    const GroundState gs = minimal_minimizer(ci, k);
    CHECK(gs.minimal_flag);
    CHECK(gs.energy == doctest::Approx(4.0));
    CHECK(gs.config.spin(lat.index_of({1, 0, 0})) == -1);
    CHECK(gs.config.spin(lat.index_of({2, 0, 0})) == -1);
}

TEST_CASE("minimizer set is a lattice and the minimal minimizer is its bottom") {
    SplitMix rng(202);
    for (int trial = 0; trial < 10; ++trial) {
        const RandomInstance ri = make_instance(rng, 12);
        std::vector<SpinConfig> minimizers;
        const double best = exhaustive_min(ri, nullptr, &minimizers);
        const CutInstance ci =
            build_cut_instance(ri.lat, ri.kernel, ri.boundary, ri.window, ri.trace_width);
        const GroundState gs = minimal_minimizer(ci, ri.kernel);
        CHECK(gs.energy == doctest::Approx(best).epsilon(1e-12));
        for (const SpinConfig& m : minimizers)
            for (int i = 0; i < ri.lat.size(); ++i)
                CHECK(gs.config.spin(i) <= m.spin(i));
        // pointwise min and max of two exhaustive minimizers stay minimizers
        if (minimizers.size() >= 2) {
            SpinConfig lo = minimizers[0], hi = minimizers[0];
            for (int i = 0; i < ri.lat.size(); ++i) {
                lo.set_spin(i, std::min(minimizers[0].spin(i), minimizers[1].spin(i)));
                hi.set_spin(i, std::max(minimizers[0].spin(i), minimizers[1].spin(i)));
            }
            CHECK(energy(ri.lat, ri.kernel, lo, ri.window).total ==
                  doctest::Approx(best).epsilon(1e-12));
            CHECK(energy(ri.lat, ri.kernel, hi, ri.window).total ==
                  doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("ground states restrict to ground states on sub-windows") {
    SplitMix rng(303);
    const ThinLattice lat = generate_deposition({0.7, 2, {0, 0, 10, 10}, 9});
    const Kernel k = Kernel::nearest_neighbor(1.0);
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    for (int i = 0; i < lat.size(); ++i) {
        const Site& s = lat.site(i);
        if (s.x <= 1 || s.x >= 8 || s.y <= 1 || s.y >= 8)
            boundary.set_spin(i, s.y >= 5 ? +1 : -1, true);
    }
    const Window big = Window::axis({0, 0, 10, 10});
    const GroundState gs = solve_mincut(build_cut_instance(lat, k, boundary, big, 1.0), k);

    for (int trial = 0; trial < 8; ++trial) {
        const int x0 = int(rng.next_below(4)), y0 = int(rng.next_below(4));
        const Rect sub{x0, y0, x0 + 5 + int(rng.next_below(2)), y0 + 5};
        
        SpinConfig sub_boundary = gs.config;
        std::fill(sub_boundary.frozen.begin(), sub_boundary.frozen.end(), 0);
        const Window sw = Window::axis(sub);
        for (int i = 0; i < lat.size(); ++i) {
            const Vec2 p = lat.site(i).proj();
            if (!sw.contains(p)) continue;
            const double bd = std::min(std::min(p.x - sub.x0, sub.x1 - p.x),
                                       std::min(p.y - sub.y0, sub.y1 - p.y));
            if (bd <= k.range()) sub_boundary.frozen[std::size_t(i)] = 1;
        }
        const GroundState re =
            solve_mincut(build_cut_instance(lat, k, sub_boundary, sw, k.range()), k);
        const double current = energy(lat, k, gs.config, sw).total;
        CHECK(re.energy == doctest::Approx(current).epsilon(1e-9));
    }
}

TEST_CASE("multi-state solver: q=2 agrees with min-cut, q=3 against brute force") {
    SplitMix rng(404);
    for (int trial = 0; trial < 6; ++trial) {
        const RandomInstance ri = make_instance(rng, 9);
        const CutInstance ci =
            build_cut_instance(ri.lat, ri.kernel, ri.boundary, ri.window, ri.trace_width);
        const GroundState via_cut = solve_mincut(ci, ri.kernel);
        const GroundState via_ms =
            solve_multistate(ri.lat, ri.kernel, ri.boundary, ri.window);
        CHECK(via_ms.energy == doctest::Approx(via_cut.energy).epsilon(1e-12));
    }

    // q = 3 Potts states on a 3x3 single layer
    const ThinLattice lat = generate_layered(0, {0, 0, 3, 3});
    SpinConfig boundary;
    boundary.lattice = &lat;
    boundary.states = {{0.0}, {1.0}, {2.0}};
    boundary.labels.assign(std::size_t(lat.size()), SpinConfig::kUnset);
    boundary.frozen.assign(std::size_t(lat.size()), 0);

    SUBCASE("constant boundary forces the constant ground state") {
        SpinConfig b2 = boundary;
        for (int i = 0; i < lat.size(); ++i) {
            const Site& s = lat.site(i);
            if (s.x == 0 || s.x == 2 || s.y == 0 || s.y == 2) {
                b2.labels[std::size_t(i)] = 0;
                b2.frozen[std::size_t(i)] = 1;
            }
        }
        const GroundState gs =
            solve_multistate(lat, Kernel::nearest_neighbor(1.0), b2, Window::axis({0, 0, 3, 3}));
        CHECK(gs.energy == 0.0);
        for (int i = 0; i < lat.size(); ++i) CHECK(gs.config.labels[std::size_t(i)] == 0);
    }

    SUBCASE("random three-state boundaries match 3^9 enumeration") {
        SplitMix r2(11);
        for (int trial = 0; trial < 4; ++trial) {
            SpinConfig b2 = boundary;
            for (int i = 0; i < lat.size(); ++i) {
                const Site& s = lat.site(i);
                if (s.x == 0 || s.x == 2) {
                    b2.labels[std::size_t(i)] = uint8_t(r2.next_below(3));
                    b2.frozen[std::size_t(i)] = 1;
                }
            }
            const Kernel k = Kernel::nearest_neighbor(1.0);
            const Window w = Window::axis({0, 0, 3, 3});
            const GroundState gs = solve_multistate(lat, k, b2, w);
            // brute force over the free sites
            std::vector<int> free;
            for (int i = 0; i < lat.size(); ++i)
                if (!b2.frozen[std::size_t(i)]) free.push_back(i);
            double best = 1e300;
            SpinConfig cfg = b2;
            std::vector<int> digits(free.size(), 0);
            while (true) {
                for (std::size_t d = 0; d < free.size(); ++d)
                    cfg.labels[std::size_t(free[d])] = uint8_t(digits[d]);
                best = std::min(best, energy(lat, k, cfg, w).total);
                std::size_t d = 0;
                for (; d < digits.size(); ++d) {
                    if (++digits[d] < 3) break;
                    digits[d] = 0;
                }
                if (d == digits.size()) break;
            }
            CHECK(gs.energy == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("volume-constrained solver on chains and random windows") {
    // 4-site chain, counts (2,2), free boundary: two-block optimum of energy 4
    const ThinLattice chain = ThinLattice::from_sites(
        {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}, 0, {0, 0, 4, 1});
    const Kernel k = Kernel::nearest_neighbor(1.0);
    SpinConfig b = SpinConfig::empty_two_state(chain);
    const GroundState gs =
        solve_volume_constrained(chain, k, b, Window::axis({0, 0, 4, 1}), 2, 2);
    CHECK(gs.energy == doctest::Approx(4.0));
    CHECK_FALSE(gs.approximate);

    // infeasible counts rejected
    CHECK_THROWS_AS(
        solve_volume_constrained(chain, k, b, Window::axis({0, 0, 4, 1}), 1, 2),
        std::invalid_argument);

    // counts matching the unconstrained minimizer reproduce its energy
    SplitMix rng(505);
    for (int trial = 0; trial < 4; ++trial) {
        const RandomInstance ri = make_instance(rng, 12);
        const CutInstance ci =
            build_cut_instance(ri.lat, ri.kernel, ri.boundary, ri.window, ri.trace_width);
        const GroundState un = solve_mincut(ci, ri.kernel);
        long long plus = 0, minus = 0;
        for (int i = 0; i < ri.lat.size(); ++i) {
            if (!ri.window.contains(ri.lat.site(i))) continue;
            (un.config.spin(i) > 0 ? plus : minus)++;
        }
        const GroundState vc = solve_volume_constrained(ri.lat, ri.kernel, ri.boundary,
                                                        ri.window, minus, plus);
        CHECK(vc.energy == doctest::Approx(un.energy).epsilon(1e-12));
    }

    // random 4x4 single layer with balanced counts vs exhaustive enumeration
    const ThinLattice flat = generate_layered(0, {0, 0, 4, 4});
    SpinConfig fb = SpinConfig::empty_two_state(flat);
    SplitMix r3(606);
    const Kernel rk = random_kernel(r3);
    const GroundState vc =
        solve_volume_constrained(flat, rk, fb, Window::axis({0, 0, 4, 4}), 8, 8);
    double best = 1e300;
    SpinConfig cfg = SpinConfig::two_state(flat);
    for (uint32_t mask = 0; mask < (1u << 16); ++mask) {
        if (__builtin_popcount(mask) != 8) continue;
        for (int i = 0; i < 16; ++i) cfg.set_spin(i, (mask >> i) & 1 ? +1 : -1);
        best = std::min(best, energy(flat, rk, cfg, Window::axis({0, 0, 4, 4})).total);
    }
    CHECK(vc.energy == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("capacity overflow at the integer scale is rejected with a factor") {
    const ThinLattice lat = ThinLattice::from_sites({{0, 0, 0}, {1, 0, 0}}, 0, {0, 0, 2, 1});
    const Kernel huge = Kernel::nearest_neighbor(1.0e14);
    SpinConfig boundary = SpinConfig::empty_two_state(lat);
    const CutInstance ci =
        build_cut_instance(lat, huge, boundary, Window::axis({0, 0, 2, 1}), -1.0);
    CHECK_THROWS_AS(solve_mincut(ci, huge), std::overflow_error);
    try {
        solve_mincut(ci, huge);
    } catch (const std::overflow_error& e) {
        CHECK(std::string(e.what()).find("rescale") != std::string::npos);
    }
}

TEST_CASE("projected densities: exact on layered grids, p*M+1 on deposition") {
    std::vector<Rect> windows{{-8, -8, 8, 8}, {-12, -12, 12, 12}, {-16, -16, 16, 16}};
    const ThinLattice layered = generate_layered(2, {-16, -16, 16, 16});
    const DensityEstimate d3 = estimate_density(layered, windows);
    CHECK(d3.gamma0 == doctest::Approx(3.0).epsilon(1e-12));

    const ThinLattice flat = generate_layered(0, {-16, -16, 16, 16});
    CHECK(estimate_density(flat, windows).gamma0 == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<Rect> wide{{-16, -16, 16, 16}, {-24, -24, 24, 24}, {-32, -32, 32, 32}};
    const ThinLattice dep = generate_deposition({0.5, 10, {-32, -32, 32, 32}, 21});
    const DensityEstimate dd = estimate_density(dep, wide);
    CHECK(dd.gamma0 == doctest::Approx(6.0).epsilon(0.02));
}
