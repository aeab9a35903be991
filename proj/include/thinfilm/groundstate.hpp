#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "thinfilm/energy.hpp"
#include "thinfilm/maxflow.hpp"
#include "thinfilm/stats.hpp"

namespace thinfilm {

// Fixed label-to-cut-side convention: +1 is the source side. Minimal-minimizer
// extraction (smallest source side via residual reachability) depends on it.
// Capacities are scaled to integers by kCapacityScale before the flow solve.
constexpr int64_t kCapacityScale = 1 << 20;

struct CutInstance {
    const ThinLattice* lattice = nullptr;
    Window window;
    SpinConfig boundary;              // frozen labels set, free labels unset
    std::vector<int> free_sites;      // lattice site indices, ascending
    struct PairWeight {
        int a, b;      // positions into free_sites
        double w;      // 2*(c(y-x) + c(x-y))
    };
    std::vector<PairWeight> pair_weights;
    std::vector<double> source_ties;  // interaction with frozen +1, paid when site is -1
    std::vector<double> sink_ties;    // interaction with frozen -1, paid when site is +1
    double frozen_offset = 0.0;       // frozen-frozen energy inside window

    int free_count() const { return int(free_sites.size()); }
};

struct GroundState {
    SpinConfig config;
    double energy = 0.0;      // energy-module evaluation on the instance window
    double cut_value = 0.0;   // offset + min-cut value (scaled back)
    bool minimal_flag = false;
    bool approximate = false;
};

namespace detail {

inline std::vector<Site> symmetric_offsets(const Kernel& kernel) {
    std::vector<Site> offs = active_offsets(kernel);
    const std::size_t n = offs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Site neg{-offs[i].x, -offs[i].y, -offs[i].z};
        if (std::find(offs.begin(), offs.end(), neg) == offs.end()) offs.push_back(neg);
    }
    std::sort(offs.begin(), offs.end());
    return offs;
}

}  // namespace detail

/// Reduce the two-state energy with frozen boundary data to an s-t cut
/// instance. `trace_width` is validated: every window site that close to the
/// window boundary must carry a frozen label.
inline CutInstance build_cut_instance(const ThinLattice& lat, const Kernel& kernel,
                                      const SpinConfig& boundary, const Window& window,
                                      double trace_width) {
    if (boundary.lattice != &lat)
        throw std::invalid_argument("build_cut_instance: config bound to another lattice");
    if (boundary.q() != 2) throw std::invalid_argument("build_cut_instance: two-state only");

    CutInstance inst;
    inst.lattice = &lat;
    inst.window = window;
    inst.boundary = boundary;

    std::vector<int> pos(std::size_t(lat.size()), -1);
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (!window.contains(x)) continue;
        const bool frozen = boundary.frozen[std::size_t(i)] && boundary.is_set(i);
        const double bd = window.kind == Window::Kind::Oriented
                              ? window.square.boundary_dist(x.proj())
                              : std::min(std::min(x.proj().x - window.rect.x0,
                                                  window.rect.x1 - x.proj().x),
                                         std::min(x.proj().y - window.rect.y0,
                                                  window.rect.y1 - x.proj().y));
        if (!frozen && bd <= trace_width)
            throw std::invalid_argument("build_cut_instance: unfixed site within trace width");
        if (!frozen) {
            pos[std::size_t(i)] = int(inst.free_sites.size());
            inst.free_sites.push_back(i);
        }
    }
    inst.source_ties.assign(inst.free_sites.size(), 0.0);
    inst.sink_ties.assign(inst.free_sites.size(), 0.0);

    const std::vector<Site> offsets = detail::symmetric_offsets(kernel);
    std::map<std::pair<int, int>, double> acc;
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (!window.contains(x)) continue;
        const bool i_free = pos[std::size_t(i)] >= 0;
        for (const Site& off : offsets) {
            const Site y = x + off;
            const int j = lat.index_of(y);
            if (j < 0 || !window.contains(y)) continue;
            const bool j_free = pos[std::size_t(j)] >= 0;
            if (i_free && j_free) {
                // each unordered pair collects 2c(x,y) from this side and
                // 2c(y,x) from the other, totalling 2(c(y-x)+c(x-y))
                const double c = kernel.eval(x, y);
                if (c > 0.0)
                    acc[{std::min(pos[std::size_t(i)], pos[std::size_t(j)]),
                         std::max(pos[std::size_t(i)], pos[std::size_t(j)])}] += 2.0 * c;
            } else if (i_free && !j_free) {
                const double w = 2.0 * (kernel.eval(x, y) + kernel.eval(y, x));
                if (w <= 0.0) continue;
                if (boundary.spin(j) > 0)
                    inst.source_ties[std::size_t(pos[std::size_t(i)])] += w;
                else
                    inst.sink_ties[std::size_t(pos[std::size_t(i)])] += w;
            } else if (!i_free && !j_free) {
                // ordered pair visited once from each base site
                inst.frozen_offset +=
                    kernel.eval(x, y) * boundary.state_dist(boundary.labels[std::size_t(i)],
                                                            boundary.labels[std::size_t(j)]);
            }
        }
    }
    inst.pair_weights.reserve(acc.size());
    for (const auto& [key, w] : acc)
        if (w > 0.0) inst.pair_weights.push_back({key.first, key.second, w});
    return inst;
}

namespace detail {

inline int64_t scale_capacity(double w) {
    const double scaled = w * double(kCapacityScale);
    if (scaled > 9.0e18)
        throw std::overflow_error(
            "capacity overflow at integer scale 2^20; rescale kernel by " +
            std::to_string(scaled / 9.0e18));
    return (int64_t)std::llround(scaled);
}

}  // namespace detail

/// Exact two-state ground state via min-cut; always extracts the pointwise
/// minimal minimizer (smallest +1 set) from residual reachability.
inline GroundState solve_mincut(const CutInstance& inst, const Kernel& kernel) {
    const int n = inst.free_count();
    MaxFlow mf(n + 2);
    const int src = n, snk = n + 1;
    int64_t total_cap = 0;
    for (const auto& pw : inst.pair_weights) {
        const int64_t c = detail::scale_capacity(pw.w);
        total_cap += 2 * c;
        mf.add_edge(pw.a, pw.b, c, c);
    }
    for (int i = 0; i < n; ++i) {
        const int64_t cs = detail::scale_capacity(inst.source_ties[std::size_t(i)]);
        const int64_t ct = detail::scale_capacity(inst.sink_ties[std::size_t(i)]);
        if (cs > 0) mf.add_edge(src, i, cs);
        if (ct > 0) mf.add_edge(i, snk, ct);
        total_cap += cs + ct;
    }
    if (total_cap > (int64_t)4e18)
        throw std::overflow_error("capacity overflow at integer scale 2^20; rescale kernel");

    const int64_t flow = mf.run(src, snk);
    const std::vector<uint8_t> reach = mf.min_cut_source_side();

    GroundState gs;
    gs.config = inst.boundary;
    for (int i = 0; i < n; ++i)
        gs.config.set_spin(inst.free_sites[std::size_t(i)], reach[std::size_t(i)] ? +1 : -1);
    gs.cut_value = inst.frozen_offset + double(flow) / double(kCapacityScale);
    gs.energy = energy(*inst.lattice, kernel, gs.config, inst.window).total;
    gs.minimal_flag = true;
    return gs;
}

/// Pointwise-minimal ground state in the label order -1 < +1. Same solve as
/// solve_mincut; kept as a named operation because callers rely on
/// minimality, not just optimality.
inline GroundState minimal_minimizer(const CutInstance& inst, const Kernel& kernel) {
    return solve_mincut(inst, kernel);
}

// ---------------------------------------------------------------------------
// Multi-state and volume-constrained solvers (desk scale)
// ---------------------------------------------------------------------------

struct MultiStateOptions {
    long long exhaustive_cap = 20'000'000;  // max q^free for exhaustive search
    bool allow_approximate = false;
    int icm_max_sweeps = 200;
};

namespace detail {

struct LocalProblem {
    std::vector<int> free;                                    // site indices
    std::vector<std::vector<std::pair<int, double>>> pairs;   // per free pos: (earlier free pos, w)
    std::vector<std::vector<double>> tie_cost;                // per free pos: cost per label
    double offset = 0.0;
};

/// Pairwise reduction shared by the multi-state and volume solvers:
/// w = c(y-x)+c(x-y) per unordered free pair, label costs folded for frozen
/// neighbours, frozen-frozen energy in `offset`.
inline LocalProblem reduce_local(const ThinLattice& lat, const Kernel& kernel,
                                 const SpinConfig& boundary, const Window& window) {
    LocalProblem lp;
    const int q = boundary.q();
    std::vector<int> pos(std::size_t(lat.size()), -1);
    for (int i = 0; i < lat.size(); ++i) {
        if (!window.contains(lat.site(i))) continue;
        if (boundary.frozen[std::size_t(i)] && boundary.is_set(i)) continue;
        pos[std::size_t(i)] = int(lp.free.size());
        lp.free.push_back(i);
    }
    lp.pairs.resize(lp.free.size());
    lp.tie_cost.assign(lp.free.size(), std::vector<double>(std::size_t(q), 0.0));

    const std::vector<Site> offsets = symmetric_offsets(kernel);
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (!window.contains(x)) continue;
        const bool i_free = pos[std::size_t(i)] >= 0;
        for (const Site& off : offsets) {
            const Site y = x + off;
            const int j = lat.index_of(y);
            if (j < 0 || !window.contains(y)) continue;
            const bool j_free = pos[std::size_t(j)] >= 0;
            const double c = kernel.eval(x, y);
            if (i_free && j_free) {
                if (pos[std::size_t(j)] < pos[std::size_t(i)]) {
                    const double w = c + kernel.eval(y, x);
                    if (w > 0.0)
                        lp.pairs[std::size_t(pos[std::size_t(i)])].push_back(
                            {pos[std::size_t(j)], w});
                }
            } else if (i_free && !j_free) {
                const double w = c + kernel.eval(y, x);
                if (w <= 0.0) continue;
                for (int l = 0; l < q; ++l)
                    lp.tie_cost[std::size_t(pos[std::size_t(i)])][std::size_t(l)] +=
                        w * boundary.state_dist(uint8_t(l), boundary.labels[std::size_t(j)]);
            } else if (!i_free && !j_free) {
                lp.offset += c * boundary.state_dist(boundary.labels[std::size_t(i)],
                                                     boundary.labels[std::size_t(j)]);
            }
        }
    }
    return lp;
}

}  // namespace detail

/// Exact exhaustive minimum over S^free when q^free fits the cap; otherwise
/// iterated conditional modes, flagged approximate.
inline GroundState solve_multistate(const ThinLattice& lat, const Kernel& kernel,
                                    const SpinConfig& boundary, const Window& window,
                                    const MultiStateOptions& opt = {}) {
    const int q = boundary.q();
    detail::LocalProblem lp = detail::reduce_local(lat, kernel, boundary, window);
    const int n = int(lp.free.size());
    const std::vector<double> dist = boundary.dist_matrix();
    auto sdist = [&](int a, int b) { return dist[std::size_t(a) * q + b]; };

    double combos = 1.0;
    for (int i = 0; i < n; ++i) combos *= double(q);

    GroundState gs;
    gs.config = boundary;

    std::vector<uint8_t> lab(std::size_t(n), 0);
    if (combos <= double(opt.exhaustive_cap)) {
        std::vector<uint8_t> best(std::size_t(n), 0);
        double best_e = 1e300;
        // depth-first enumeration with incremental partial energies
        std::vector<double> partial(std::size_t(n) + 1, 0.0);
        int depth = 0;
        std::vector<int> choice(std::size_t(n), -1);
        while (depth >= 0) {
            if (depth == n) {
                if (partial[std::size_t(n)] < best_e) {
                    best_e = partial[std::size_t(n)];
                    best = lab;
                }
                --depth;
                continue;
            }
            int& ch = choice[std::size_t(depth)];
            ++ch;
            if (ch == q) {
                ch = -1;
                --depth;
                continue;
            }
            lab[std::size_t(depth)] = uint8_t(ch);
            double e = partial[std::size_t(depth)] + lp.tie_cost[std::size_t(depth)][std::size_t(ch)];
            for (const auto& [jpos, w] : lp.pairs[std::size_t(depth)])
                e += w * sdist(ch, lab[std::size_t(jpos)]);
            if (e < best_e) {
                partial[std::size_t(depth) + 1] = e;
                ++depth;
            }
        }
        lab = best;
        gs.approximate = false;
    } else {
        if (!opt.allow_approximate)
            throw std::invalid_argument("solve_multistate: size cap exceeded without approximate flag");
        // ICM from the cheapest-tie initialization
        std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (const auto& [j, w] : lp.pairs[std::size_t(i)]) {
                adj[std::size_t(i)].push_back({j, w});
                adj[std::size_t(j)].push_back({i, w});
            }
        for (int i = 0; i < n; ++i) {
            int bl = 0;
            for (int l = 1; l < q; ++l)
                if (lp.tie_cost[std::size_t(i)][std::size_t(l)] <
                    lp.tie_cost[std::size_t(i)][std::size_t(bl)])
                    bl = l;
            lab[std::size_t(i)] = uint8_t(bl);
        }
        for (int sweep = 0; sweep < opt.icm_max_sweeps; ++sweep) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int bl = lab[std::size_t(i)];
                double be = 1e300;
                for (int l = 0; l < q; ++l) {
                    double e = lp.tie_cost[std::size_t(i)][std::size_t(l)];
                    for (const auto& [j, w] : adj[std::size_t(i)])
                        e += w * sdist(l, lab[std::size_t(j)]);
                    if (e < be) {
                        be = e;
                        bl = l;
                    }
                }
                if (bl != lab[std::size_t(i)]) {
                    lab[std::size_t(i)] = uint8_t(bl);
                    changed = true;
                }
            }
            if (!changed) break;
        }
        gs.approximate = true;
    }

    for (int i = 0; i < n; ++i) gs.config.labels[std::size_t(lp.free[std::size_t(i)])] = lab[std::size_t(i)];
    gs.energy = energy(lat, kernel, gs.config, window).total;
    gs.cut_value = gs.energy;
    return gs;
}

struct VolumeOptions {
    int exact_cap = 24;  // max free sites for exhaustive subset search
    bool allow_approximate = false;
    int swap_sweeps = 500;
    uint64_t swap_seed = 1;
};

/// Two-state minimum subject to exact per-label counts over the window.
inline GroundState solve_volume_constrained(const ThinLattice& lat, const Kernel& kernel,
                                            const SpinConfig& boundary, const Window& window,
                                            long long count_minus, long long count_plus,
                                            const VolumeOptions& opt = {}) {
    if (boundary.q() != 2)
        throw std::invalid_argument("solve_volume_constrained: two-state only");
    detail::LocalProblem lp = detail::reduce_local(lat, kernel, boundary, window);
    const int n = int(lp.free.size());

    long long frozen_plus = 0, frozen_minus = 0, window_sites = 0;
    for (int i = 0; i < lat.size(); ++i) {
        if (!window.contains(lat.site(i))) continue;
        ++window_sites;
        if (boundary.frozen[std::size_t(i)] && boundary.is_set(i)) {
            if (boundary.spin(i) > 0)
                ++frozen_plus;
            else
                ++frozen_minus;
        }
    }
    if (count_minus + count_plus != window_sites)
        throw std::invalid_argument("solve_volume_constrained: counts do not sum to window sites");
    const long long need_plus = count_plus - frozen_plus;
    if (need_plus < 0 || need_plus > n || count_minus - frozen_minus != n - need_plus)
        throw std::invalid_argument("solve_volume_constrained: infeasible counts");

    GroundState gs;
    gs.config = boundary;
    std::vector<uint8_t> lab(std::size_t(n), 0);

    auto config_energy = [&](const std::vector<uint8_t>& l) {
        double e = lp.offset;
        for (int i = 0; i < n; ++i) {
            e += lp.tie_cost[std::size_t(i)][std::size_t(l[std::size_t(i)])];
            for (const auto& [j, w] : lp.pairs[std::size_t(i)])
                e += w * (l[std::size_t(i)] != l[std::size_t(j)] ? 2.0 : 0.0);
        }
        return e;
    };

    if (n <= opt.exact_cap) {
        // depth-first over +1 subsets of the prescribed size with pruning
        std::vector<uint8_t> best;
        double best_e = 1e300;
        std::vector<double> partial(std::size_t(n) + 1, 0.0);
        std::vector<int> plus_used(std::size_t(n) + 1, 0);
        std::vector<int> choice(std::size_t(n), -1);
        int depth = 0;
        while (depth >= 0) {
            if (depth == n) {
                if (plus_used[std::size_t(n)] == need_plus && partial[std::size_t(n)] < best_e) {
                    best_e = partial[std::size_t(n)];
                    best = lab;
                }
                --depth;
                continue;
            }
            int& ch = choice[std::size_t(depth)];
            ++ch;
            if (ch == 2) {
                ch = -1;
                --depth;
                continue;
            }
            const int used = plus_used[std::size_t(depth)] + ch;
            const int remaining = n - depth - 1;
            if (used > need_plus || used + remaining < need_plus) continue;
            lab[std::size_t(depth)] = uint8_t(ch);
            double e = partial[std::size_t(depth)] + lp.tie_cost[std::size_t(depth)][std::size_t(ch)];
            for (const auto& [j, w] : lp.pairs[std::size_t(depth)])
                e += w * (uint8_t(ch) != lab[std::size_t(j)] ? 2.0 : 0.0);
            if (e >= best_e) continue;
            partial[std::size_t(depth) + 1] = e;
            plus_used[std::size_t(depth) + 1] = used;
            ++depth;
        }
        lab = best;
        gs.approximate = false;
    } else {
        if (!opt.allow_approximate)
            throw std::invalid_argument("solve_volume_constrained: exact cap exceeded without approximate flag");
        SplitMix rng(opt.swap_seed);
        for (int i = 0; i < n; ++i) lab[std::size_t(i)] = (i < need_plus) ? 1 : 0;
        double cur = config_energy(lab);
        for (int sweep = 0; sweep < opt.swap_sweeps; ++sweep) {
            bool improved = false;
            for (int a = 0; a < n; ++a) {
                const int b = int(rng.next_below(uint64_t(n)));
                if (lab[std::size_t(a)] == lab[std::size_t(b)]) continue;
                std::swap(lab[std::size_t(a)], lab[std::size_t(b)]);
                const double e = config_energy(lab);
                if (e < cur) {
                    cur = e;
                    improved = true;
                } else {
                    std::swap(lab[std::size_t(a)], lab[std::size_t(b)]);
                }
            }
            if (!improved) break;
        }
        gs.approximate = true;
    }

    for (int i = 0; i < n; ++i)
        gs.config.set_spin(lp.free[std::size_t(i)], lab[std::size_t(i)] ? +1 : -1);
    gs.energy = energy(lat, kernel, gs.config, window).total;
    gs.cut_value = gs.energy;
    return gs;
}

// ---------------------------------------------------------------------------
// Projected point density
// ---------------------------------------------------------------------------

struct DensityEstimate {
    std::vector<std::pair<double, double>> per_window;  // (side, points/area)
    double gamma0 = 0.0;
    double slope = 0.0;  // boundary correction coefficient of the 1/side fit
};

/// Points-per-area over nested windows with a + b/side extrapolation.
inline DensityEstimate estimate_density(const ThinLattice& lat, const std::vector<Rect>& windows) {
    DensityEstimate est;
    for (std::size_t w = 1; w < windows.size(); ++w)
        if (!windows[w].contains_rect(windows[w - 1]))
            throw std::invalid_argument("estimate_density: windows must be nested");
    std::vector<double> xs, ys;
    for (const Rect& w : windows) {
        if (w.empty()) continue;
        long long count = 0;
        for (const Site& s : lat.sites())
            if (w.contains(IVec2{s.x, s.y})) ++count;
        const double side = std::sqrt(w.area());
        const double density = double(count) / w.area();
        est.per_window.push_back({side, density});
        xs.push_back(1.0 / side);
        ys.push_back(density);
    }
    const LinearFit fit = linear_fit(xs, ys);
    est.gamma0 = fit.intercept;
    est.slope = fit.slope;
    return est;
}

}  // namespace thinfilm
