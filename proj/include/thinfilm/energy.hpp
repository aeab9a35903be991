#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "thinfilm/geometry.hpp"
#include "thinfilm/kernel.hpp"
#include "thinfilm/lattice.hpp"

namespace thinfilm {

/// Localization window for energies: axis-aligned half-open rectangle or an
/// oriented square Q_nu(center, t). Membership is tested on projected
/// coordinates P2(x).
struct Window {
    enum class Kind { Axis, Oriented } kind = Kind::Axis;
    Rect rect;
    OrientedSquare square;

    static Window axis(Rect r) { return {Kind::Axis, r, {}}; }
    static Window oriented(OrientedSquare s) { return {Kind::Oriented, {}, s}; }

    bool contains(Vec2 p) const {
        return kind == Kind::Axis ? rect.contains(p) : square.contains(p);
    }
    bool contains(const Site& s) const { return contains(s.proj()); }

    double dist_outside(Vec2 p) const {  // 0 inside
        if (kind == Kind::Oriented) return std::max(0.0, -square.boundary_dist(p));
        const double dx = std::max({double(rect.x0) - p.x, 0.0, p.x - double(rect.x1)});
        const double dy = std::max({double(rect.y0) - p.y, 0.0, p.y - double(rect.y1)});
        return std::sqrt(dx * dx + dy * dy);
    }
};

/// Spin configuration u : sites -> S, S = {s_1,...,s_q} embedded in R^m.
/// Labels are indices into `states`; kUnset marks sites without a value
/// (partial boundary data). `frozen` marks boundary-fixed sites.
struct SpinConfig {
    static constexpr uint8_t kUnset = 255;

    const ThinLattice* lattice = nullptr;
    std::vector<std::vector<double>> states;
    std::vector<uint8_t> labels;
    std::vector<uint8_t> frozen;

    static SpinConfig two_state(const ThinLattice& lat, int fill_spin = +1) {
        SpinConfig u;
        u.lattice = &lat;
        u.states = {{-1.0}, {+1.0}};
        u.labels.assign(std::size_t(lat.size()), fill_spin > 0 ? 1 : 0);
        u.frozen.assign(std::size_t(lat.size()), 0);
        return u;
    }

    static SpinConfig empty_two_state(const ThinLattice& lat) {
        SpinConfig u = two_state(lat);
        std::fill(u.labels.begin(), u.labels.end(), kUnset);
        return u;
    }

    int q() const { return int(states.size()); }
    bool is_set(int i) const { return labels[std::size_t(i)] != kUnset; }

    // two-state helpers (states fixed to {-1},{+1})
    int spin(int i) const { return labels[std::size_t(i)] == 1 ? +1 : -1; }
    void set_spin(int i, int s, bool freeze = false) {
        labels[std::size_t(i)] = (s > 0) ? 1 : 0;
        if (freeze) frozen[std::size_t(i)] = 1;
    }

    double state_dist(uint8_t a, uint8_t b) const {
        if (a == b) return 0.0;
        double acc = 0.0;
        for (std::size_t k = 0; k < states[a].size(); ++k) {
            const double d = states[a][k] - states[b][k];
            acc += d * d;
        }
        return std::sqrt(acc);
    }

    std::vector<double> dist_matrix() const {
        const int n = q();
        std::vector<double> m(std::size_t(n) * n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) m[std::size_t(a) * n + b] = state_dist(uint8_t(a), uint8_t(b));
        return m;
    }
};

struct EnergyBreakdown {
    double total = 0.0;
    std::map<Site, double> by_offset;
    long long pair_count = 0;  // ordered pairs with positive coefficient
};

namespace detail {
inline std::vector<Site> active_offsets(const Kernel& kernel) {
    std::vector<Site> offs = kernel.offsets();
    if (kernel.substrate_eta()) {
        for (const Site& u : Kernel::unit_offsets())
            if (std::find(offs.begin(), offs.end(), u) == offs.end()) offs.push_back(u);
    }
    return offs;
}
}  // namespace detail

/// Localized interfacial energy: sum over ordered pairs (x, y) with both
/// projections in the window of c(x,y) |u(x) - u(y)|. No epsilon scaling is
/// applied here; cell-problem callers normalize by t.
inline EnergyBreakdown energy(const ThinLattice& lat, const Kernel& kernel, const SpinConfig& u,
                              const Window& window) {
    if (u.lattice != &lat) throw std::invalid_argument("energy: config bound to another lattice");
    EnergyBreakdown out;
    const std::vector<Site> offsets = detail::active_offsets(kernel);
    const std::vector<double> dist = u.dist_matrix();
    const int q = u.q();
    std::vector<double> per_offset(offsets.size(), 0.0);
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (!window.contains(x)) continue;
        if (!u.is_set(i)) throw std::invalid_argument("energy: missing label inside window");
        for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
            const Site y = x + offsets[oi];
            const int j = lat.index_of(y);
            if (j < 0 || !window.contains(y)) continue;
            const double c = kernel.eval(x, y);
            if (c <= 0.0) continue;
            if (!u.is_set(j)) throw std::invalid_argument("energy: missing label inside window");
            ++out.pair_count;
            per_offset[oi] += c * dist[std::size_t(u.labels[std::size_t(i)]) * q +
                                       u.labels[std::size_t(j)]];
        }
    }
    for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
        if (per_offset[oi] == 0.0) continue;
        out.by_offset[offsets[oi]] += per_offset[oi];
        out.total += per_offset[oi];
    }
    return out;
}

struct SliceEnergy {
    double total = 0.0;
    bool empty_range = false;
};

/// Energy restricted to pairs whose endpoints both lie in layers [a, b].
inline SliceEnergy slice_energy(const ThinLattice& lat, const Kernel& kernel, const SpinConfig& u,
                                const Window& window, int layer_lo, int layer_hi) {
    SliceEnergy out;
    if (layer_lo > layer_hi) {
        out.empty_range = true;
        return out;
    }
    const std::vector<Site> offsets = detail::active_offsets(kernel);
    const std::vector<double> dist = u.dist_matrix();
    const int q = u.q();
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (x.z < layer_lo || x.z > layer_hi || !window.contains(x)) continue;
        for (const Site& off : offsets) {
            const Site y = x + off;
            if (y.z < layer_lo || y.z > layer_hi) continue;
            const int j = lat.index_of(y);
            if (j < 0 || !window.contains(y)) continue;
            const double c = kernel.eval(x, y);
            if (c <= 0.0) continue;
            out.total += c * dist[std::size_t(u.labels[std::size_t(i)]) * q + u.labels[std::size_t(j)]];
        }
    }
    return out;
}

struct LongToShortReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 0.0;  // reported C
    double nn_coercivity = 0.0;
    int max_multiplicity = 0;
    bool coercive = true;
    bool all_paths_found = true;
    bool holds = true;
};

/// Checks that the xi-offset interactions inside a convex window are
/// controlled by nearest-neighbour energy on the fattened window. The bound
/// constant is assembled from the actual nearest-neighbour paths used by the
/// comparison, so a passing report certifies the chain of inequalities on
/// this lattice realization.
inline LongToShortReport longtoshort_check(const ThinLattice& lat, const Kernel& kernel,
                                           const SpinConfig& u, const Window& window, Site xi,
                                           const DecayMajorant& majorant,
                                           const std::vector<std::pair<int, int>>& nn_pairs,
                                           double fatten_margin) {
    LongToShortReport rep;
    const double xi_norm = xi.norm();
    if (xi_norm == 0.0) return rep;
    const std::vector<double> dist = u.dist_matrix();
    const int q = u.q();
    auto pair_dist = [&](int i, int j) {
        return dist[std::size_t(u.labels[std::size_t(i)]) * q + u.labels[std::size_t(j)]];
    };

    // adjacency restricted to the fattened window
    auto in_fat = [&](const Site& s) { return window.dist_outside(s.proj()) < fatten_margin; };
    std::vector<std::vector<int>> adj(std::size_t(lat.size()));
    double c0 = 1e300;
    for (auto [a, b] : nn_pairs) {
        if (!in_fat(lat.site(a)) || !in_fat(lat.site(b))) continue;
        adj[std::size_t(a)].push_back(b);
        adj[std::size_t(b)].push_back(a);
        c0 = std::min(c0, kernel.eval(lat.site(a), lat.site(b)) + kernel.eval(lat.site(b), lat.site(a)));
    }
    if (c0 <= 0.0 || c0 == 1e300) {
        rep.coercive = false;
        rep.holds = false;
        return rep;
    }
    rep.nn_coercivity = c0;

    std::map<std::pair<int, int>, int> mult;
    std::vector<int> prev(std::size_t(lat.size()));
    std::vector<int> queue;
    for (int i = 0; i < lat.size(); ++i) {
        const Site& x = lat.site(i);
        if (!window.contains(x)) continue;
        const int j = lat.index_of(x + xi);
        if (j < 0 || !window.contains(lat.site(j))) continue;
        rep.lhs += kernel.eval(x, lat.site(j)) * pair_dist(i, j);
        // BFS path i -> j through the nearest-neighbour graph
        std::fill(prev.begin(), prev.end(), -2);
        queue.clear();
        queue.push_back(i);
        prev[std::size_t(i)] = -1;
        bool found = (i == j);
        for (std::size_t head = 0; head < queue.size() && !found; ++head) {
            for (int nb : adj[std::size_t(queue[head])]) {
                if (prev[std::size_t(nb)] != -2) continue;
                prev[std::size_t(nb)] = queue[head];
                if (nb == j) {
                    found = true;
                    break;
                }
                queue.push_back(nb);
            }
        }
        if (!found) {
            rep.all_paths_found = false;
            continue;
        }
        for (int v = j; prev[std::size_t(v)] >= 0; v = prev[std::size_t(v)]) {
            const int w = prev[std::size_t(v)];
            ++mult[{std::min(v, w), std::max(v, w)}];
        }
    }
    for (const auto& [e, m] : mult) rep.max_multiplicity = std::max(rep.max_multiplicity, m);

    double nn_energy = 0.0;
    for (auto [a, b] : nn_pairs) {
        if (!in_fat(lat.site(a)) || !in_fat(lat.site(b))) continue;
        nn_energy += (kernel.eval(lat.site(a), lat.site(b)) + kernel.eval(lat.site(b), lat.site(a))) *
                     pair_dist(a, b);
    }
    const double xi_hat = std::max(xi_norm - 2.0, 0.0);
    rep.constant = double(std::max(rep.max_multiplicity, 1)) / (c0 * xi_norm);
    rep.rhs = rep.constant * majorant.eval(xi_hat) * xi_norm * nn_energy;
    rep.holds = rep.all_paths_found && rep.lhs <= rep.rhs + 1e-12;
    return rep;
}

}  // namespace thinfilm
