#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "thinfilm/geometry.hpp"
#include "thinfilm/rng.hpp"

namespace thinfilm {

struct DepositionParams {
    double p = 0.5;       // per-trial occupation probability, in (0,1]
    int M = 0;            // number of deposition trials
    Rect region;          // columns to generate
    uint64_t seed = 0;

    void validate() const {
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("DepositionParams: p must be in (0,1]");
        if (M < 0) throw std::invalid_argument("DepositionParams: M must be >= 0");
        if (region.empty()) throw std::invalid_argument("DepositionParams: empty region");
    }
};

struct AdmissibilityReport {
    bool pass = true;
    bool min_dist_ok = true;
    bool covering_ok = true;
    std::optional<std::pair<Site, Site>> violating_pair;  // min-distance witness
    std::optional<Vec2> uncovered_probe;                  // covering witness
    double min_pair_dist = 0.0;
    double max_probe_dist = 0.0;
};

/// Finite set of integer sites inside the slab R^2 x [0, M].
///
/// Sites are kept lexicographically sorted; `index_of` resolves a site to its
/// position in that order. Columns group sites by projected coordinate.
class ThinLattice {
  public:
    ThinLattice() = default;

    static ThinLattice from_sites(std::vector<Site> sites, int slab_height, Rect region,
                                  uint64_t seed = 0, std::string generator = "explicit") {
        ThinLattice lat;
        std::sort(sites.begin(), sites.end());
        sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
        lat.sites_ = std::move(sites);
        lat.slab_height_ = slab_height;
        lat.region_ = region;
        lat.seed_ = seed;
        lat.generator_ = std::move(generator);
        lat.index_.reserve(lat.sites_.size() * 2);
        for (std::size_t i = 0; i < lat.sites_.size(); ++i) {
            if (lat.sites_[i].z < 0 || lat.sites_[i].z > slab_height)
                throw std::invalid_argument("ThinLattice: site outside slab");
            lat.index_.emplace(lat.sites_[i], int(i));
        }
        return lat;
    }

    const std::vector<Site>& sites() const { return sites_; }
    int size() const { return int(sites_.size()); }
    int slab_height() const { return slab_height_; }
    const Rect& region() const { return region_; }
    uint64_t seed() const { return seed_; }
    const std::string& generator() const { return generator_; }

    const Site& site(int i) const { return sites_[std::size_t(i)]; }

    int index_of(const Site& s) const {
        auto it = index_.find(s);
        return it == index_.end() ? -1 : it->second;
    }
    bool contains(const Site& s) const { return index_.find(s) != index_.end(); }

    /// Column map (i1,i2) -> ordered heights. Consistent with sites() by
    /// construction (sorted order groups columns contiguously).
    std::map<IVec2, std::vector<int>> columns() const {
        std::map<IVec2, std::vector<int>> cols;
        for (const Site& s : sites_) cols[{s.x, s.y}].push_back(s.z);
        return cols;
    }

    /// Height of a deposition column: number of deposited particles, i.e. the
    /// top site's third coordinate. -1 if the column has no sites at all.
    int column_top(IVec2 c) const {
        for (int z = slab_height_; z >= 0; --z)
            if (contains({c.x, c.y, z})) return z;
        return -1;
    }

    /// Canonical text serialization: a header line followed by one site
    /// per line, lexicographically sorted. Byte-stable for fixed inputs.
    std::string serialize() const {
        std::string out;
        char buf[160];
        std::snprintf(buf, sizeof buf, "# thinfilm-lattice M=%d region=%d %d %d %d seed=%llu generator=%s\n",
                      slab_height_, region_.x0, region_.y0, region_.x1, region_.y1,
                      (unsigned long long)seed_, generator_.c_str());
        out += buf;
        for (const Site& s : sites_) {
            std::snprintf(buf, sizeof buf, "%d %d %d\n", s.x, s.y, s.z);
            out += buf;
        }
        return out;
    }

    static ThinLattice deserialize(const std::string& text) {
        std::istringstream in(text);
        std::string header;
        std::getline(in, header);
        int M = 0;
        Rect region;
        unsigned long long seed = 0;
        char gen[64] = "explicit";
        if (std::sscanf(header.c_str(), "# thinfilm-lattice M=%d region=%d %d %d %d seed=%llu generator=%63s",
                        &M, &region.x0, &region.y0, &region.x1, &region.y1, &seed, gen) < 7)
            throw std::invalid_argument("lattice header malformed");
        std::vector<Site> sites;
        Site s;
        while (in >> s.x >> s.y >> s.z) sites.push_back(s);
        return from_sites(std::move(sites), M, region, seed, gen);
    }

  private:
    std::vector<Site> sites_;
    std::unordered_map<Site, int, SiteHash> index_;
    int slab_height_ = 0;
    Rect region_;
    uint64_t seed_ = 0;
    std::string generator_ = "explicit";
};

/// Random deposition lattice: M independent Bernoulli(p) trials per column,
/// stacked with vertical order on top of the substrate layer i3 = 0.
inline ThinLattice generate_deposition(const DepositionParams& params) {
    params.validate();
    std::vector<Site> sites;
    sites.reserve(std::size_t(params.region.columns()) * std::size_t(params.M / 2 + 1));
    for (int i1 = params.region.x0; i1 < params.region.x1; ++i1) {
        for (int i2 = params.region.y0; i2 < params.region.y1; ++i2) {
            int h = 0;
            for (int k = 1; k <= params.M; ++k)
                if (column_bernoulli(params.seed, i1, i2, k, params.p)) ++h;
            for (int i3 = 0; i3 <= h; ++i3) sites.push_back({i1, i2, i3});
        }
    }
    return ThinLattice::from_sites(std::move(sites), params.M, params.region, params.seed,
                                   kRngName);
}

/// Deterministic layered lattice region x {0..M} (deposition with p = 1).
inline ThinLattice generate_layered(int M, Rect region) {
    if (M < 0) throw std::invalid_argument("generate_layered: M must be >= 0");
    if (region.empty()) throw std::invalid_argument("generate_layered: empty region");
    std::vector<Site> sites;
    sites.reserve(std::size_t(region.columns()) * std::size_t(M + 1));
    for (int i1 = region.x0; i1 < region.x1; ++i1)
        for (int i2 = region.y0; i2 < region.y1; ++i2)
            for (int i3 = 0; i3 <= M; ++i3) sites.push_back({i1, i2, i3});
    return ThinLattice::from_sites(std::move(sites), M, region, 0, "layered");
}

/// Checks the two admissibility clauses: pairwise distance >= r and covering
/// of the flat generation region (probe pitch <= R/4, probes at height 0).
inline AdmissibilityReport validate_admissibility(const ThinLattice& lat, double r, double R) {
    AdmissibilityReport rep;
    const auto& sites = lat.sites();
    rep.min_pair_dist = sites.size() < 2 ? 1e300 : 0.0;

    // min-distance: hash-bucket by cell of side r so only nearby pairs compare
    const double cell = std::max(r, 1e-9);
    std::unordered_map<Site, std::vector<int>, SiteHash> buckets;
    auto bucket_of = [&](const Site& s) {
        return Site{int(std::floor(s.x / cell)), int(std::floor(s.y / cell)),
                    int(std::floor(s.z / cell))};
    };
    for (std::size_t i = 0; i < sites.size(); ++i) buckets[bucket_of(sites[i])].push_back(int(i));
    double best = 1e300;
    for (std::size_t i = 0; i < sites.size() && rep.min_dist_ok; ++i) {
        const Site b = bucket_of(sites[i]);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = buckets.find({b.x + dx, b.y + dy, b.z + dz});
                    if (it == buckets.end()) continue;
                    for (int j : it->second) {
                        if (j <= int(i)) continue;
                        const double d = norm(sites[i].to_vec() - sites[j].to_vec());
                        best = std::min(best, d);
                        if (d < r) {
                            rep.min_dist_ok = false;
                            rep.violating_pair = {sites[i], sites[j]};
                        }
                    }
                }
    }
    if (sites.size() >= 2) rep.min_pair_dist = best;

    // covering of the flat subspace over the generated column hull
    const Rect reg = lat.region();
    if (!reg.empty()) {
        const double pitch = R / 4.0;
        const double hx = reg.x1 - 1.0, hy = reg.y1 - 1.0;  // half-open region: last column
        const int nx = int(std::ceil((hx - reg.x0) / pitch));
        const int ny = int(std::ceil((hy - reg.y0) / pitch));
        for (int ix = 0; ix <= nx && rep.covering_ok; ++ix) {
            for (int iy = 0; iy <= ny; ++iy) {
                const Vec2 probe{std::min(hx, reg.x0 + ix * pitch),
                                 std::min(hy, reg.y0 + iy * pitch)};
                double d2best = 1e300;
                // nearby integer columns suffice: covering radius candidates
                const int cx = int(std::llround(probe.x)), cy = int(std::llround(probe.y));
                const int reach = int(std::ceil(R)) + 1;
                for (int dx = -reach; dx <= reach; ++dx)
                    for (int dy = -reach; dy <= reach; ++dy)
                        for (int z = 0; z <= lat.slab_height(); ++z) {
                            const Site s{cx + dx, cy + dy, z};
                            if (!lat.contains(s)) continue;
                            const double ddx = probe.x - s.x, ddy = probe.y - s.y;
                            d2best = std::min(d2best, ddx * ddx + ddy * ddy + double(s.z) * s.z);
                        }
                const double d = std::sqrt(d2best);
                rep.max_probe_dist = std::max(rep.max_probe_dist, d);
                if (d > R) {
                    rep.covering_ok = false;
                    rep.uncovered_probe = probe;
                    break;
                }
            }
        }
    }
    rep.pass = rep.min_dist_ok && rep.covering_ok;
    return rep;
}

}  // namespace thinfilm
