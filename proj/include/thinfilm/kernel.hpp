#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "thinfilm/geometry.hpp"

#include "json.hpp"

namespace thinfilm {

/// Nonincreasing radial majorant J_lr with finite integral of J_lr(|x|)|x|
/// over R^2. Tabulated at sample radii; evaluated by linear interpolation
/// (constant before the first sample, zero after the last).
struct DecayMajorant {
    std::vector<std::pair<double, double>> samples;  // (radius, value), radius increasing
    double integral_bound = 0.0;                     // declared J

    double eval(double r) const {
        if (samples.empty()) return 0.0;
        if (r <= samples.front().first) return samples.front().second;
        if (r >= samples.back().first) return 0.0;
        auto hi = std::upper_bound(samples.begin(), samples.end(), r,
                                   [](double v, const auto& s) { return v < s.first; });
        auto lo = hi - 1;
        const double w = (r - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }

    /// 2*pi * integral of r^2 * J(r) dr over the tabulated range, with the
    /// piecewise-linear interpolant integrated in closed form per segment.
    double radial_integral() const {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            const double r0 = samples[i].first, r1 = samples[i + 1].first;
            const double j0 = samples[i].second, j1 = samples[i + 1].second;
            if (r1 <= r0) continue;
            // J(r) = a + b r on [r0, r1]
            const double b = (j1 - j0) / (r1 - r0);
            const double a = j0 - b * r0;
            const double i3 = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
            const double i4 = (r1 * r1 * r1 * r1 - r0 * r0 * r0 * r0) / 4.0;
            acc += a * i3 + b * i4;
        }
        return 2.0 * M_PI * acc;
    }

    bool nonincreasing() const {
        for (std::size_t i = 0; i + 1 < samples.size(); ++i)
            if (samples[i + 1].second > samples[i].second + 1e-15) return false;
        return true;
    }
};

struct Hypothesis1Report {
    bool pass = true;
    std::string first_violation;  // empty when pass
    double integral = 0.0;
};

/// Finite-range interaction coefficient table on integer offsets.
///
/// range_L is the inclusive interaction radius: c(z) = 0 whenever |z| > range_L
/// (so a nearest-neighbour kernel has range 1 and the default trace width
/// 2*range_L equals the width used for nearest-neighbour cell problems).
/// Asymmetric tables are allowed; energies always sum over ordered pairs.
/// When substrate_eta is set, unit-length bonds touching the layer i3 = 0 get
/// coefficient eta instead of the table value.
class Kernel {
  public:
    Kernel() = default;

    Kernel(double range_L, std::vector<std::pair<Site, double>> entries,
           std::optional<double> substrate_eta = std::nullopt, double nn_floor = 0.0)
        : range_(range_L), eta_(substrate_eta), nn_floor_(nn_floor) {
        for (auto& [off, v] : entries) {
            if (v < 0) throw std::invalid_argument("Kernel: negative coefficient");
            if (v == 0) continue;
            if (off.norm() > range_ + 1e-12)
                throw std::invalid_argument("Kernel: entry beyond declared range");
            table_[off] = v;
            offsets_.push_back(off);
            cap_ = std::max(cap_, v);
        }
        std::sort(offsets_.begin(), offsets_.end());
        if (eta_ && !(*eta_ >= 0.0)) throw std::invalid_argument("Kernel: eta must be >= 0");
        if (nn_floor_ > 0.0)
            for (const Site& u : unit_offsets())
                if (value(u) < nn_floor_)
                    throw std::invalid_argument("Kernel: nn_floor violated at a unit offset");
    }

    /// c == c0 on the six unit offsets.
    static Kernel nearest_neighbor(double c0 = 1.0, std::optional<double> eta = std::nullopt) {
        std::vector<std::pair<Site, double>> e;
        for (const Site& u : unit_offsets()) e.push_back({u, c0});
        return Kernel(1.0, std::move(e), eta, c0);
    }

    static const std::array<Site, 6>& unit_offsets() {
        static const std::array<Site, 6> u = {Site{1, 0, 0}, Site{-1, 0, 0}, Site{0, 1, 0},
                                              Site{0, -1, 0}, Site{0, 0, 1}, Site{0, 0, -1}};
        return u;
    }

    double range() const { return range_; }
    double cap() const { return cap_; }
    double nn_floor() const { return nn_floor_; }
    std::optional<double> substrate_eta() const { return eta_; }
    const std::vector<Site>& offsets() const { return offsets_; }

    /// Raw table lookup (no substrate rule).
    double value(const Site& offset) const {
        auto it = table_.find(offset);
        return it == table_.end() ? 0.0 : it->second;
    }

    /// Interaction coefficient for the ordered pair (x, y).
    double eval(const Site& x, const Site& y) const {
        const Site d = y - x;
        if (eta_ && d.norm2() == 1 && (long long)x.z * y.z == 0) return *eta_;
        return value(d);
    }

    Kernel with_eta(double eta) const {
        Kernel k = *this;
        k.eta_ = eta;
        return k;
    }
    Kernel without_eta() const {
        Kernel k = *this;
        k.eta_.reset();
        return k;
    }

    /// Checks the coefficient cap against the majorant at every tabulated
    /// offset, the nearest-neighbour floor, and finiteness of the decay
    /// integral. Report-style: first violation is described, never thrown.
    Hypothesis1Report validate_hypothesis1(const DecayMajorant& majorant) const {
        Hypothesis1Report rep;
        if (!majorant.nonincreasing()) {
            rep.pass = false;
            rep.first_violation = "majorant is not nonincreasing";
            return rep;
        }
        for (const Site& off : offsets_) {
            const double c = value(off);
            const double bound = majorant.eval(off.norm());
            if (c > bound + 1e-12) {
                rep.pass = false;
                char buf[96];
                std::snprintf(buf, sizeof buf, "c(%d,%d,%d)=%g exceeds majorant %g", off.x, off.y,
                              off.z, c, bound);
                rep.first_violation = buf;
                return rep;
            }
        }
        if (nn_floor_ > 0.0) {
            for (const Site& u : unit_offsets()) {
                if (value(u) < nn_floor_) {
                    rep.pass = false;
                    char buf[96];
                    std::snprintf(buf, sizeof buf, "c(%d,%d,%d)=%g below nn floor %g", u.x, u.y,
                                  u.z, value(u), nn_floor_);
                    rep.first_violation = buf;
                    return rep;
                }
            }
        }
        rep.integral = majorant.radial_integral();
        if (!std::isfinite(rep.integral) || rep.integral > majorant.integral_bound + 1e-9) {
            rep.pass = false;
            rep.first_violation = "decay integral exceeds declared bound";
        }
        return rep;
    }

    // Kernel file format: {"range_L": .., "eta": .., "entries": [[dz1,dz2,dz3,c],..]};
    // missing offsets are zero.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["range_L"] = range_;
        if (eta_) j["eta"] = *eta_;
        auto entries = nlohmann::json::array();
        for (const Site& off : offsets_)
            entries.push_back({off.x, off.y, off.z, value(off)});
        j["entries"] = entries;
        return j;
    }

    static Kernel from_json(const nlohmann::json& j) {
        std::vector<std::pair<Site, double>> entries;
        for (const auto& e : j.at("entries"))
            entries.push_back({Site{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()},
                               e.at(3).get<double>()});
        std::optional<double> eta;
        if (j.contains("eta")) eta = j.at("eta").get<double>();
        return Kernel(j.at("range_L").get<double>(), std::move(entries), eta);
    }

    static Kernel load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open kernel file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

  private:
    double range_ = 0.0;
    std::unordered_map<Site, double, SiteHash> table_;
    std::vector<Site> offsets_;  // sorted nonzero offsets
    double cap_ = 0.0;
    std::optional<double> eta_;
    double nn_floor_ = 0.0;
};

}  // namespace thinfilm
