#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "thinfilm/experiments.hpp"
#include "thinfilm/io.hpp"
#include "thinfilm/planelike.hpp"
#include "thinfilm/projection.hpp"
#include "thinfilm/voronoi.hpp"

namespace thinfilm {

namespace fs = std::filesystem;

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what, nlohmann::json details_ = {})
        : std::runtime_error(what), details(std::move(details_)) {}
    nlohmann::json details;
};

/// Config accessor that tracks consumed keys; unknown keys are rejected and
/// all defaults are materialized into the effective config echoed to the
/// manifest.
class ConfigView {
  public:
    explicit ConfigView(nlohmann::json j) : j_(std::move(j)) {
        if (!j_.is_object()) throw SchemaError("config must be a JSON object");
    }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        known_.insert(key);
        if (j_.contains(key)) {
            effective_[key] = j_.at(key);
            return j_.at(key).get<T>();
        }
        effective_[key] = fallback;
        return fallback;
    }

    nlohmann::json get_json(const std::string& key, const nlohmann::json& fallback) {
        known_.insert(key);
        const nlohmann::json v = j_.contains(key) ? j_.at(key) : fallback;
        effective_[key] = v;
        return v;
    }

    template <class T>
    T require(const std::string& key) {
        known_.insert(key);
        if (!j_.contains(key)) throw SchemaError("missing required key: " + key);
        effective_[key] = j_.at(key);
        return j_.at(key).get<T>();
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void finish() const {
        nlohmann::json unknown = nlohmann::json::array();
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!known_.count(it.key())) unknown.push_back(it.key());
        if (!unknown.empty())
            throw SchemaError("unknown config keys", {{"unknown_keys", unknown}});
    }

    const nlohmann::json& effective() const { return effective_; }

  private:
    nlohmann::json j_;
    nlohmann::json effective_ = nlohmann::json::object();
    std::set<std::string> known_;
};

struct RunOptions {
    fs::path out_dir;
    std::optional<uint64_t> seed_base;  // CLI overrides
    std::optional<int> seed_count;
    int threads = 0;
    nlohmann::json flags = nlohmann::json::object();
};

namespace detail {

inline std::vector<uint64_t> parse_seeds(ConfigView& cfg, const RunOptions& opt) {
    std::vector<uint64_t> seeds;
    const nlohmann::json spec =
        cfg.get_json("seeds", {{"base", 1}, {"count", 1}});
    if (spec.is_array()) {
        for (const auto& s : spec) seeds.push_back(s.get<uint64_t>());
    } else {
        uint64_t base = spec.value("base", uint64_t(1));
        int count = spec.value("count", 1);
        if (opt.seed_base) base = *opt.seed_base;
        if (opt.seed_count) count = *opt.seed_count;
        for (int i = 0; i < count; ++i) seeds.push_back(base + uint64_t(i));
    }
    if (seeds.empty()) throw SchemaError("empty seed list");
    return seeds;
}

inline Kernel parse_kernel(ConfigView& cfg) {
    const nlohmann::json k = cfg.get_json("kernel", {{"nn", 1.0}});
    if (k.contains("nn")) {
        Kernel base = Kernel::nearest_neighbor(k.at("nn").get<double>());
        if (k.contains("eta")) return base.with_eta(k.at("eta").get<double>());
        return base;
    }
    return Kernel::from_json(k);
}

inline IVec2 parse_nu(const nlohmann::json& v) {
    if (!v.is_array() || v.size() != 2) throw SchemaError("nu must be [n1, n2]");
    return {v.at(0).get<int>(), v.at(1).get<int>()};
}

inline LatticeSource parse_source(ConfigView& cfg, double* p_out = nullptr, int* M_out = nullptr) {
    const std::string kind = cfg.get<std::string>("source", "layered");
    const int M = cfg.get<int>("M", 0);
    const double p = cfg.get<double>("p", 1.0);
    if (p_out) *p_out = p;
    if (M_out) *M_out = M;
    if (kind == "layered") return LatticeSource::layered(M);
    if (kind == "deposition") return LatticeSource::deposition(p, M);
    if (kind == "explicit") {
        const std::string file = cfg.require<std::string>("lattice_file");
        std::ifstream in(file);
        if (!in) throw SchemaError("cannot open lattice_file: " + file);
        std::stringstream ss;
        ss << in.rdbuf();
        auto lat = std::make_shared<ThinLattice>(ThinLattice::deserialize(ss.str()));
        if (M_out) *M_out = lat->slab_height();
        return LatticeSource::explicit_lat(lat);
    }
    throw SchemaError("source must be layered|deposition|explicit");
}

inline std::string spin_row(const ThinLattice& lat, const SpinConfig& u, int layer, int x0,
                            int x1, int y) {
    std::string row;
    for (int x = x0; x < x1; ++x) {
        const int i = lat.index_of({x, y, layer});
        row += (i < 0) ? '.' : (u.is_set(i) ? (u.spin(i) > 0 ? '+' : '-') : '?');
    }
    return row;
}

class TaskTimer {
  public:
    explicit TaskTimer(RunManifest& m, std::string name) : m_(m), name_(std::move(name)) {
        start_ = std::chrono::steady_clock::now();
    }
    void done(const std::string& status = "ok") {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        m_.tasks.push_back({name_, status, (long long)ms});
    }

  private:
    RunManifest& m_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Individual experiments
// ---------------------------------------------------------------------------

inline void run_lattice_gen(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const auto region_j = cfg.get_json("region", {-16, -16, 16, 16});
    const Rect region{region_j.at(0), region_j.at(1), region_j.at(2), region_j.at(3)};
    double p = 1.0;
    int M = 0;
    const LatticeSource src = parse_source(cfg, &p, &M);
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    CsvWriter csv({"seed", "sites", "gamma0", "density_slope"});
    for (uint64_t seed : seeds) {
        TaskTimer timer(man, "lattice-gen seed=" + std::to_string(seed));
        const ThinLattice lat = detail::make_lattice(src, region, seed);
        const std::string name = "lattice_" + std::to_string(seed) + ".txt";
        std::ofstream f(opt.out_dir / name, std::ios::binary);
        f << lat.serialize();
        man.outputs.push_back(name);

        const int hx = (region.x1 - region.x0) / 2, hy = (region.y1 - region.y0) / 2;
        std::vector<Rect> windows;
        for (double frac : {0.4, 0.6, 0.8, 1.0})
            windows.push_back({region.x0 + int(hx * (1 - frac)), region.y0 + int(hy * (1 - frac)),
                               region.x1 - int(hx * (1 - frac)), region.y1 - int(hy * (1 - frac))});
        const DensityEstimate de = estimate_density(lat, windows);
        csv.add_row({fmt_num(seed), fmt_num((long long)lat.size()), fmt_num(de.gamma0),
                     fmt_num(de.slope)});
        timer.done();
    }
    csv.save(opt.out_dir / "density.csv");
    man.outputs.push_back("density.csv");
}

inline void run_groundstate(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    CellProblemSpec spec;
    spec.nu_int = parse_nu(cfg.get_json("nu", {0, 1}));
    spec.t = cfg.get<double>("t", 16.0);
    spec.source = parse_source(cfg);
    const Kernel kernel = parse_kernel(cfg);
    spec.trace_width = cfg.get<double>("trace_width", -1.0);
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    CsvWriter csv({"seed", "energy", "energy_over_t", "cut_value", "free_sites", "minimal"});
    for (uint64_t seed : seeds) {
        TaskTimer timer(man, "groundstate seed=" + std::to_string(seed));
        const CellSolution sol = cell_minimum(spec, kernel, seed);
        long long free_sites = 0;
        for (int i = 0; i < sol.lattice.size(); ++i)
            if (sol.window.contains(sol.lattice.site(i).proj()) &&
                !sol.state.config.frozen[std::size_t(i)])
                ++free_sites;
        csv.add_row({fmt_num(seed), fmt_num(sol.energy), fmt_num(sol.energy / spec.t),
                     fmt_num(sol.state.cut_value), fmt_num(free_sites),
                     sol.state.minimal_flag ? "1" : "0"});
        // per-layer config grid over the window bounding box
        const std::string name = "config_" + std::to_string(seed) + ".txt";
        std::ofstream f(opt.out_dir / name, std::ios::binary);
        const Rect bb = sol.window.bounding_box();
        for (int layer = 0; layer <= sol.lattice.slab_height(); ++layer) {
            f << "layer " << layer << "\n";
            for (int y = bb.y1 - 1; y >= bb.y0; --y)
                f << spin_row(sol.lattice, sol.state.config, layer, bb.x0, bb.x1, y) << "\n";
        }
        man.outputs.push_back(name);
        timer.done();
    }
    csv.save(opt.out_dir / "groundstate.csv");
    man.outputs.push_back("groundstate.csv");
}

inline void write_tension_csvs(const fs::path& dir, RunManifest& man, const CellProblemSpec& spec,
                               double p, int M, double eta, const PhiEstimate& est, int n_seeds) {
    CsvWriter csv({"nu1", "nu2", "source", "p", "M", "eta", "t", "seed", "energy_over_t",
                   "runtime_ms"});
    for (const TensionEstimate& te : est.per_t)
        for (const auto& [seed, v] : te.per_sample)
            csv.add_row({fmt_num(spec.nu_int.x), fmt_num(spec.nu_int.y), spec.source.name(),
                         fmt_num(p), fmt_num(M), fmt_num(eta), fmt_num(te.t), fmt_num(seed),
                         fmt_num(v), "0"});
    csv.save(dir / "tension.csv");
    man.outputs.push_back("tension.csv");

    CsvWriter ext({"nu1", "nu2", "source", "p", "M", "eta", "a", "b", "residual_rms", "t_min",
                   "t_max", "n_seeds"});
    double tmin = 1e300, tmax = 0;
    for (const TensionEstimate& te : est.per_t) {
        tmin = std::min(tmin, te.t);
        tmax = std::max(tmax, te.t);
    }
    ext.add_row({fmt_num(spec.nu_int.x), fmt_num(spec.nu_int.y), spec.source.name(), fmt_num(p),
                 fmt_num(M), fmt_num(eta), fmt_num(est.phi), fmt_num(est.slope),
                 fmt_num(est.residual_rms), fmt_num(tmin), fmt_num(tmax), fmt_num(n_seeds)});
    ext.save(dir / "extrapolation.csv");
    man.outputs.push_back("extrapolation.csv");
}

inline void run_tension(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    CellProblemSpec spec;
    spec.nu_int = parse_nu(cfg.get_json("nu", {0, 1}));
    double p = 1.0;
    int M = 0;
    spec.source = parse_source(cfg, &p, &M);
    spec.trace_width = cfg.get<double>("trace_width", -1.0);
    Kernel kernel = parse_kernel(cfg);
    const double eta = cfg.get<double>("eta", 0.0);
    if (eta > 0.0) kernel = kernel.with_eta(eta);
    const auto t_list = cfg.get<std::vector<double>>("t_list", {16, 32});
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    TaskTimer timer(man, "tension sweep");
    const PhiEstimate est =
        estimate_phi(spec, kernel, t_list, int(seeds.size()), seeds.front(), opt.threads);
    timer.done();
    write_tension_csvs(opt.out_dir, man, spec, p, M, eta, est, int(seeds.size()));
}

inline void run_phi1(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const IVec2 nu = parse_nu(cfg.get_json("nu", {0, 1}));
    const auto M_list = cfg.get<std::vector<int>>("M_list", {0, 1, 3, 7});
    const double t = cfg.get<double>("t", 32.0);
    const Kernel kernel = parse_kernel(cfg);
    cfg.finish();

    TaskTimer timer(man, "phi1 ladder");
    const Phi1Result res = phi1_limit(kernel, M_list, nu, t, opt.threads);
    timer.done();

    CsvWriter csv({"M", "phi1M", "ratio_per_layer", "ratio_per_M", "limit_estimate",
                   "ratio_trend_ok"});
    for (std::size_t k = 0; k < res.M_list.size(); ++k)
        csv.add_row({fmt_num(res.M_list[k]), fmt_num(res.phi1M[k]),
                     fmt_num(res.ratio_per_layer[k]), fmt_num(res.ratio_per_M[k]),
                     fmt_num(res.limit_estimate), res.ratio_trend_ok ? "1" : "0"});
    csv.save(opt.out_dir / "phi1.csv");
    man.outputs.push_back("phi1.csv");

    CsvWriter sup({"Ma", "Mb", "Msum", "lhs", "rhs", "holds"});
    for (const auto& c : res.superadditivity)
        sup.add_row({fmt_num(c.Ma), fmt_num(c.Mb), fmt_num(c.Msum), fmt_num(c.lhs),
                     fmt_num(c.rhs), c.holds ? "1" : "0"});
    sup.save(opt.out_dir / "superadditivity.csv");
    man.outputs.push_back("superadditivity.csv");
}

inline void run_linear_law(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const IVec2 nu = parse_nu(cfg.get_json("nu", {0, 1}));
    const double p = cfg.get<double>("p", 0.7);
    const auto M_list = cfg.get<std::vector<int>>("M_list", {10, 20, 40});
    const double t = cfg.get<double>("t", 48.0);
    const Kernel kernel = parse_kernel(cfg);
    const auto phi1_Ms = cfg.get<std::vector<int>>("phi1_M_list", {0, 1, 3, 7});
    const double phi1_t = cfg.get<double>("phi1_t", 32.0);
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    TaskTimer t1(man, "phi1 reference");
    const Phi1Result ref = phi1_limit(kernel, phi1_Ms, nu, phi1_t, opt.threads);
    t1.done();
    TaskTimer t2(man, "linear-law sweep");
    const SweepResult res = linear_law(p, M_list, nu, kernel, t, int(seeds.size()),
                                       ref.limit_estimate, seeds.front(), opt.threads);
    t2.done();

    CsvWriter csv({"M", "mean", "stderr", "ratio", "phi1_ref", "gap"});
    for (std::size_t k = 0; k < res.axis.size(); ++k)
        csv.add_row({fmt_num(res.axis[k]), fmt_num(res.estimates[k].mean),
                     fmt_num(res.estimates[k].stderr_mean), fmt_num(res.ratios[k]),
                     fmt_num(res.target), fmt_num(res.ratios[k] - res.target)});
    csv.save(opt.out_dir / "linear_law.csv");
    man.outputs.push_back("linear_law.csv");
}

inline void run_percolation(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const IVec2 nu = parse_nu(cfg.get_json("nu", {0, 1}));
    const double p = cfg.get<double>("p", 0.1);
    const int M = cfg.get<int>("M", 1);
    const auto eta_list = cfg.get<std::vector<double>>("eta_list", {0.1, 0.01});
    const double t = cfg.get<double>("t", 64.0);
    const double p_site = cfg.get<double>("p_site", kSiteThresholdDefault);
    const int vacant_N = cfg.get<int>("vacant_N", 64);
    const int vacant_seeds = cfg.get<int>("vacant_seeds", 20);
    const Kernel kernel = parse_kernel(cfg);
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    TaskTimer t1(man, "eta sweep");
    const PercolationSweep sweep = percolation_regime(p, M, eta_list, nu, kernel, t,
                                                      int(seeds.size()), p_site, seeds.front(),
                                                      opt.threads);
    t1.done();

    CsvWriter csv({"eta", "mean", "stderr", "ratio_over_eta", "q", "p_site", "supercritical"});
    for (std::size_t k = 0; k < sweep.sweep.axis.size(); ++k)
        csv.add_row({fmt_num(sweep.sweep.axis[k]), fmt_num(sweep.sweep.estimates[k].mean),
                     fmt_num(sweep.sweep.estimates[k].stderr_mean),
                     fmt_num(sweep.sweep.ratios[k]), fmt_num(sweep.regime.q),
                     fmt_num(sweep.regime.p_site), sweep.regime.supercritical() ? "1" : "0"});
    csv.save(opt.out_dir / "percolation.csv");
    man.outputs.push_back("percolation.csv");

    TaskTimer t2(man, "vacant paths");
    CsvWriter vp({"seed", "found", "path_vertices", "deposited_energy_in_R", "substrate_energy",
                  "certified"});
    for (int s = 0; s < vacant_seeds; ++s) {
        const uint64_t seed = seeds.front() + uint64_t(s);
        const PercolationCertificate cert =
            percolation_certificate(p, M, vacant_N, seed, kernel.without_eta(), 0.0);
        vp.add_row({fmt_num(seed), cert.path_found ? "1" : "0", fmt_num(cert.path_vertices),
                    fmt_num(cert.deposited_energy_in_R), fmt_num(cert.substrate_energy),
                    cert.certified ? "1" : "0"});
    }
    t2.done();
    vp.save(opt.out_dir / "vacant_paths.csv");
    man.outputs.push_back("vacant_paths.csv");
}

inline void run_large_m(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const IVec2 nu = parse_nu(cfg.get_json("nu", {0, 1}));
    const double p = cfg.get<double>("p", 0.5);
    const auto M_list = cfg.get<std::vector<int>>("M_list", {40});
    const double t = cfg.get<double>("t", 48.0);
    const double eta = cfg.get<double>("eta", 0.1);
    const double eta_check = cfg.get<double>("eta_check", 0.01);
    const Kernel kernel = parse_kernel(cfg);
    const auto seeds = parse_seeds(cfg, opt);
    cfg.finish();

    TaskTimer timer(man, "large-M sweep");
    const LargeMResult res = largeM_limit(p, M_list, nu, kernel, t, int(seeds.size()), eta,
                                          eta_check, seeds.front(), opt.threads);
    timer.done();

    CsvWriter csv({"M", "mean", "stderr", "ratio_over_M", "target", "eta"});
    for (std::size_t k = 0; k < res.sweep.axis.size(); ++k)
        csv.add_row({fmt_num(res.sweep.axis[k]), fmt_num(res.sweep.estimates[k].mean),
                     fmt_num(res.sweep.estimates[k].stderr_mean), fmt_num(res.sweep.ratios[k]),
                     fmt_num(res.target), fmt_num(eta)});
    csv.save(opt.out_dir / "large_m.csv");
    man.outputs.push_back("large_m.csv");

    CsvWriter chk({"eta_primary", "eta_check", "estimate_primary", "estimate_check",
                   "combined_stderr", "consistent"});
    chk.add_row({fmt_num(res.eta_primary), fmt_num(res.eta_check), fmt_num(res.estimate_primary),
                 fmt_num(res.estimate_check), fmt_num(res.combined_stderr),
                 res.eta_consistent ? "1" : "0"});
    chk.save(opt.out_dir / "large_m_eta_check.csv");
    man.outputs.push_back("large_m_eta_check.csv");
}

inline void run_planelike(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const auto nu_list_j = cfg.get_json("nu_list", {{0, 1}, {1, 1}, {1, 2}});
    const auto M_list = cfg.get<std::vector<int>>("M_list", {1, 2, 4});
    const auto m_list = cfg.get<std::vector<int>>("m_list", {1, 2, 3});
    const int shifts_max = cfg.get<int>("shifts_max", 3);
    const int n_audits = cfg.get<int>("audits", 12);
    const Kernel kernel = parse_kernel(cfg);
    cfg.finish();

    std::vector<IVec2> shifts;
    for (int kx = -shifts_max; kx <= shifts_max; ++kx)
        for (int ky = -shifts_max; ky <= shifts_max; ++ky)
            if (kx || ky) shifts.push_back({kx, ky});

    CsvWriter csv({"nu1", "nu2", "M", "lambda_used", "lambda_meas", "unconstrained",
                   "birkhoff_ok", "nosym_ok", "widen_top_same", "widen_energy_equal",
                   "audits_run", "audits_improved"});
    auto certificates = nlohmann::json::array();
    for (const auto& nu_j : nu_list_j) {
        const IVec2 nu = parse_nu(nu_j);
        for (int M : M_list) {
            TaskTimer timer(man, "planelike nu=(" + std::to_string(nu.x) + "," +
                                     std::to_string(nu.y) + ") M=" + std::to_string(M));
            PlanelikeOptions popt;
            popt.n_audits = n_audits;
            const PlanelikeCertificate cert = certify_planelike(nu, M, kernel, popt);
            const BirkhoffReport bk = cert.aborted ? BirkhoffReport{}
                                                   : check_birkhoff(cert.u, shifts);
            const SymmetryBreakReport sym = check_no_symmetry_breaking(
                nu, 0.0, cert.aborted ? 8.0 : cert.lambda_used, M, kernel, m_list);
            csv.add_row({fmt_num(nu.x), fmt_num(nu.y), fmt_num(M), fmt_num(cert.lambda_used),
                         fmt_num(cert.lambda_meas), cert.unconstrained ? "1" : "0",
                         bk.ok ? "1" : "0", sym.equal ? "1" : "0",
                         cert.widen_top_same ? "1" : "0", cert.widen_energy_equal ? "1" : "0",
                         fmt_num(cert.audits_run), fmt_num(cert.audits_improved)});
            nlohmann::json cj;
            cj["nu"] = {nu.x, nu.y};
            cj["M"] = M;
            cj["lambda_used"] = cert.lambda_used;
            cj["lambda_meas"] = cert.lambda_meas;
            cj["aborted"] = cert.aborted;
            cj["note"] = cert.note;
            cj["audits_run"] = cert.audits_run;
            cj["audits_improved"] = cert.audits_improved;
            auto aj = nlohmann::json::array();
            for (const auto& a : cert.audit_results)
                aj.push_back({{"window", {a.window.x0, a.window.y0, a.window.x1, a.window.y1}},
                              {"improvement", a.improvement}});
            cj["audits"] = aj;
            cj["birkhoff_violations"] = bk.violations.size();
            certificates.push_back(cj);

            if (!cert.aborted) {
                // minimizer dump: rows by <nu, z> level, then by generator step
                const std::string name = "minimizer_nu" + std::to_string(nu.x) +
                                         std::to_string(nu.y) + "_M" + std::to_string(M) + ".txt";
                std::ofstream f(opt.out_dir / name, std::ios::binary);
                const FundamentalDomain fd = fundamental_domain(
                    1, nu, cert.u.theta - 2.0, cert.u.lambda + 2.0);
                for (int layer = 0; layer <= M; ++layer) {
                    f << "layer " << layer << "\n";
                    for (const IVec2& z : fd.member_sites) {
                        f << fmt_num(cert.u.dir.band_coord(z)) << " "
                          << (cert.u.spin_at(z, layer) > 0 ? '+' : '-') << "\n";
                    }
                }
                man.outputs.push_back(name);
            }
            timer.done(cert.aborted ? "aborted" : "ok");
        }
    }
    csv.save(opt.out_dir / "planelike.csv");
    man.outputs.push_back("planelike.csv");
    std::ofstream cf(opt.out_dir / "certificates.json", std::ios::binary);
    cf << certificates.dump(2) << "\n";
    man.outputs.push_back("certificates.json");
}

inline void run_audit(ConfigView& cfg, const RunOptions& opt, RunManifest& man) {
    const int n_pairs = cfg.get<int>("submodularity_pairs", 100);
    const int n_solves = cfg.get<int>("trace_solves", 50);
    const int n_partitions = cfg.get<int>("subadditivity_partitions", 20);
    const uint64_t seed0 = cfg.get<uint64_t>("seed", 11);
    cfg.finish();

    CsvWriter csv({"check", "cases", "violations", "worst_margin"});

    // submodularity of the two-state energy on random windows
    {
        TaskTimer timer(man, "submodularity");
        SplitMix rng(seed0);
        int violations = 0;
        double worst = 1e300;
        for (int c = 0; c < n_pairs; ++c) {
            const ThinLattice lat = generate_deposition(
                {0.6, 2, Rect::centered(4, 4), rng.next()});
            const Kernel kernel = Kernel::nearest_neighbor(
                double(1 + int(rng.next_below(8))) / 4.0);
            SpinConfig u = SpinConfig::two_state(lat), v = SpinConfig::two_state(lat);
            SpinConfig lo = SpinConfig::two_state(lat), hi = SpinConfig::two_state(lat);
            for (int i = 0; i < lat.size(); ++i) {
                const int a = rng.next_double() < 0.5 ? -1 : +1;
                const int b = rng.next_double() < 0.5 ? -1 : +1;
                u.set_spin(i, a);
                v.set_spin(i, b);
                lo.set_spin(i, std::min(a, b));
                hi.set_spin(i, std::max(a, b));
            }
            const Window w = Window::axis(Rect::centered(4, 4));
            const double margin = energy(lat, kernel, u, w).total +
                                  energy(lat, kernel, v, w).total -
                                  energy(lat, kernel, lo, w).total -
                                  energy(lat, kernel, hi, w).total;
            worst = std::min(worst, margin);
            if (margin < -1e-9) ++violations;
        }
        csv.add_row({"submodularity", fmt_num(n_pairs), fmt_num(violations), fmt_num(worst)});
        timer.done();
    }

    // trace-width monotonicity over random sources and directions
    {
        TaskTimer timer(man, "trace-monotonicity");
        SplitMix rng(seed0 + 1);
        const std::vector<double> widths{2.0, 3.0, 4.0};
        int solves = 0, violations = 0;
        double worst = 1e300;
        while (solves < n_solves) {
            CellProblemSpec spec;
            const IVec2 dirs[3] = {{0, 1}, {1, 1}, {1, 2}};
            spec.nu_int = dirs[rng.next_below(3)];
            spec.t = 20.0;
            spec.source = (rng.next_double() < 0.5)
                              ? LatticeSource::layered(1 + int(rng.next_below(2)))
                              : LatticeSource::deposition(0.5 + 0.4 * rng.next_double(),
                                                          2 + int(rng.next_below(3)));
            const Kernel kernel = Kernel::nearest_neighbor(1.0);
            const TraceWidthReport rep =
                eta_trace_monotonicity(spec, kernel, widths, rng.next());
            solves += int(rep.per_width.size());
            if (!rep.monotone) ++violations;
            for (std::size_t i = 1; i < rep.per_width.size(); ++i)
                worst = std::min(worst, rep.per_width[i].second - rep.per_width[i - 1].second);
        }
        csv.add_row({"trace-monotonicity", fmt_num(solves), fmt_num(violations), fmt_num(worst)});
        timer.done();
    }

    // stripe subadditivity on random aligned partitions
    {
        TaskTimer timer(man, "subadditivity");
        SplitMix rng(seed0 + 2);
        int violations = 0;
        double worst = 1e300;
        for (int c = 0; c < n_partitions; ++c) {
            const IVec2 nu = (c % 2 == 0) ? IVec2{0, 1} : IVec2{1, 1};
            const RationalDirection dir = RationalDirection::from(nu);
            const Vec2 nuv = dir.nu_unit();
            const Vec2 tau{-nuv.y, nuv.x};
            const double big = 28.0;
            const int k = 2 + int(rng.next_below(2));
            const double w = (big - 6.0) / double(k);
            const double shift = (rng.next_double() < 0.5) ? 0.0 : 1.0;
            // shifted datum lines engage clause (v): inset the union along nu
            std::vector<SubRectSpec> subs;
            for (int i = 0; i < k; ++i) {
                SubRectSpec s;
                s.center = Vec2{0, 0} + nuv * shift + tau * ((double(i) - (k - 1) / 2.0) * w);
                s.len_nu = big * 0.8 - 6.0 * shift;
                s.len_perp = w;
                subs.push_back(s);
            }
            const LatticeSource src = (c % 3 == 0)
                                          ? LatticeSource::layered(1)
                                          : LatticeSource::deposition(0.5, 3);
            const SubadditivityReport rep = subadditivity_audit(
                nu, {0, 0}, big, subs, src, Kernel::nearest_neighbor(1.0), 2.0, rng.next());
            if (!rep.hypotheses_ok || !rep.holds) ++violations;
            worst = std::min(worst, rep.margin);
        }
        csv.add_row({"subadditivity", fmt_num(n_partitions), fmt_num(violations), fmt_num(worst)});
        timer.done();
    }

    csv.save(opt.out_dir / "audit.csv");
    man.outputs.push_back("audit.csv");
}

}  // namespace detail

/// Executes the named experiment from a JSON config. Writes CSVs, a summary
/// text file, and the run manifest into opt.out_dir.
inline int run_experiment(const nlohmann::json& config, RunOptions opt) {
    ConfigView cfg(config);
    const std::string name = cfg.require<std::string>("experiment");
    if (opt.out_dir.empty())
        opt.out_dir = cfg.get<std::string>("out", "results/" + name);
    else
        cfg.get<std::string>("out", opt.out_dir.string());
    fs::create_directories(opt.out_dir);

    RunManifest man;
    man.experiment = name;
    man.flags = opt.flags;
    man.started = utc_now();

    if (name == "lattice-gen")
        detail::run_lattice_gen(cfg, opt, man);
    else if (name == "groundstate")
        detail::run_groundstate(cfg, opt, man);
    else if (name == "tension")
        detail::run_tension(cfg, opt, man);
    else if (name == "phi1")
        detail::run_phi1(cfg, opt, man);
    else if (name == "linear-law")
        detail::run_linear_law(cfg, opt, man);
    else if (name == "percolation")
        detail::run_percolation(cfg, opt, man);
    else if (name == "large-m")
        detail::run_large_m(cfg, opt, man);
    else if (name == "planelike")
        detail::run_planelike(cfg, opt, man);
    else if (name == "audit")
        detail::run_audit(cfg, opt, man);
    else
        throw SchemaError("unknown experiment: " + name);

    man.finished = utc_now();
    man.effective_config = cfg.effective();
    man.save(opt.out_dir);

    std::ofstream sum(opt.out_dir / "summary.txt", std::ios::binary);
    sum << "experiment: " << name << "\n";
    sum << "outputs:\n";
    for (const auto& o : man.outputs) sum << "  " << o << "\n";
    return 0;
}

/// Aggregates manifests under a directory into one table plus x/y plot-data
/// text files (no rendering). Missing manifests are listed and skipped.
inline int summarize(const fs::path& dir, std::ostream& log = std::cout) {
    std::vector<fs::path> roots;
    if (fs::exists(dir / "manifest.json")) roots.push_back(dir);
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && fs::exists(e.path() / "manifest.json"))
                roots.push_back(e.path());
    std::sort(roots.begin(), roots.end());

    std::ofstream table(dir / "summary_table.txt", std::ios::binary);
    table << "experiment\tconfig_hash\tdir\toutputs\n";
    if (roots.empty()) {
        log << "warning: no manifests found under " << dir << "\n";
        table << "(empty)\n";
        return 0;
    }
    for (const auto& root : roots) {
        nlohmann::json man;
        std::ifstream f(root / "manifest.json");
        f >> man;
        table << man.value("experiment", "?") << "\t" << man.value("config_hash", "?") << "\t"
              << root.filename().string() << "\t" << man["outputs"].size() << "\n";
        // inline every CSV so estimates, fits, and audit outcomes land in one table
        for (const auto& out : man["outputs"]) {
            const fs::path p = root / out.get<std::string>();
            if (p.extension() != ".csv" || !fs::exists(p)) continue;
            table << "  -- " << out.get<std::string>() << "\n";
            std::ifstream cf(p);
            for (std::string line; std::getline(cf, line);) {
                for (auto& ch : line)
                    if (ch == ',') ch = '\t';
                table << "  " << line << "\n";
            }
        }
        // plot data: first column vs a "mean"-like column of each CSV output
        for (const auto& out : man["outputs"]) {
            const fs::path csv_path = root / out.get<std::string>();
            if (csv_path.extension() != ".csv" || !fs::exists(csv_path)) {
                if (!fs::exists(csv_path)) log << "warning: missing output " << csv_path << "\n";
                continue;
            }
            std::ifstream cf(csv_path);
            std::string header;
            if (!std::getline(cf, header)) continue;
            std::vector<std::string> cols;
            std::stringstream hs(header);
            for (std::string cell; std::getline(hs, cell, ',');) cols.push_back(cell);
            int ycol = -1;
            for (std::size_t i = 0; i < cols.size(); ++i)
                if (cols[i] == "mean" || cols[i] == "energy_over_t" || cols[i] == "phi1M")
                    ycol = int(i);
            if (ycol <= 0) continue;
            std::ofstream pf(dir / (csv_path.stem().string() + "_" +
                                    root.filename().string() + ".xy"),
                             std::ios::binary);
            for (std::string line; std::getline(cf, line);) {
                std::stringstream ls(line);
                std::vector<std::string> cells;
                for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
                if (int(cells.size()) > ycol) pf << cells[0] << " " << cells[std::size_t(ycol)] << "\n";
            }
        }
    }
    return 0;
}

}  // namespace thinfilm
