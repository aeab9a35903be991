// Batch entry point: runs experiment configs and summarizes result
// directories. All numeric outputs are a pure function of (config, seeds);
// timestamps and runtimes live only in the manifest.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "thinfilm/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"thin-film spin-system batch runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, summarize_dir;
    uint64_t seed_base = 0;
    int seed_count = 0;
    int threads = 0;
    bool have_seed_base = false, have_seed_count = false;

    CLI::App* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "JSON experiment config")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed-base", seed_base, "override seed base")
        ->each([&](const std::string&) { have_seed_base = true; });
    run->add_option("--seeds", seed_count, "override seed count")
        ->each([&](const std::string&) { have_seed_count = true; });
    run->add_option("--threads", threads, "worker threads (default: THINFILM_THREADS or cores)");

    CLI::App* sum = app.add_subcommand("summarize", "aggregate manifests into a table");
    sum->add_option("dir", summarize_dir, "result directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "{\"error\":\"cannot open config\",\"path\":\"" << config_path
                          << "\"}\n";
                return 2;
            }
            nlohmann::json config;
            try {
                in >> config;
            } catch (const std::exception& e) {
                std::cerr << "{\"error\":\"config is not valid JSON\",\"detail\":\"" << e.what()
                          << "\"}\n";
                return 2;
            }
            thinfilm::RunOptions opt;
            if (!out_dir.empty()) opt.out_dir = out_dir;
            if (have_seed_base) opt.seed_base = seed_base;
            if (have_seed_count) opt.seed_count = seed_count;
            opt.threads = threads;
            opt.flags = {{"out", out_dir},
                         {"seed_base", have_seed_base ? nlohmann::json(seed_base) : nullptr},
                         {"seeds", have_seed_count ? nlohmann::json(seed_count) : nullptr},
                         {"threads", threads}};
            return thinfilm::run_experiment(config, opt);
        }
        return thinfilm::summarize(summarize_dir);
    } catch (const thinfilm::SchemaError& e) {
        nlohmann::json err{{"error", "config schema"}, {"message", e.what()}};
        if (!e.details.is_null()) err["details"] = e.details;
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"runtime\",\"message\":\"" << e.what() << "\"}\n";
        return 1;
    }
}
