#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace thinfilm {

constexpr const char* kArtifactVersion = "0.1.0";

/// Deterministic number formatting for result files: shortest %.12g form.
inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string fmt_num(long long v) { return std::to_string(v); }
inline std::string fmt_num(int v) { return std::to_string(v); }
inline std::string fmt_num(uint64_t v) { return std::to_string(v); }

/// Row-oriented CSV writer; all values pass through fmt_num so reruns are
/// byte-identical.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw std::invalid_argument("CsvWriter: column mismatch");
        rows_.push_back(std::move(row));
    }

    std::string str() const {
        std::string out = join(header_);
        for (const auto& r : rows_) out += join(r);
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path.string());
        f << str();
    }

  private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        return line;
    }
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// FNV-1a over the canonical (sorted-key) JSON dump: stable under key
/// reordering in the input file.
inline std::string config_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();  // nlohmann objects iterate in sorted key order
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Run manifest: the only place timestamps and runtimes live, so result CSVs
/// stay byte-reproducible. Every output file is referenced exactly once.
struct RunManifest {
    nlohmann::json effective_config;
    std::string experiment;
    std::string started, finished;
    struct Task {
        std::string name;
        std::string status;
        long long runtime_ms = 0;
    };
    std::vector<Task> tasks;
    std::vector<std::string> outputs;
    nlohmann::json flags;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["artifact_version"] = kArtifactVersion;
        j["rng_algorithm"] = "sm64-column-v1";
        j["experiment"] = experiment;
        j["config_hash"] = config_hash(effective_config);
        j["effective_config"] = effective_config;
        j["started_utc"] = started;
        j["finished_utc"] = finished;
        auto tj = nlohmann::json::array();
        for (const auto& t : tasks)
            tj.push_back({{"name", t.name}, {"status", t.status}, {"runtime_ms", t.runtime_ms}});
        j["tasks"] = tj;
        j["outputs"] = outputs;
        j["flags"] = flags;
        return j;
    }

    void save(const std::filesystem::path& dir) const {
        std::ofstream f(dir / "manifest.json");
        if (!f) throw std::runtime_error("cannot write manifest in " + dir.string());
        f << to_json().dump(2) << "\n";
    }
};

}  // namespace thinfilm
