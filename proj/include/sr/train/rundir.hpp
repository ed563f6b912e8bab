#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sr::train {

// Reproducibility record for one command invocation. Written atomically at
// run start (temp file + rename) and finalized at the end; every output
// directory carries exactly one.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::string dataset_fingerprint; // hex content hash
    std::map<std::string, std::string> backends; // role -> "name@fingerprint"
    uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> artifacts;
};

std::string iso8601_now();

class RunDirWriter {
public:
    explicit RunDirWriter(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path manifest_path() const { return root_ / "manifest.json"; }
    std::filesystem::path report_path() const { return root_ / "report.json"; }

    void write_manifest(const RunManifest& m) const; // atomic replace
    void write_config_copy(const std::map<std::string, std::string>& kv) const;
    void write_report(const nlohmann::json& report) const;

private:
    std::filesystem::path root_;
};

} // namespace sr::train
