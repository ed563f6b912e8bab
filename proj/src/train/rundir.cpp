#include "sr/train/rundir.hpp"

#include <chrono>
#include <fstream>

#include "sr/core/errors.hpp"

namespace sr::train {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunDirWriter::RunDirWriter(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

namespace {

void atomic_write(const fs::path& target, const std::string& content) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw core::IoError("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

} // namespace

void RunDirWriter::write_manifest(const RunManifest& m) const {
    json j;
    j["command"] = m.command;
    j["config"] = m.config;
    j["dataset_fingerprint"] = m.dataset_fingerprint;
    j["backends"] = m.backends;
    j["seed"] = m.seed;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["artifacts"] = m.artifacts;
    atomic_write(manifest_path(), j.dump(2) + "\n");
}

void RunDirWriter::write_config_copy(const std::map<std::string, std::string>& kv) const {
    std::string text;
    for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
    atomic_write(root_ / "config.txt", text);
}

void RunDirWriter::write_report(const json& report) const {
    atomic_write(report_path(), report.dump(2) + "\n");
}

} // namespace sr::train
