#include "sr/backends/registry.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "sr/core/errors.hpp"

namespace sr::backends {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
    case Role::Extractor: return "extractor";
    case Role::Denoiser: return "denoiser";
    case Role::Guidance: return "guidance";
    }
    return "?";
}

namespace {

Role role_from(const std::string& s) {
    if (s == "extractor") return Role::Extractor;
    if (s == "denoiser") return Role::Denoiser;
    if (s == "guidance") return Role::Guidance;
    throw core::ConfigError("unknown backend role: " + s);
}

} // namespace

RealBackendConfig load_backend_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw core::IoError("cannot open backend config " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw core::ConfigError("backend config parse error: " + std::string(e.what()));
    }
    RealBackendConfig cfg;
    for (const auto& e : j.value("entries", json::array())) {
        RealBackendDecl d;
        d.name = e.at("name").get<std::string>();
        d.role = role_from(e.at("role").get<std::string>());
        d.artifact = e.at("artifact").get<std::string>();
        d.native_range = e.value("native_range", d.native_range);
        d.latent_space = e.value("latent_space", false);
        d.condition = e.value("condition", "");
        cfg.entries.push_back(std::move(d));
    }
    return cfg;
}

BackendRegistry::BackendRegistry() {
    entries_[Role::Extractor]["toy"] = Entry{};
    for (const char* n : {"toy-oracle", "toy-identity", "toy-structure"})
        entries_[Role::Denoiser][n] = Entry{};
    entries_[Role::Guidance]["toy"] = Entry{};
    entries_[Role::Guidance]["canny"] = Entry{};
}

std::vector<std::string> BackendRegistry::names(Role role) const {
    std::vector<std::string> out;
    auto it = entries_.find(role);
    if (it == entries_.end()) return out;
    for (const auto& [name, _] : it->second) out.push_back(name);
    return out;
}

bool BackendRegistry::has(Role role, const std::string& name) const {
    auto it = entries_.find(role);
    return it != entries_.end() && it->second.count(name) > 0;
}

const BackendRegistry::Entry& BackendRegistry::find(Role role,
                                                    const std::string& name) const {
    auto it = entries_.find(role);
    if (it == entries_.end() || !it->second.count(name))
        throw core::BackendError("no " + to_string(role) + " backend named '" + name +
                                 "'");
    return it->second.at(name);
}

Availability BackendRegistry::probe(Role role, const std::string& name) const {
    auto it = entries_.find(role);
    if (it == entries_.end() || !it->second.count(name))
        return {false, "not registered: " + name};
    const Entry& e = it->second.at(name);
    if (e.toy || e.guidance_factory) return {true, "builtin"};
    if (!fs::exists(e.decl.artifact))
        return {false, "artifact missing: " + e.decl.artifact.string()};
    return {true, e.decl.artifact.string()};
}

std::shared_ptr<perceptual::FeatureExtractor>
BackendRegistry::make_extractor(const std::string& name, uint64_t seed) const {
    const Entry& e = find(Role::Extractor, name);
    if (e.toy) return make_toy_extractor(seed);
    auto a = probe(Role::Extractor, name);
    if (!a.available)
        throw core::BackendError("extractor '" + name + "' unavailable: " + a.diagnostic);
    // Pretrained perceptual networks are consumed through this interface but
    // no inference runtime ships in this build.
    throw core::BackendError("extractor '" + name +
                             "': no runtime adapter in this build (artifact " +
                             e.decl.artifact.string() + ")");
}

std::shared_ptr<distill::GuidedDenoiser>
BackendRegistry::make_denoiser(const std::string& name,
                               const distill::NoiseSchedule& sched) const {
    const Entry& e = find(Role::Denoiser, name);
    if (e.toy) return make_toy_denoiser(toy_denoiser_kind_from(name), sched);
    auto a = probe(Role::Denoiser, name);
    if (!a.available)
        throw core::BackendError("denoiser '" + name + "' unavailable: " + a.diagnostic);
    throw core::BackendError("denoiser '" + name +
                             "': no runtime adapter in this build (artifact " +
                             e.decl.artifact.string() + ")");
}

std::shared_ptr<distill::GuidanceFunction>
BackendRegistry::make_guidance(const std::string& name) const {
    const Entry& e = find(Role::Guidance, name);
    if (e.guidance_factory) return e.guidance_factory();
    if (e.toy) {
        if (name == "toy") return make_toy_guidance();
        if (name == "canny") return std::make_shared<distill::CannyGuidance>();
    }
    auto a = probe(Role::Guidance, name);
    if (!a.available)
        throw core::BackendError("guidance '" + name + "' unavailable: " + a.diagnostic);
    throw core::BackendError("guidance '" + name +
                             "': no runtime adapter in this build (artifact " +
                             e.decl.artifact.string() + ")");
}

void BackendRegistry::add_real(const RealBackendDecl& decl) {
    Entry e;
    e.toy = false;
    e.decl = decl;
    entries_[decl.role][decl.name] = std::move(e);
}

void BackendRegistry::add_guidance_factory(
    const std::string& name,
    std::function<std::shared_ptr<distill::GuidanceFunction>()> f) {
    Entry e;
    e.toy = false;
    e.guidance_factory = std::move(f);
    entries_[Role::Guidance][name] = std::move(e);
}

BackendRegistry register_real_backends(const RealBackendConfig& config) {
    BackendRegistry reg;
    for (const auto& d : config.entries) reg.add_real(d);
    return reg;
}

} // namespace sr::backends
