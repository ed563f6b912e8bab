#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sr/backends/toy.hpp"

namespace sr::backends {

enum class Role { Extractor, Denoiser, Guidance };
std::string to_string(Role r);

struct Availability {
    bool available = false;
    std::string diagnostic; // path echo or reason when unavailable
};

// Declaration of a pretrained backend artifact; the registry probes the
// artifact path without loading weights.
struct RealBackendDecl {
    std::string name;
    Role role = Role::Denoiser;
    std::filesystem::path artifact;
    std::string native_range = "[-1,1]"; // adapter converts at the boundary
    bool latent_space = false;           // pixel-space unless declared
    std::string condition;               // guidance kind for denoisers
};

struct RealBackendConfig {
    std::vector<RealBackendDecl> entries;
};

// `backends.json`: {"entries": [{"name", "role", "artifact", ...}]}
RealBackendConfig load_backend_config(const std::filesystem::path& file);

// Name -> factory per backend role. Toy entries are always present and
// always available; resolving an unavailable entry throws BackendError.
class BackendRegistry {
public:
    BackendRegistry(); // toys only

    std::vector<std::string> names(Role role) const;
    bool has(Role role, const std::string& name) const;
    Availability probe(Role role, const std::string& name) const;

    std::shared_ptr<perceptual::FeatureExtractor>
    make_extractor(const std::string& name, uint64_t seed) const;
    std::shared_ptr<distill::GuidedDenoiser>
    make_denoiser(const std::string& name, const distill::NoiseSchedule& sched) const;
    std::shared_ptr<distill::GuidanceFunction>
    make_guidance(const std::string& name) const;

    void add_real(const RealBackendDecl& decl);

    // test hook: custom guidance entry (the conditioning-comparison harness
    // accepts injected stubs this way)
    void add_guidance_factory(const std::string& name,
                              std::function<std::shared_ptr<distill::GuidanceFunction>()> f);

private:
    struct Entry {
        bool toy = true;
        RealBackendDecl decl;
        std::function<std::shared_ptr<distill::GuidanceFunction>()> guidance_factory;
    };
    const Entry& find(Role role, const std::string& name) const;
    std::map<Role, std::map<std::string, Entry>> entries_;
};

// Registry with toy entries plus one entry per declared pretrained backend.
BackendRegistry register_real_backends(const RealBackendConfig& config);

} // namespace sr::backends
