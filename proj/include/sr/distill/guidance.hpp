#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>

#include "sr/core/image.hpp"
#include "sr/nn/graph.hpp"

namespace sr::distill {

using nn::real;

enum class GuidanceKind { Canny, Lineart, Depth, SoftEdge, Toy };

std::string to_string(GuidanceKind k);
GuidanceKind guidance_kind_from(const std::string& name); // throws ConfigError

// Deterministic map from a target frame to the condition image fed to the
// guided denoiser. Condition channels stay in [0,1].
class GuidanceFunction {
public:
    virtual ~GuidanceFunction() = default;

    virtual GuidanceKind kind() const = 0;
    virtual int out_channels() const = 0;
    virtual bool differentiable() const = 0;
    virtual uint64_t params_fingerprint() const { return 0; }

    core::ImagePlane condition(const core::ImagePlane& x) const;

    // Graph route for differentiable kinds; others throw ConfigError.
    virtual nn::NodePtr condition_node(const nn::NodePtr& x_chw) const;

    uint64_t calls() const { return calls_.load(); }

protected:
    virtual core::ImagePlane compute(const core::ImagePlane& x) const = 0;

private:
    mutable std::atomic<uint64_t> calls_{0};
};

// Gaussian blur + Sobel + non-maximum suppression + hysteresis; binary
// {0,1} single-channel output. Not differentiable.
class CannyGuidance final : public GuidanceFunction {
public:
    CannyGuidance(real sigma = 1.0, real low = 0.06, real high = 0.16)
        : sigma_(sigma), low_(low), high_(high) {}
    GuidanceKind kind() const override { return GuidanceKind::Canny; }
    int out_channels() const override { return 1; }
    bool differentiable() const override { return false; }

protected:
    core::ImagePlane compute(const core::ImagePlane& x) const override;

private:
    real sigma_, low_, high_;
};

// Sobel magnitude of luminance, normalized to [0,1]; smooth and
// differentiable, the test-suite stand-in for neural guidance models.
class ToyEdgeGuidance final : public GuidanceFunction {
public:
    GuidanceKind kind() const override { return GuidanceKind::Toy; }
    int out_channels() const override { return 1; }
    bool differentiable() const override { return true; }
    nn::NodePtr condition_node(const nn::NodePtr& x_chw) const override;

protected:
    core::ImagePlane compute(const core::ImagePlane& x) const override;
};

// Per-frame condition cache; conditions are immutable once computed.
class ConditionCache {
public:
    const core::ImagePlane& get(const GuidanceFunction& g, int frame_index,
                                const core::ImagePlane& x);
    void clear() { cache_.clear(); }

private:
    std::map<int, core::ImagePlane> cache_;
};

} // namespace sr::distill
