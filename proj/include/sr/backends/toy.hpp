#pragma once

#include <memory>

#include "sr/distill/denoiser.hpp"
#include "sr/distill/schedule.hpp"
#include "sr/perceptual/perceptual.hpp"

namespace sr::backends {

// Two bias-free convolution stages with a tanh between them; taps "t1"
// (stage-1 convolution output) and "t2" (stage-2 convolution output).
// Kernels are fixed from the seed and never updated.
class ToyExtractor final : public perceptual::FeatureExtractor {
public:
    ToyExtractor(uint64_t seed, int kernel_size = 3);

    const std::vector<std::string>& taps() const override { return taps_; }
    nn::NodePtr extract(const nn::NodePtr& image_chw,
                        const std::string& tap) const override;
    uint64_t params_fingerprint() const override;

    const nn::Tensor& stage1_kernel() const { return w1_; }
    const nn::Tensor& stage2_kernel() const { return w2_; }

private:
    std::vector<std::string> taps_{"t1", "t2"};
    nn::Tensor w1_, w2_; // (out, in, k*k)
    nn::Tensor zero_b1_, zero_b2_;
};

std::shared_ptr<perceptual::FeatureExtractor> make_toy_extractor(uint64_t seed,
                                                                 int kernel_size = 3);

enum class ToyDenoiserKind { Oracle, Identity, Structure };
ToyDenoiserKind toy_denoiser_kind_from(const std::string& name); // throws ConfigError

// Returns the exact noise handed over through the side channel; makes
// "perfect denoiser => zero loss" an exact test rather than a statistical one.
class ToyOracleDenoiser final : public distill::GuidedDenoiser {
public:
    std::string name() const override { return "toy-oracle"; }
    void set_expected_noise(nn::Tensor eps) { eps_ = std::move(eps); }

protected:
    nn::Tensor predict(const nn::Tensor& noisy, const nn::Tensor&, int) const override;

private:
    nn::Tensor eps_;
};

// d(z, c, t) = z
class ToyIdentityDenoiser final : public distill::GuidedDenoiser {
public:
    std::string name() const override { return "toy-identity"; }

protected:
    nn::Tensor predict(const nn::Tensor& noisy, const nn::Tensor&, int) const override {
        return noisy;
    }
};

// d(z, c, t) = (z - sqrt(ab_t) * s(c)) / sqrt(1 - ab_t), with s(c) the
// condition broadcast to the image's channel count. Its distillation
// gradient points from y_hat toward s(c).
class ToyStructureDenoiser final : public distill::GuidedDenoiser {
public:
    explicit ToyStructureDenoiser(distill::NoiseSchedule sched)
        : sched_(std::move(sched)) {}
    std::string name() const override { return "toy-structure"; }

protected:
    nn::Tensor predict(const nn::Tensor& noisy, const nn::Tensor& cond,
                       int t) const override;

private:
    distill::NoiseSchedule sched_;
};

std::shared_ptr<distill::GuidedDenoiser>
make_toy_denoiser(ToyDenoiserKind kind, const distill::NoiseSchedule& sched);

std::shared_ptr<distill::GuidanceFunction> make_toy_guidance();

} // namespace sr::backends
