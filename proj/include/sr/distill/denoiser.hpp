#pragma once

#include <mutex>
#include <optional>
#include <string>

#include "sr/distill/guidance.hpp"
#include "sr/nn/tensor.hpp"

namespace sr::distill {

// Frozen guided denoiser behind the score-distillation loss. Prediction
// takes the noisy image in pipeline space ([0,1]-anchored), the condition
// image, and the public (t = 0 noisiest) step index, returning predicted
// noise of the same shape. Access is serialized per instance; backends
// that tolerate concurrency can be instantiated multiple times.
class GuidedDenoiser {
public:
    virtual ~GuidedDenoiser() = default;

    virtual std::string name() const = 0;

    // Text prompt is fixed to the empty string; image guidance replaces it.
    std::string prompt() const { return {}; }

    // nullopt = accepts any condition kind
    virtual std::optional<GuidanceKind> accepted_condition() const { return std::nullopt; }

    nn::Tensor predict_noise(const nn::Tensor& noisy, const nn::Tensor& condition,
                             int t) const {
        std::lock_guard<std::mutex> lock(mu_);
        return predict(noisy, condition, t);
    }

    // Derivative query. The distillation loss never calls this: its gradient
    // is the stop-gradient residual form. Kept virtual so tests can verify
    // the contract with a poisoning wrapper.
    virtual nn::Tensor vjp(const nn::Tensor& /*noisy*/, const nn::Tensor& /*condition*/,
                           int /*t*/, const nn::Tensor& /*upstream*/) const;

    virtual uint64_t params_fingerprint() const { return 0; }

protected:
    virtual nn::Tensor predict(const nn::Tensor& noisy, const nn::Tensor& condition,
                               int t) const = 0;

private:
    mutable std::mutex mu_;
};

} // namespace sr::distill
