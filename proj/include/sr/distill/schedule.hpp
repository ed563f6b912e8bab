#pragma once

#include <string>
#include <vector>

#include "sr/nn/tensor.hpp"

namespace sr::distill {

using nn::real;

// Underlying continuous schedule: sqrt-space linear betas over the full
// training range, subsampled to `steps` entries. Public indexing follows
// the convention t = 0 noisiest, t = steps-1 least noisy; the adapter to
// any backend sampler owns the translation to its internal indexing.
struct ScheduleConfig {
    int steps = 30;
    int train_steps = 1000;
    real beta_start = 0.00085;
    real beta_end = 0.012;
    std::string beta_kind = "scaled_linear";
    std::string sampler = "unipc";
};

class NoiseSchedule {
public:
    static NoiseSchedule build(const ScheduleConfig& cfg);

    int steps() const { return static_cast<int>(alpha_bar_.size()); }
    real alpha_bar(int t) const;
    const std::vector<real>& table() const { return alpha_bar_; }
    const ScheduleConfig& config() const { return cfg_; }
    std::string describe() const;

private:
    ScheduleConfig cfg_;
    std::vector<real> alpha_bar_; // strictly increasing in t
};

// y_noisy = sqrt(ab) * y + sqrt(1 - ab) * eps, elementwise.
nn::Tensor mix_noise(const nn::Tensor& y_hat, const nn::Tensor& eps, real alpha_bar);
nn::Tensor mix_noise(const nn::Tensor& y_hat, const nn::Tensor& eps,
                     const NoiseSchedule& sched, int t);

} // namespace sr::distill
