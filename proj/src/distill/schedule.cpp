#include "sr/distill/schedule.hpp"

#include <cmath>

#include "sr/core/errors.hpp"

namespace sr::distill {

NoiseSchedule NoiseSchedule::build(const ScheduleConfig& cfg) {
    if (cfg.steps != 30)
        throw core::ConfigError("NoiseSchedule: 30 steps expected, got " +
                                std::to_string(cfg.steps));
    if (cfg.beta_kind != "scaled_linear")
        throw core::ConfigError("NoiseSchedule: unsupported beta_kind " + cfg.beta_kind);
    if (cfg.train_steps < cfg.steps)
        throw core::ConfigError("NoiseSchedule: train_steps < steps");

    const int T = cfg.train_steps;
    std::vector<real> cumprod(T);
    const real s0 = std::sqrt(cfg.beta_start);
    const real s1 = std::sqrt(cfg.beta_end);
    real p = 1.0;
    for (int i = 0; i < T; ++i) {
        const real s = s0 + (s1 - s0) * static_cast<real>(i) / (T - 1);
        p *= 1.0 - s * s;
        cumprod[i] = p;
    }

    NoiseSchedule sched;
    sched.cfg_ = cfg;
    sched.alpha_bar_.resize(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        // t = 0 maps to the end of the training range (maximal noise)
        const int train_index = static_cast<int>(std::lround(
            static_cast<real>(T - 1) * (cfg.steps - 1 - t) / (cfg.steps - 1)));
        sched.alpha_bar_[t] = cumprod[train_index];
    }

    for (int t = 0; t + 1 < cfg.steps; ++t)
        if (!(sched.alpha_bar_[t] < sched.alpha_bar_[t + 1]))
            throw core::ConfigError("NoiseSchedule: alpha_bar not strictly increasing");
    if (!(sched.alpha_bar_.front() > 0 && sched.alpha_bar_.front() <= 0.05))
        throw core::ConfigError("NoiseSchedule: alpha_bar[0] outside (0, 0.05]");
    if (!(sched.alpha_bar_.back() >= 0.95 && sched.alpha_bar_.back() < 1))
        throw core::ConfigError("NoiseSchedule: alpha_bar[last] outside [0.95, 1)");
    return sched;
}

real NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t >= steps())
        throw core::ContractError("NoiseSchedule: step index " + std::to_string(t) +
                                  " out of range [0," + std::to_string(steps() - 1) + "]");
    return alpha_bar_[t];
}

std::string NoiseSchedule::describe() const {
    return cfg_.beta_kind + "(" + std::to_string(cfg_.beta_start) + "," +
           std::to_string(cfg_.beta_end) + "," + std::to_string(cfg_.train_steps) +
           ")/" + cfg_.sampler + "-" + std::to_string(cfg_.steps);
}

nn::Tensor mix_noise(const nn::Tensor& y_hat, const nn::Tensor& eps, real alpha_bar) {
    if (!y_hat.same_shape(eps))
        throw core::ContractError("mix_noise: noise shape mismatch");
    if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0))
        throw core::ContractError("mix_noise: alpha_bar outside [0,1]");
    const real a = std::sqrt(alpha_bar);
    const real b = std::sqrt(1.0 - alpha_bar);
    nn::Tensor out = y_hat;
    for (size_t i = 0; i < out.size(); ++i) out[i] = a * y_hat[i] + b * eps[i];
    return out;
}

nn::Tensor mix_noise(const nn::Tensor& y_hat, const nn::Tensor& eps,
                     const NoiseSchedule& sched, int t) {
    return mix_noise(y_hat, eps, sched.alpha_bar(t));
}

} // namespace sr::distill
