#pragma once

#include <cstdint>
#include <vector>

#include "sr/nn/graph.hpp"

namespace sr::nn {

struct AdamWConfig {
    real lr = 3e-5;
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
    real weight_decay = 1e-2;
};

// Adam with decoupled weight decay. Moments start at zero and stay aligned
// with the parameter list handed to the first step() call.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    void step(const std::vector<NodePtr>& params) {
        if (slots_.empty()) {
            slots_.resize(params.size());
            for (size_t k = 0; k < params.size(); ++k) {
                slots_[k].m.assign(params[k]->value.size(), 0.0);
                slots_[k].v.assign(params[k]->value.size(), 0.0);
            }
        }
        ++t_;
        const real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<real>(t_));
        const real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<real>(t_));
        for (size_t k = 0; k < params.size(); ++k) {
            Node& p = *params[k];
            if (p.grad.empty()) continue;
            auto& m = slots_[k].m;
            auto& v = slots_[k].v;
            for (size_t i = 0; i < p.value.size(); ++i) {
                const real g = p.grad[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                const real mhat = m[i] / bc1;
                const real vhat = v[i] / bc2;
                p.value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                         cfg_.weight_decay * p.value[i]);
            }
        }
    }

    const AdamWConfig& config() const { return cfg_; }
    int64_t steps_taken() const { return t_; }

private:
    struct Slot {
        std::vector<real> m, v;
    };
    AdamWConfig cfg_;
    std::vector<Slot> slots_;
    int64_t t_ = 0;
};

} // namespace sr::nn
