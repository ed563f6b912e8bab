#pragma once

#include "sr/distill/denoiser.hpp"
#include "sr/distill/schedule.hpp"

namespace sr::distill {

enum class SdsWeighting {
    SqrtAlphaBar, // w(t) = sqrt(alpha_bar_t), the mix-step chain factor
    One
};

struct CsdsResult {
    real value = 0;  // mean over elements of (d(noisy, cond, t) - eps)^2
    nn::Tensor grad; // w(t) * (d(...) - eps), the stop-gradient form
};

// Controlled score distillation at a fixed step t. The denoiser is treated
// as a black box: the returned gradient never involves its derivatives.
CsdsResult loss_csds(const GuidedDenoiser& d, const NoiseSchedule& sched, int t,
                     const nn::Tensor& y_hat, const nn::Tensor& cond,
                     const nn::Tensor& eps,
                     SdsWeighting w = SdsWeighting::SqrtAlphaBar);

// Surrogate scalar node: forward value is the reported loss, backward
// delivers the externally computed gradient into y_hat.
nn::NodePtr csds_term(const nn::NodePtr& y_hat_node, const CsdsResult& r);

// Direct structure matching through a differentiable guidance model:
// mean((c(y_hat) - c(x))^2). Rejects non-differentiable kinds.
real loss_lineart(const GuidanceFunction& g, const core::ImagePlane& y_hat,
                  const core::ImagePlane& x);
nn::NodePtr loss_lineart_node(const GuidanceFunction& g, const nn::NodePtr& y_hat,
                              const core::ImagePlane& x);

} // namespace sr::distill
