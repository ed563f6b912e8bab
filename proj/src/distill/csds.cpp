#include "sr/distill/csds.hpp"

#include <cmath>

#include "sr/core/errors.hpp"

namespace sr::distill {

nn::Tensor GuidedDenoiser::vjp(const nn::Tensor&, const nn::Tensor&, int,
                               const nn::Tensor&) const {
    throw core::BackendError("denoiser '" + name() +
                             "': derivative queries are not part of the "
                             "distillation contract");
}

CsdsResult loss_csds(const GuidedDenoiser& d, const NoiseSchedule& sched, int t,
                     const nn::Tensor& y_hat, const nn::Tensor& cond,
                     const nn::Tensor& eps, SdsWeighting w) {
    if (!y_hat.same_shape(eps))
        throw core::ContractError("loss_csds: eps shape mismatch");

    const nn::Tensor noisy = mix_noise(y_hat, eps, sched, t); // validates t
    const nn::Tensor pred = d.predict_noise(noisy, cond, t);
    if (!pred.same_shape(y_hat))
        throw core::BackendError("loss_csds: denoiser output shape mismatch from " +
                                 d.name());
    if (!pred.all_finite())
        throw core::BackendError("loss_csds: non-finite denoiser output from " +
                                 d.name());

    const real weight =
        w == SdsWeighting::SqrtAlphaBar ? std::sqrt(sched.alpha_bar(t)) : 1.0;

    CsdsResult r;
    r.grad = y_hat; // shape carrier
    real s = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const real resid = pred[i] - eps[i];
        s += resid * resid;
        r.grad[i] = weight * resid;
    }
    r.value = s / static_cast<real>(pred.size());
    return r;
}

nn::NodePtr csds_term(const nn::NodePtr& y_hat_node, const CsdsResult& r) {
    return nn::injected_value(y_hat_node, r.value, r.grad);
}

nn::NodePtr loss_lineart_node(const GuidanceFunction& g, const nn::NodePtr& y_hat,
                              const core::ImagePlane& x) {
    if (!g.differentiable())
        throw core::ConfigError("loss_lineart: guidance kind '" +
                                to_string(g.kind()) + "' is not differentiable");
    auto cond_pred = g.condition_node(y_hat);
    // target through the same route so identical images cancel exactly
    auto cond_target = g.condition_node(nn::constant(core::to_chw(x)));
    return nn::mse(cond_pred, cond_target);
}

real loss_lineart(const GuidanceFunction& g, const core::ImagePlane& y_hat,
                  const core::ImagePlane& x) {
    if (!y_hat.same_shape(x))
        throw core::ContractError("loss_lineart: shape mismatch");
    return loss_lineart_node(g, nn::constant(core::to_chw(y_hat)), x)->value[0];
}

} // namespace sr::distill
