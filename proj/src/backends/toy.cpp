#include "sr/backends/toy.hpp"

#include <cmath>

#include "sr/core/errors.hpp"
#include "sr/core/fingerprint.hpp"
#include "sr/nn/rng.hpp"

namespace sr::backends {

using nn::real;

ToyExtractor::ToyExtractor(uint64_t seed, int kernel_size) {
    const int k = kernel_size;
    if (k != 1 && k != 3)
        throw core::ConfigError("ToyExtractor: kernel size must be 1 or 3");
    const int c1 = 4, c2 = 4;
    w1_ = nn::Tensor(c1, 3, k * k);
    w2_ = nn::Tensor(c2, c1, k * k);
    auto rng = nn::CounterRng::keyed({seed, 0x70E});
    const real s1 = 1.0 / std::sqrt(3.0 * k * k);
    const real s2 = 1.0 / std::sqrt(static_cast<real>(c1) * k * k);
    for (size_t i = 0; i < w1_.size(); ++i) w1_[i] = s1 * rng.normal();
    for (size_t i = 0; i < w2_.size(); ++i) w2_[i] = s2 * rng.normal();
    zero_b1_ = nn::Tensor(c1, 1, 1);
    zero_b2_ = nn::Tensor(c2, 1, 1);
}

nn::NodePtr ToyExtractor::extract(const nn::NodePtr& image_chw,
                                  const std::string& tap) const {
    if (!has_tap(tap))
        throw core::ConfigError("ToyExtractor: unknown tap '" + tap + "'");
    auto t1 = nn::conv2d(image_chw, nn::constant(w1_), nn::constant(zero_b1_), 1,
                         nn::PadMode::Zero);
    if (tap == "t1") return t1;
    auto a1 = nn::tanh_act(t1);
    return nn::conv2d(a1, nn::constant(w2_), nn::constant(zero_b2_), 1,
                      nn::PadMode::Zero);
}

uint64_t ToyExtractor::params_fingerprint() const {
    core::Fingerprint f;
    f.bytes(w1_.data(), w1_.size() * sizeof(real));
    f.bytes(w2_.data(), w2_.size() * sizeof(real));
    return f.value();
}

std::shared_ptr<perceptual::FeatureExtractor> make_toy_extractor(uint64_t seed,
                                                                 int kernel_size) {
    return std::make_shared<ToyExtractor>(seed, kernel_size);
}

ToyDenoiserKind toy_denoiser_kind_from(const std::string& name) {
    if (name == "oracle" || name == "toy-oracle") return ToyDenoiserKind::Oracle;
    if (name == "identity" || name == "toy-identity") return ToyDenoiserKind::Identity;
    if (name == "structure" || name == "toy-structure")
        return ToyDenoiserKind::Structure;
    throw core::ConfigError("unknown toy denoiser kind: " + name);
}

nn::Tensor ToyOracleDenoiser::predict(const nn::Tensor& noisy, const nn::Tensor&,
                                      int) const {
    if (eps_.empty() || !eps_.same_shape(noisy))
        throw core::BackendError(
            "toy-oracle: expected noise not supplied for this shape");
    return eps_;
}

nn::Tensor ToyStructureDenoiser::predict(const nn::Tensor& noisy,
                                         const nn::Tensor& cond, int t) const {
    if (cond.height() != noisy.height() || cond.width() != noisy.width())
        throw core::BackendError("toy-structure: condition spatial mismatch");
    const real ab = sched_.alpha_bar(t);
    const real a = std::sqrt(ab);
    const real b = std::sqrt(1.0 - ab);
    nn::Tensor out = noisy;
    for (int c = 0; c < noisy.channels(); ++c) {
        const int cc = cond.channels() == noisy.channels() ? c : 0;
        for (int y = 0; y < noisy.height(); ++y)
            for (int x = 0; x < noisy.width(); ++x)
                out.at(c, y, x) = (noisy.at(c, y, x) - a * cond.at(cc, y, x)) / b;
    }
    return out;
}

std::shared_ptr<distill::GuidedDenoiser>
make_toy_denoiser(ToyDenoiserKind kind, const distill::NoiseSchedule& sched) {
    switch (kind) {
    case ToyDenoiserKind::Oracle: return std::make_shared<ToyOracleDenoiser>();
    case ToyDenoiserKind::Identity: return std::make_shared<ToyIdentityDenoiser>();
    case ToyDenoiserKind::Structure:
        return std::make_shared<ToyStructureDenoiser>(sched);
    }
    throw core::ConfigError("unknown toy denoiser kind");
}

std::shared_ptr<distill::GuidanceFunction> make_toy_guidance() {
    return std::make_shared<distill::ToyEdgeGuidance>();
}

} // namespace sr::backends
