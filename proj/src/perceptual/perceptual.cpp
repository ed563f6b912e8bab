#include "sr/perceptual/perceptual.hpp"

#include <algorithm>

#include "sr/core/errors.hpp"

namespace sr::perceptual {

bool FeatureExtractor::has_tap(const std::string& tag) const {
    const auto& t = taps();
    return std::find(t.begin(), t.end(), tag) != t.end();
}

nn::Tensor FeatureExtractor::extract_value(const nn::Tensor& image_chw,
                                           const std::string& tap) const {
    return extract(nn::constant(image_chw), tap)->value;
}

nn::Tensor FeatureExtractor::extract_value(const core::ImagePlane& img,
                                           const std::string& tap) const {
    return extract_value(core::to_chw(img), tap);
}

GramMatrix gram_matrix(const nn::Tensor& features, const std::string& tap) {
    if (features.channels() < 1 || features.height() * features.width() < 1)
        throw core::ContractError("gram_matrix: empty feature map");
    return GramMatrix{tap, nn::gram(nn::constant(features))->value};
}

real loss_key(const core::ImagePlane& pred, const core::ImagePlane& target) {
    if (!pred.same_shape(target)) throw core::ContractError("loss_key: shape mismatch");
    real s = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const real d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    return s / static_cast<real>(pred.size());
}

nn::NodePtr loss_key_node(const nn::NodePtr& pred, const nn::NodePtr& target) {
    return nn::mse(pred, target);
}

StyleGramCache::StyleGramCache(const FeatureExtractor& e,
                               std::span<const core::ImagePlane> style_images,
                               std::span<const std::string> taps) {
    for (int s = 0; s < static_cast<int>(style_images.size()); ++s) {
        const auto chw = core::to_chw(style_images[s]);
        for (const auto& tap : taps) {
            auto features = e.extract_value(chw, tap);
            grams_.emplace(std::pair{s, tap},
                           nn::gram(nn::constant(features))->value);
        }
    }
}

const nn::Tensor& StyleGramCache::gram(int style_index, const std::string& tap) const {
    auto it = grams_.find({style_index, tap});
    if (it == grams_.end())
        throw core::ContractError("StyleGramCache: missing entry for tap " + tap);
    return it->second;
}

nn::NodePtr loss_vgg_node(const FeatureExtractor& e, const nn::NodePtr& pred,
                          const StyleGramCache& cache, int style_index,
                          std::span<const std::string> taps) {
    if (taps.empty()) throw core::ConfigError("loss_vgg: empty layer set");
    std::vector<std::pair<nn::NodePtr, real>> terms;
    const real w = 1.0 / static_cast<real>(taps.size());
    for (const auto& tap : taps) {
        auto g_pred = nn::gram(e.extract(pred, tap));
        auto g_ref = nn::constant(cache.gram(style_index, tap));
        terms.emplace_back(nn::mse(g_pred, g_ref), w);
    }
    return nn::weighted_sum(terms);
}

real loss_vgg(const FeatureExtractor& e, const core::ImagePlane& pred,
              const core::ImagePlane& style_ref,
              std::span<const std::string> taps) {
    if (taps.empty()) throw core::ConfigError("loss_vgg: empty layer set");
    std::vector<std::string> tap_list(taps.begin(), taps.end());
    StyleGramCache cache(e, std::span(&style_ref, 1), tap_list);
    auto node = loss_vgg_node(e, nn::constant(core::to_chw(pred)), cache, 0, tap_list);
    return node->value[0];
}

} // namespace sr::perceptual
