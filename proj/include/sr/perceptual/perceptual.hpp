#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sr/core/image.hpp"
#include "sr/nn/graph.hpp"

namespace sr::perceptual {

using nn::real;

// Frozen feature extractor. Implementations never expose their parameters
// for update; extraction must be deterministic and differentiable w.r.t.
// the input image (image enters as a graph node).
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    virtual const std::vector<std::string>& taps() const = 0;
    bool has_tap(const std::string& tag) const;

    // Feature map node of shape (C_l, H_l, W_l); throws ConfigError on an
    // unknown tap tag.
    virtual nn::NodePtr extract(const nn::NodePtr& image_chw,
                                const std::string& tap) const = 0;

    nn::Tensor extract_value(const nn::Tensor& image_chw, const std::string& tap) const;
    nn::Tensor extract_value(const core::ImagePlane& img, const std::string& tap) const;

    virtual uint64_t params_fingerprint() const = 0;
};

// Spatially pooled channel-correlation matrix of a feature map.
struct GramMatrix {
    std::string tap;
    nn::Tensor values; // (1, C, C)

    int dim() const { return values.height(); }
    real at(int a, int b) const { return values.at(0, a, b); }
};

// G[a][b] = sum_hw F[a]F[b] / (H*W)
GramMatrix gram_matrix(const nn::Tensor& features, const std::string& tap = {});

// Mean squared pixel difference (the keyframe reconstruction loss).
real loss_key(const core::ImagePlane& pred, const core::ImagePlane& target);
nn::NodePtr loss_key_node(const nn::NodePtr& pred, const nn::NodePtr& target);

// Style-reference Grams are fixed for a run; compute once per keyframe.
class StyleGramCache {
public:
    StyleGramCache() = default;
    StyleGramCache(const FeatureExtractor& e,
                   std::span<const core::ImagePlane> style_images,
                   std::span<const std::string> taps);

    const nn::Tensor& gram(int style_index, const std::string& tap) const;

private:
    std::map<std::pair<int, std::string>, nn::Tensor> grams_;
};

// Mean over taps of the mean squared entrywise Gram difference.
// Differentiable w.r.t. pred only; the style side is a cached constant.
real loss_vgg(const FeatureExtractor& e, const core::ImagePlane& pred,
              const core::ImagePlane& style_ref,
              std::span<const std::string> taps);
nn::NodePtr loss_vgg_node(const FeatureExtractor& e, const nn::NodePtr& pred,
                          const StyleGramCache& cache, int style_index,
                          std::span<const std::string> taps);

} // namespace sr::perceptual
