#pragma once

#include <cstdint>
#include <vector>

#include "sr/nn/tensor.hpp"

namespace sr::core {

using nn::real;

// H x W x C raster, interleaved row-major, canonical value range [0,1].
// The universal currency between dataset, operator, and losses.
class ImagePlane {
public:
    ImagePlane() = default;
    ImagePlane(int width, int height, int channels, real fill = 0.0)
        : w_(width), h_(height), c_(channels),
          v_(static_cast<size_t>(width) * height * channels, fill) {}

    int width() const { return w_; }
    int height() const { return h_; }
    int channels() const { return c_; }
    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    real& at(int y, int x, int c) {
        return v_[(static_cast<size_t>(y) * w_ + x) * c_ + c];
    }
    real at(int y, int x, int c) const {
        return v_[(static_cast<size_t>(y) * w_ + x) * c_ + c];
    }

    real* data() { return v_.data(); }
    const real* data() const { return v_.data(); }

    bool same_shape(const ImagePlane& o) const {
        return w_ == o.w_ && h_ == o.h_ && c_ == o.c_;
    }

    // true iff every value is finite and inside [0,1]
    bool in_range() const;

    ImagePlane clamped() const; // values clipped to [0,1]

private:
    int w_ = 0, h_ = 0, c_ = 0;
    std::vector<real> v_;
};

nn::Tensor to_chw(const ImagePlane& img);
ImagePlane from_chw(const nn::Tensor& t);

// Area-average when shrinking on both axes, bilinear otherwise.
ImagePlane resample(const ImagePlane& img, int target_w, int target_h);

// Rec.601 luma weights; used by guidance functions.
inline constexpr real kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

} // namespace sr::core
