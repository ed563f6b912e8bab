#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sr::nn {

using real = double;

// Dense 3-axis buffer, planar row-major. For feature maps the axes are
// (channels, height, width); convolution kernels pack as (out, in, k*k).
class Tensor {
public:
    Tensor() = default;
    Tensor(int d0, int d1, int d2, real fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), v_(static_cast<size_t>(d0) * d1 * d2, fill) {
        assert(d0 > 0 && d1 > 0 && d2 > 0);
    }

    int channels() const { return d0_; }
    int height() const { return d1_; }
    int width() const { return d2_; }

    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    bool same_shape(const Tensor& o) const {
        return d0_ == o.d0_ && d1_ == o.d1_ && d2_ == o.d2_;
    }

    real& at(int c, int y, int x) {
        return v_[(static_cast<size_t>(c) * d1_ + y) * d2_ + x];
    }
    real at(int c, int y, int x) const {
        return v_[(static_cast<size_t>(c) * d1_ + y) * d2_ + x];
    }

    real& operator[](size_t i) { return v_[i]; }
    real operator[](size_t i) const { return v_[i]; }

    real* data() { return v_.data(); }
    const real* data() const { return v_.data(); }

    void fill(real x) { v_.assign(v_.size(), x); }

    bool all_finite() const {
        for (real x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    int d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<real> v_;
};

inline bool is_scalar(const Tensor& t) {
    return t.channels() == 1 && t.height() == 1 && t.width() == 1;
}

} // namespace sr::nn
