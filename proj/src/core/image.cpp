#include "sr/core/image.hpp"

#include <algorithm>
#include <cmath>

#include "sr/core/errors.hpp"

namespace sr::core {

bool ImagePlane::in_range() const {
    for (real x : v_)
        if (!std::isfinite(x) || x < 0.0 || x > 1.0) return false;
    return true;
}

ImagePlane ImagePlane::clamped() const {
    ImagePlane out = *this;
    for (size_t i = 0; i < out.v_.size(); ++i)
        out.v_[i] = std::clamp(out.v_[i], 0.0, 1.0);
    return out;
}

nn::Tensor to_chw(const ImagePlane& img) {
    nn::Tensor t(img.channels(), img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) t.at(c, y, x) = img.at(y, x, c);
    return t;
}

ImagePlane from_chw(const nn::Tensor& t) {
    ImagePlane img(t.width(), t.height(), t.channels());
    for (int y = 0; y < t.height(); ++y)
        for (int x = 0; x < t.width(); ++x)
            for (int c = 0; c < t.channels(); ++c) img.at(y, x, c) = t.at(c, y, x);
    return img;
}

namespace {

ImagePlane area_downscale(const ImagePlane& img, int tw, int th) {
    ImagePlane out(tw, th, img.channels());
    const real sx = static_cast<real>(img.width()) / tw;
    const real sy = static_cast<real>(img.height()) / th;
    for (int oy = 0; oy < th; ++oy) {
        const real y0 = oy * sy, y1 = (oy + 1) * sy;
        for (int ox = 0; ox < tw; ++ox) {
            const real x0 = ox * sx, x1 = (ox + 1) * sx;
            for (int c = 0; c < img.channels(); ++c) {
                real acc = 0, area = 0;
                for (int y = static_cast<int>(y0); y < std::ceil(y1); ++y) {
                    const real wy = std::min<real>(y + 1, y1) - std::max<real>(y, y0);
                    if (wy <= 0) continue;
                    for (int x = static_cast<int>(x0); x < std::ceil(x1); ++x) {
                        const real wx =
                            std::min<real>(x + 1, x1) - std::max<real>(x, x0);
                        if (wx <= 0) continue;
                        acc += wy * wx * img.at(std::min(y, img.height() - 1),
                                                std::min(x, img.width() - 1), c);
                        area += wy * wx;
                    }
                }
                out.at(oy, ox, c) = acc / area;
            }
        }
    }
    return out;
}

ImagePlane bilinear_resize(const ImagePlane& img, int tw, int th) {
    ImagePlane out(tw, th, img.channels());
    const real sx = static_cast<real>(img.width()) / tw;
    const real sy = static_cast<real>(img.height()) / th;
    for (int oy = 0; oy < th; ++oy) {
        const real fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const real dy = fy - y0;
        for (int ox = 0; ox < tw; ++ox) {
            const real fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const real dx = fx - x0;
            for (int c = 0; c < img.channels(); ++c) {
                const real top = img.at(y0, x0, c) * (1 - dx) + img.at(y0, x1, c) * dx;
                const real bot = img.at(y1, x0, c) * (1 - dx) + img.at(y1, x1, c) * dx;
                out.at(oy, ox, c) = top * (1 - dy) + bot * dy;
            }
        }
    }
    return out;
}

} // namespace

ImagePlane resample(const ImagePlane& img, int tw, int th) {
    if (tw <= 0 || th <= 0) throw DimensionError("resample: non-positive target");
    if (tw == img.width() && th == img.height()) return img;
    if (tw <= img.width() && th <= img.height()) return area_downscale(img, tw, th);
    return bilinear_resize(img, tw, th);
}

} // namespace sr::core
