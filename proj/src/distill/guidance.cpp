#include "sr/distill/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sr/core/errors.hpp"

namespace sr::distill {

namespace {

constexpr real kSobelX[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
constexpr real kSobelY[9] = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
constexpr real kSobelMax = 4.0 * 1.4142135623730951; // max magnitude on [0,1] input
constexpr real kHypotEps = 1e-14;

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

std::vector<real> luminance(const core::ImagePlane& x) {
    std::vector<real> lum(static_cast<size_t>(x.width()) * x.height());
    for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx) {
            real v;
            if (x.channels() >= 3)
                v = core::kLumaR * x.at(y, xx, 0) + core::kLumaG * x.at(y, xx, 1) +
                    core::kLumaB * x.at(y, xx, 2);
            else
                v = x.at(y, xx, 0);
            lum[static_cast<size_t>(y) * x.width() + xx] = v;
        }
    return lum;
}

void sobel(const std::vector<real>& lum, int w, int h, std::vector<real>& gx,
           std::vector<real>& gy) {
    gx.assign(lum.size(), 0);
    gy.assign(lum.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real sx = 0, sy = 0;
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const int iy = reflect_index(y + ky - 1, h);
                    const int ix = reflect_index(x + kx - 1, w);
                    const real v = lum[static_cast<size_t>(iy) * w + ix];
                    sx += kSobelX[ky * 3 + kx] * v;
                    sy += kSobelY[ky * 3 + kx] * v;
                }
            gx[static_cast<size_t>(y) * w + x] = sx;
            gy[static_cast<size_t>(y) * w + x] = sy;
        }
}

} // namespace

std::string to_string(GuidanceKind k) {
    switch (k) {
    case GuidanceKind::Canny: return "canny";
    case GuidanceKind::Lineart: return "lineart";
    case GuidanceKind::Depth: return "depth";
    case GuidanceKind::SoftEdge: return "softedge";
    case GuidanceKind::Toy: return "toy";
    }
    return "?";
}

GuidanceKind guidance_kind_from(const std::string& name) {
    if (name == "canny") return GuidanceKind::Canny;
    if (name == "lineart") return GuidanceKind::Lineart;
    if (name == "depth") return GuidanceKind::Depth;
    if (name == "softedge") return GuidanceKind::SoftEdge;
    if (name == "toy") return GuidanceKind::Toy;
    throw core::ConfigError("unknown guidance kind: " + name);
}

core::ImagePlane GuidanceFunction::condition(const core::ImagePlane& x) const {
    ++calls_;
    return compute(x);
}

nn::NodePtr GuidanceFunction::condition_node(const nn::NodePtr&) const {
    throw core::ConfigError("guidance kind '" + to_string(kind()) +
                            "' is not differentiable");
}

core::ImagePlane CannyGuidance::compute(const core::ImagePlane& x) const {
    const int w = x.width(), h = x.height();
    auto lum = luminance(x);

    // gaussian blur, radius 3*sigma
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_)));
    std::vector<real> kernel(2 * r + 1);
    real ksum = 0;
    for (int i = -r; i <= r; ++i) {
        kernel[i + r] = std::exp(-0.5 * i * i / (sigma_ * sigma_));
        ksum += kernel[i + r];
    }
    for (auto& k : kernel) k /= ksum;

    std::vector<real> tmp(lum.size()), blurred(lum.size());
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            real s = 0;
            for (int i = -r; i <= r; ++i)
                s += kernel[i + r] * lum[static_cast<size_t>(y) * w + reflect_index(xx + i, w)];
            tmp[static_cast<size_t>(y) * w + xx] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            real s = 0;
            for (int i = -r; i <= r; ++i)
                s += kernel[i + r] * tmp[static_cast<size_t>(reflect_index(y + i, h)) * w + xx];
            blurred[static_cast<size_t>(y) * w + xx] = s;
        }

    std::vector<real> gx, gy;
    sobel(blurred, w, h, gx, gy);
    std::vector<real> mag(lum.size());
    for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);

    // non-maximum suppression over 4 quantized directions; ties keep the
    // earlier pixel (strict on the forward neighbor) so a symmetric step
    // yields a single-pixel line
    std::vector<real> thin(lum.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            const size_t i = static_cast<size_t>(y) * w + xx;
            if (mag[i] == 0) continue;
            const real angle = std::atan2(gy[i], gx[i]);
            const real deg = angle * 180.0 / 3.14159265358979323846;
            int dx = 1, dy = 0;
            const real a = std::fmod(deg + 180.0, 180.0);
            if (a >= 22.5 && a < 67.5) {
                dx = 1;
                dy = 1;
            } else if (a >= 67.5 && a < 112.5) {
                dx = 0;
                dy = 1;
            } else if (a >= 112.5 && a < 157.5) {
                dx = -1;
                dy = 1;
            }
            auto at = [&](int yy, int xb) -> real {
                if (yy < 0 || yy >= h || xb < 0 || xb >= w) return 0;
                return mag[static_cast<size_t>(yy) * w + xb];
            };
            if (mag[i] > at(y - dy, xx - dx) && mag[i] >= at(y + dy, xx + dx))
                thin[i] = mag[i];
        }

    // hysteresis
    core::ImagePlane out(w, h, 1, 0.0);
    std::vector<char> state(lum.size(), 0); // 0 none, 1 weak, 2 strong
    std::deque<size_t> queue;
    for (size_t i = 0; i < thin.size(); ++i) {
        if (thin[i] >= high_) {
            state[i] = 2;
            queue.push_back(i);
        } else if (thin[i] >= low_) {
            state[i] = 1;
        }
    }
    while (!queue.empty()) {
        const size_t i = queue.front();
        queue.pop_front();
        const int y = static_cast<int>(i) / w, xx = static_cast<int>(i) % w;
        out.at(y, xx, 0) = 1.0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int ny = y + dy, nx = xx + dx;
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const size_t j = static_cast<size_t>(ny) * w + nx;
                if (state[j] == 1) {
                    state[j] = 2;
                    queue.push_back(j);
                }
            }
    }
    return out;
}

core::ImagePlane ToyEdgeGuidance::compute(const core::ImagePlane& x) const {
    const int w = x.width(), h = x.height();
    auto lum = luminance(x);
    std::vector<real> gx, gy;
    sobel(lum, w, h, gx, gy);
    core::ImagePlane out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            const size_t i = static_cast<size_t>(y) * w + xx;
            out.at(y, xx, 0) =
                std::sqrt(gx[i] * gx[i] + gy[i] * gy[i] + kHypotEps) / kSobelMax;
        }
    return out;
}

nn::NodePtr ToyEdgeGuidance::condition_node(const nn::NodePtr& x_chw) const {
    const int c = x_chw->value.channels();
    nn::Tensor lw(1, c, 1);
    if (c >= 3) {
        lw.at(0, 0, 0) = core::kLumaR;
        lw.at(0, 1, 0) = core::kLumaG;
        lw.at(0, 2, 0) = core::kLumaB;
    } else {
        lw.at(0, 0, 0) = 1.0;
    }
    auto zero_bias = nn::constant(nn::Tensor(1, 1, 1));
    auto lum = nn::conv2d(x_chw, nn::constant(lw), zero_bias, 1, nn::PadMode::Zero);

    nn::Tensor wx(1, 1, 9), wy(1, 1, 9);
    for (int i = 0; i < 9; ++i) {
        wx.at(0, 0, i) = kSobelX[i];
        wy.at(0, 0, i) = kSobelY[i];
    }
    auto gx = nn::conv2d(lum, nn::constant(wx), zero_bias, 1, nn::PadMode::Reflect);
    auto gy = nn::conv2d(lum, nn::constant(wy), zero_bias, 1, nn::PadMode::Reflect);
    return nn::scale(nn::hypot_smooth(gx, gy, kHypotEps), 1.0 / kSobelMax);
}

const core::ImagePlane& ConditionCache::get(const GuidanceFunction& g, int frame_index,
                                            const core::ImagePlane& x) {
    auto it = cache_.find(frame_index);
    if (it == cache_.end())
        it = cache_.emplace(frame_index, g.condition(x)).first;
    return it->second;
}

} // namespace sr::distill
