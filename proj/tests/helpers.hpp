#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

#include "sr/core/dataset.hpp"
#include "sr/core/image.hpp"
#include "sr/nn/graph.hpp"
#include "sr/nn/rng.hpp"

namespace testutil {

using sr::core::ImagePlane;
using sr::nn::real;
using sr::nn::Tensor;

inline Tensor random_tensor(int c, int h, int w, uint64_t seed, real lo = 0.0,
                            real hi = 1.0) {
    Tensor t(c, h, w);
    auto rng = sr::nn::CounterRng::keyed({seed, 0x7E57});
    rng.fill_uniform(t, lo, hi);
    return t;
}

inline ImagePlane random_image(int w, int h, int c, uint64_t seed) {
    ImagePlane img(w, h, c);
    auto rng = sr::nn::CounterRng::keyed({seed, 0x1347});
    for (size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
    return img;
}

// l2-norm relative error between analytic and numeric gradient vectors
inline real gradient_rel_error(const std::vector<real>& analytic,
                               const std::vector<real>& numeric) {
    real diff = 0, norm = 0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        norm += std::max(std::abs(analytic[i]), std::abs(numeric[i])) *
                std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    }
    if (norm == 0) return std::sqrt(diff);
    return std::sqrt(diff / norm);
}

// Central finite differences of a scalar function of a tensor, compared
// against the analytic gradient produced by the graph.
// `loss` must rebuild the graph from the given leaf value.
inline real finite_diff_check(Tensor x0,
                              const std::function<real(const Tensor&)>& loss,
                              const std::vector<real>& analytic, real step = 1e-3) {
    std::vector<real> numeric(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) {
        const real keep = x0[i];
        x0[i] = keep + step;
        const real up = loss(x0);
        x0[i] = keep - step;
        const real down = loss(x0);
        x0[i] = keep;
        numeric[i] = (up - down) / (2 * step);
    }
    return gradient_rel_error(analytic, numeric);
}

// Synthetic sequence: moving dark disk on a light background; frames other
// than the keyframe also carry a cross shape the keyframe never shows.
// The stylized keyframe is a deterministic recolor of its source.
struct SyntheticSpec {
    int frames = 8;
    int width = 64, height = 64;
    int keyframe = 0;
    bool cross_on_unlabeled = true;
    // low-contrast by default: the keyframe's palette mapping has no reason
    // to reproduce it, which is what the structure loss is for
    real cross_value = 0.70;
};

inline void paint_disk(ImagePlane& img, real cx, real cy, real radius, real r, real g,
                       real b) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const real d = std::hypot(x - cx, y - cy);
            if (d <= radius) {
                img.at(y, x, 0) = r;
                img.at(y, x, 1) = g;
                img.at(y, x, 2) = b;
            }
        }
}

inline void paint_cross(ImagePlane& img, int cx, int cy, int arm, int thick, real r,
                        real g, real b) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const bool horiz = std::abs(y - cy) <= thick && std::abs(x - cx) <= arm;
            const bool vert = std::abs(x - cx) <= thick && std::abs(y - cy) <= arm;
            if (horiz || vert) {
                img.at(y, x, 0) = r;
                img.at(y, x, 1) = g;
                img.at(y, x, 2) = b;
            }
        }
}

// flat palette: light -> warm paper, dark -> deep blue. Luminance-keyed, so
// a convolutional operator can represent it exactly.
inline ImagePlane stylize_reference_flat(const ImagePlane& x) {
    ImagePlane y(x.width(), x.height(), 3);
    for (int yy = 0; yy < x.height(); ++yy)
        for (int xx = 0; xx < x.width(); ++xx) {
            const real lum = (x.at(yy, xx, 0) + x.at(yy, xx, 1) + x.at(yy, xx, 2)) / 3;
            if (lum > 0.5) {
                y.at(yy, xx, 0) = 0.93;
                y.at(yy, xx, 1) = 0.87;
                y.at(yy, xx, 2) = 0.72;
            } else {
                y.at(yy, xx, 0) = 0.10;
                y.at(yy, xx, 1) = 0.15;
                y.at(yy, xx, 2) = 0.45;
            }
        }
    return y;
}

// palette stylization with hatching: light areas -> warm paper crossed by
// dark ink stripes, dark areas -> deep blue. The stripes give the style a
// strong high-frequency signature of its own.
inline ImagePlane stylize_reference(const ImagePlane& x) {
    ImagePlane y(x.width(), x.height(), 3);
    for (int yy = 0; yy < x.height(); ++yy)
        for (int xx = 0; xx < x.width(); ++xx) {
            const real lum = (x.at(yy, xx, 0) + x.at(yy, xx, 1) + x.at(yy, xx, 2)) / 3;
            if (lum > 0.5) {
                if (yy % 4 == 0) {
                    y.at(yy, xx, 0) = 0.30;
                    y.at(yy, xx, 1) = 0.24;
                    y.at(yy, xx, 2) = 0.16;
                } else {
                    y.at(yy, xx, 0) = 0.93;
                    y.at(yy, xx, 1) = 0.87;
                    y.at(yy, xx, 2) = 0.72;
                }
            } else {
                y.at(yy, xx, 0) = 0.10;
                y.at(yy, xx, 1) = 0.15;
                y.at(yy, xx, 2) = 0.45;
            }
        }
    return y;
}

inline sr::core::FrameDataset synthetic_dataset(const SyntheticSpec& spec) {
    sr::core::FrameDataset d;
    for (int i = 0; i < spec.frames; ++i) {
        ImagePlane f(spec.width, spec.height, 3, 0.85);
        const real cx = spec.width * (0.25 + 0.5 * i / std::max(1, spec.frames - 1));
        paint_disk(f, cx, spec.height * 0.42, spec.height * 0.2, 0.15, 0.15, 0.15);
        if (spec.cross_on_unlabeled && i != spec.keyframe)
            paint_cross(f, spec.width * 3 / 4, spec.height * 3 / 4, spec.width / 6, 1,
                        spec.cross_value, spec.cross_value, spec.cross_value);
        char name[16];
        std::snprintf(name, sizeof(name), "%04d", i);
        d.names.push_back(name);
        d.frames.push_back(std::move(f));
    }
    d.keyframe_indices = {spec.keyframe};
    d.stylized_keyframes = {stylize_reference(d.frames[spec.keyframe])};
    return d;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        root_ = std::filesystem::temp_directory_path() /
                ("srstyle_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(root_);
        std::filesystem::create_directories(root_);
    }
    ~TempDir() { std::filesystem::remove_all(root_); }
    const std::filesystem::path& path() const { return root_; }

private:
    std::filesystem::path root_;
};

} // namespace testutil
