#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sr/core/image.hpp"
#include "sr/nn/graph.hpp"

namespace sr::op {

using nn::real;

// Checkpoint container magic; format is magic line + JSON header + raw
// little-endian float64 parameter blob.
inline constexpr char kCheckpointMagic[] = "SRCKPT1";

struct CheckpointMeta {
    uint64_t seed = 0;
    real width_multiplier = 1.0;
    int64_t step = 0;
    real total_loss = 0.0;
};

// The trainable image-to-image stylization operator f(x; phi): a three-stage
// strided encoder, skip-connected nearest-upsampling decoder, instance
// normalization throughout, sigmoid output squash into [0,1].
class Stylizer {
public:
    // Deterministic He-style initialization from the seed.
    static Stylizer init(uint64_t seed, real width_multiplier = 1.0);
    // Structural passthrough (f(x) = x); zero parameters, factor 1.
    static Stylizer identity();

    // Graph route; input (3,H,W), output same spatial dims, 3 channels.
    // Spatial dims not divisible by the downsampling factor go through a
    // reflect-pad / crop path.
    nn::NodePtr apply(const nn::NodePtr& x) const;

    // Value route for inference.
    nn::Tensor apply_value(const nn::Tensor& x) const;
    core::ImagePlane stylize(const core::ImagePlane& x) const;

    std::vector<nn::NodePtr>& parameters() { return params_; }
    const std::vector<nn::NodePtr>& parameters() const { return params_; }
    size_t parameter_count() const;
    void zero_grad() const;

    int downsample_factor() const { return factor_; }
    bool is_identity() const { return identity_; }
    uint64_t seed() const { return meta_.seed; }
    real width_multiplier() const { return meta_.width_multiplier; }
    uint64_t params_fingerprint() const;

    void save(const std::filesystem::path& file, const CheckpointMeta& meta) const;
    static Stylizer load(const std::filesystem::path& file);
    static CheckpointMeta peek_meta(const std::filesystem::path& file);

private:
    Stylizer() = default;
    nn::NodePtr forward(const nn::NodePtr& x) const;
    void build(uint64_t seed, real width_multiplier);

    bool identity_ = false;
    int factor_ = 8;
    int base_width_ = 32;
    CheckpointMeta meta_;
    std::vector<nn::NodePtr> params_;
    std::vector<std::string> param_names_;
};

} // namespace sr::op
