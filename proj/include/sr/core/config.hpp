#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sr/core/dataset.hpp"

namespace sr::core {

// Loss term weights of the total training objective.
struct LossWeights {
    real lambda_k = 1.0;
    real lambda_v = 100.0;
    real lambda_c = 1e-5;

    // empty iff all weights finite, nonnegative, and at least one positive
    std::vector<std::string> violations() const;
    static LossWeights checked(real k, real v, real c); // throws ConfigError
};

struct TrainConfig {
    real learning_rate = 3e-5;
    // default budget is wall-clock (production runs train for hours)
    // with a hard step cap behind it
    std::optional<int64_t> max_steps = 1000000;
    std::optional<real> max_wallclock_sec = 4.0 * 3600.0;
    int t_index = 28;                                  // schedule step, 0 = noisiest
    std::vector<std::string> feature_layers = {"t1", "t2"};
    std::string guidance_kind = "toy";                 // canny|lineart|depth|softedge|toy
    std::string denoiser = "toy-structure";
    std::string extractor = "toy";
    uint64_t seed = 1;
    int64_t checkpoint_every = 100;
    Resolution resolution = Resolution::native_size();
    real width_multiplier = 1.0;
    std::string sds_weighting = "sqrt_alpha_bar";      // or "one"
    real weight_decay = 1e-2;
    std::string structure_loss = "csds";               // or "lineart"

    LossWeights weights;

    std::vector<std::string> violations() const;
    std::map<std::string, std::string> to_key_values() const;
};

// Flat key=value text; '#' starts a comment; keys mirror the field names.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config(const std::filesystem::path& file);

} // namespace sr::core
