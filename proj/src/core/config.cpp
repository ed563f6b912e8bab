#include "sr/core/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sr/core/errors.hpp"

namespace sr::core {

std::vector<std::string> LossWeights::violations() const {
    std::vector<std::string> v;
    for (auto [name, x] : {std::pair{"lambda_k", lambda_k},
                           std::pair{"lambda_v", lambda_v},
                           std::pair{"lambda_c", lambda_c}}) {
        if (!std::isfinite(x) || x < 0)
            v.push_back(std::string(name) + " must be finite and >= 0");
    }
    if (lambda_k == 0 && lambda_v == 0 && lambda_c == 0)
        v.push_back("at least one loss weight must be positive");
    return v;
}

LossWeights LossWeights::checked(real k, real v, real c) {
    LossWeights w{k, v, c};
    auto errs = w.violations();
    if (!errs.empty()) throw ConfigError("invalid loss weights: " + errs.front());
    return w;
}

std::vector<std::string> TrainConfig::violations() const {
    std::vector<std::string> v;
    if (!(learning_rate > 0)) v.push_back("learning_rate must be > 0");
    if (t_index < 0 || t_index > 29) v.push_back("t_index must be in [0,29]");
    if (weights.lambda_v > 0 && feature_layers.empty())
        v.push_back("feature_layers must be nonempty when lambda_v > 0");
    if (!max_steps && !max_wallclock_sec)
        v.push_back("one of max_steps / max_wallclock_sec required");
    if (max_steps && *max_steps < 1) v.push_back("max_steps must be >= 1");
    if (checkpoint_every < 1) v.push_back("checkpoint_every must be >= 1");
    if (!(width_multiplier > 0)) v.push_back("width_multiplier must be > 0");
    if (sds_weighting != "sqrt_alpha_bar" && sds_weighting != "one")
        v.push_back("sds_weighting must be sqrt_alpha_bar or one");
    if (structure_loss != "csds" && structure_loss != "lineart")
        v.push_back("structure_loss must be csds or lineart");
    for (const auto& w : weights.violations()) v.push_back(w);
    return v;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

real parse_real(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        real x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse number for key '" + key + "': " + value);
    }
}

int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        int64_t x = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse integer for key '" + key + "': " + value);
    }
}

} // namespace

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "learning_rate") cfg.learning_rate = parse_real(key, value);
        else if (key == "max_steps") cfg.max_steps = parse_int(key, value);
        else if (key == "max_wallclock_sec") cfg.max_wallclock_sec = parse_real(key, value);
        else if (key == "t_index") cfg.t_index = static_cast<int>(parse_int(key, value));
        else if (key == "feature_layers") cfg.feature_layers = split_list(value);
        else if (key == "guidance_kind") cfg.guidance_kind = value;
        else if (key == "denoiser") cfg.denoiser = value;
        else if (key == "extractor") cfg.extractor = value;
        else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_int(key, value));
        else if (key == "checkpoint_every") cfg.checkpoint_every = parse_int(key, value);
        else if (key == "resolution") cfg.resolution = Resolution::parse(value);
        else if (key == "width_multiplier") cfg.width_multiplier = parse_real(key, value);
        else if (key == "sds_weighting") cfg.sds_weighting = value;
        else if (key == "weight_decay") cfg.weight_decay = parse_real(key, value);
        else if (key == "structure_loss") cfg.structure_loss = value;
        else if (key == "lambda_k") cfg.weights.lambda_k = parse_real(key, value);
        else if (key == "lambda_v") cfg.weights.lambda_v = parse_real(key, value);
        else if (key == "lambda_c") cfg.weights.lambda_c = parse_real(key, value);
        else throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

TrainConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {

std::string real_str(real x) {
    std::ostringstream o;
    o.precision(17);
    o << x;
    return o.str();
}

} // namespace

std::map<std::string, std::string> TrainConfig::to_key_values() const {
    std::map<std::string, std::string> kv;
    kv["learning_rate"] = real_str(learning_rate);
    if (max_steps) kv["max_steps"] = std::to_string(*max_steps);
    if (max_wallclock_sec) kv["max_wallclock_sec"] = real_str(*max_wallclock_sec);
    kv["t_index"] = std::to_string(t_index);
    std::string layers;
    for (const auto& l : feature_layers) {
        if (!layers.empty()) layers += ",";
        layers += l;
    }
    kv["feature_layers"] = layers;
    kv["guidance_kind"] = guidance_kind;
    kv["denoiser"] = denoiser;
    kv["extractor"] = extractor;
    kv["seed"] = std::to_string(seed);
    kv["checkpoint_every"] = std::to_string(checkpoint_every);
    kv["resolution"] = resolution.describe();
    kv["width_multiplier"] = real_str(width_multiplier);
    kv["sds_weighting"] = sds_weighting;
    kv["weight_decay"] = real_str(weight_decay);
    kv["structure_loss"] = structure_loss;
    kv["lambda_k"] = real_str(weights.lambda_k);
    kv["lambda_v"] = real_str(weights.lambda_v);
    kv["lambda_c"] = real_str(weights.lambda_c);
    return kv;
}

} // namespace sr::core
