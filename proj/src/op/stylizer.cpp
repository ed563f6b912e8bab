#include "sr/op/stylizer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sr/core/errors.hpp"
#include "sr/core/fingerprint.hpp"
#include "sr/nn/rng.hpp"

namespace sr::op {

using nlohmann::json;
using nn::NodePtr;
using nn::PadMode;
using nn::Tensor;

namespace {

struct ConvSpec {
    std::string name;
    int in = 0, out = 0, k = 3, stride = 1;
    bool normed = true; // instance norm + activation follows
};

// channel plan for base width b (encoder stages halve resolution):
//   enc0 3->b, enc1 b->2b /2, enc2 2b->4b /2, enc3 4b->4b /2,
//   dec2 (4b+4b)->2b, dec1 (2b+2b)->b, dec0 (b+b)->b, out b->3
std::vector<ConvSpec> layer_plan(int b) {
    return {
        {"enc0", 3, b, 3, 1, true},
        {"enc1", b, 2 * b, 3, 2, true},
        {"enc2", 2 * b, 4 * b, 3, 2, true},
        {"enc3", 4 * b, 4 * b, 3, 2, true},
        {"dec2", 8 * b, 2 * b, 3, 1, true},
        {"dec1", 4 * b, b, 3, 1, true},
        {"dec0", 2 * b, b, 3, 1, true},
        {"out", b, 3, 3, 1, false},
    };
}

} // namespace

void Stylizer::build(uint64_t seed, real width_multiplier) {
    meta_.seed = seed;
    meta_.width_multiplier = width_multiplier;
    base_width_ = std::max(1, static_cast<int>(std::lround(32.0 * width_multiplier)));
    factor_ = 8;

    auto rng = nn::CounterRng::keyed({seed, 0x0E4A70ULL});
    for (const auto& spec : layer_plan(base_width_)) {
        Tensor w(spec.out, spec.in, spec.k * spec.k);
        const real s = std::sqrt(2.0 / (spec.in * spec.k * spec.k));
        for (size_t i = 0; i < w.size(); ++i) w[i] = s * rng.normal();
        params_.push_back(nn::leaf(std::move(w)));
        param_names_.push_back(spec.name + ".w");
        params_.push_back(nn::leaf(Tensor(spec.out, 1, 1)));
        param_names_.push_back(spec.name + ".b");
        if (spec.normed) {
            params_.push_back(nn::leaf(Tensor(spec.out, 1, 1, 1.0)));
            param_names_.push_back(spec.name + ".gamma");
            params_.push_back(nn::leaf(Tensor(spec.out, 1, 1, 0.0)));
            param_names_.push_back(spec.name + ".beta");
        }
    }
}

Stylizer Stylizer::init(uint64_t seed, real width_multiplier) {
    if (!(width_multiplier > 0))
        throw core::ContractError("Stylizer: width_multiplier must be > 0");
    Stylizer s;
    s.build(seed, width_multiplier);
    return s;
}

Stylizer Stylizer::identity() {
    Stylizer s;
    s.identity_ = true;
    s.factor_ = 1;
    s.base_width_ = 0;
    return s;
}

size_t Stylizer::parameter_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void Stylizer::zero_grad() const {
    for (const auto& p : params_) p->zero_grad();
}

uint64_t Stylizer::params_fingerprint() const {
    core::Fingerprint f;
    for (const auto& p : params_)
        f.bytes(p->value.data(), p->value.size() * sizeof(real));
    return f.value();
}

NodePtr Stylizer::forward(const NodePtr& x) const {
    // params_ layout follows layer_plan order: w, b[, gamma, beta] per layer
    size_t i = 0;
    auto conv_block = [&](const NodePtr& in, int stride, bool normed) {
        auto w = params_[i++];
        auto b = params_[i++];
        auto y = nn::conv2d(in, w, b, stride, PadMode::Zero);
        if (normed) {
            auto gamma = params_[i++];
            auto beta = params_[i++];
            y = nn::silu(nn::instance_norm(y, gamma, beta));
        }
        return y;
    };

    auto e0 = conv_block(x, 1, true);
    auto e1 = conv_block(e0, 2, true);
    auto e2 = conv_block(e1, 2, true);
    auto e3 = conv_block(e2, 2, true);
    auto d2 = conv_block(nn::concat_channels(nn::upsample_nearest2(e3), e2), 1, true);
    auto d1 = conv_block(nn::concat_channels(nn::upsample_nearest2(d2), e1), 1, true);
    auto d0 = conv_block(nn::concat_channels(nn::upsample_nearest2(d1), e0), 1, true);
    auto y = conv_block(d0, 1, false);
    return nn::sigmoid(y);
}

NodePtr Stylizer::apply(const NodePtr& x) const {
    if (identity_) return x;
    for (size_t k = 0; k < params_.size(); ++k)
        if (!params_[k]->value.all_finite())
            throw core::ContractError("Stylizer: non-finite parameter in " +
                                      param_names_[k]);
    const int h = x->value.height(), w = x->value.width();
    if (h < 8 || w < 8)
        throw core::ContractError("Stylizer: input smaller than 8x8");
    const int ph = (factor_ - h % factor_) % factor_;
    const int pw = (factor_ - w % factor_) % factor_;
    if (ph == 0 && pw == 0) return forward(x);
    auto padded = nn::reflect_pad(x, pw, ph);
    return nn::crop_top_left(forward(padded), h, w);
}

nn::Tensor Stylizer::apply_value(const Tensor& x) const {
    return apply(nn::constant(x))->value;
}

core::ImagePlane Stylizer::stylize(const core::ImagePlane& x) const {
    return core::from_chw(apply_value(core::to_chw(x)));
}

void Stylizer::save(const std::filesystem::path& file, const CheckpointMeta& meta) const {
    json header;
    header["version"] = 1;
    header["arch"] = identity_ ? "identity" : "unet3";
    header["seed"] = meta.seed;
    header["width_multiplier"] = meta.width_multiplier;
    header["step"] = meta.step;
    header["total_loss"] = meta.total_loss;
    header["downsample_factor"] = factor_;
    header["base_width"] = base_width_;
    json tensors = json::array();
    size_t offset = 0;
    for (size_t k = 0; k < params_.size(); ++k) {
        const Tensor& t = params_[k]->value;
        tensors.push_back({{"name", param_names_[k]},
                           {"shape", {t.channels(), t.height(), t.width()}},
                           {"offset", offset}});
        offset += t.size();
    }
    header["tensors"] = tensors;
    header["scalar"] = "float64-le";

    const std::string head = header.dump();
    std::ofstream out(file, std::ios::binary);
    if (!out) throw core::IoError("cannot write checkpoint " + file.string());
    out.write(kCheckpointMagic, 7);
    out.put('\n');
    const uint32_t len = static_cast<uint32_t>(head.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& p : params_)
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(real)));
    if (!out) throw core::IoError("checkpoint write failed: " + file.string());
}

namespace {

json read_header(std::ifstream& in, const std::filesystem::path& file) {
    char magic[8] = {};
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 7) != 0 || magic[7] != '\n')
        throw core::IoError("not a checkpoint file: " + file.string());
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (!in || len == 0 || len > (1u << 20))
        throw core::IoError("corrupt checkpoint header: " + file.string());
    std::string head(len, '\0');
    in.read(head.data(), len);
    if (!in) throw core::IoError("truncated checkpoint: " + file.string());
    try {
        return json::parse(head);
    } catch (const json::exception& e) {
        throw core::IoError("checkpoint header parse error in " + file.string() + ": " +
                            e.what());
    }
}

} // namespace

CheckpointMeta Stylizer::peek_meta(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw core::IoError("cannot open checkpoint " + file.string());
    const json header = read_header(in, file);
    CheckpointMeta m;
    m.seed = header.value("seed", 0ULL);
    m.width_multiplier = header.value("width_multiplier", 1.0);
    m.step = header.value("step", int64_t{0});
    m.total_loss = header.value("total_loss", 0.0);
    return m;
}

Stylizer Stylizer::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw core::IoError("cannot open checkpoint " + file.string());
    const json header = read_header(in, file);

    const std::string arch = header.value("arch", "");
    Stylizer s;
    if (arch == "identity") {
        s = Stylizer::identity();
    } else if (arch == "unet3") {
        s.build(header.value("seed", 0ULL), header.value("width_multiplier", 1.0));
    } else {
        throw core::DimensionError("checkpoint declares unknown arch '" + arch + "'");
    }
    s.meta_.step = header.value("step", int64_t{0});
    s.meta_.total_loss = header.value("total_loss", 0.0);

    const auto& tensors = header.at("tensors");
    if (tensors.size() != s.params_.size())
        throw core::DimensionError("checkpoint/operator mismatch: " +
                                   std::to_string(tensors.size()) + " tensors vs " +
                                   std::to_string(s.params_.size()) + " expected");
    for (size_t k = 0; k < s.params_.size(); ++k) {
        const auto shape = tensors[k].at("shape");
        Tensor& t = s.params_[k]->value;
        if (shape[0] != t.channels() || shape[1] != t.height() || shape[2] != t.width())
            throw core::DimensionError("checkpoint tensor shape mismatch at " +
                                       std::string(tensors[k].at("name")));
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(real)));
        if (!in) throw core::IoError("truncated checkpoint blob: " + file.string());
    }
    return s;
}

} // namespace sr::op
