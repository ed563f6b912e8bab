#include "sr/core/dataset.hpp"

#include <algorithm>
#include <map>

#include "sr/core/errors.hpp"
#include "sr/core/fingerprint.hpp"
#include "sr/core/image_io.hpp"

namespace sr::core {

namespace fs = std::filesystem;

Resolution Resolution::parse(const std::string& text) {
    if (text == "native") return native_size();
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw ConfigError("resolution must be \"native\" or \"WxH\", got: " + text);
    try {
        int w = std::stoi(text.substr(0, x));
        int h = std::stoi(text.substr(x + 1));
        if (w <= 0 || h <= 0) throw ConfigError("resolution must be positive: " + text);
        return fixed(w, h);
    } catch (const std::logic_error&) {
        throw ConfigError("cannot parse resolution: " + text);
    }
}

std::string Resolution::describe() const {
    return native ? "native" : std::to_string(width) + "x" + std::to_string(height);
}

bool FrameDataset::is_keyframe(int index) const {
    return std::binary_search(keyframe_indices.begin(), keyframe_indices.end(), index);
}

std::optional<int> FrameDataset::keyframe_position(int index) const {
    auto it = std::lower_bound(keyframe_indices.begin(), keyframe_indices.end(), index);
    if (it == keyframe_indices.end() || *it != index) return std::nullopt;
    return static_cast<int>(it - keyframe_indices.begin());
}

std::vector<int> FrameDataset::unlabeled_indices() const {
    std::vector<int> z;
    for (int i = 0; i < frame_count(); ++i)
        if (!is_keyframe(i)) z.push_back(i);
    return z;
}

uint64_t FrameDataset::fingerprint() const {
    Fingerprint f;
    auto hash_img = [&f](const ImagePlane& img) {
        f.pod(img.width()).pod(img.height()).pod(img.channels());
        f.bytes(img.data(), img.size() * sizeof(real));
    };
    for (size_t i = 0; i < frames.size(); ++i) {
        f.str(names[i]);
        hash_img(frames[i]);
    }
    for (size_t k = 0; k < keyframe_indices.size(); ++k) {
        f.pod(keyframe_indices[k]);
        hash_img(stylized_keyframes[k]);
    }
    return f.value();
}

namespace {

std::vector<fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.filename().string() < b.filename().string();
              });
    return files;
}

} // namespace

FrameDataset load_dataset(const fs::path& frame_dir, const fs::path& keyframe_dir,
                          const Resolution& resolution) {
    const auto frame_files = list_pngs(frame_dir);
    if (frame_files.empty())
        throw IoError("no PNG frames in " + frame_dir.string());
    const auto key_files = list_pngs(keyframe_dir);

    FrameDataset d;
    std::map<std::string, int> by_stem;
    for (const auto& f : frame_files) {
        d.names.push_back(f.stem().string());
        by_stem[d.names.back()] = static_cast<int>(d.names.size()) - 1;
    }

    int native_w = -1, native_h = -1;
    // frames must agree on dimensions under native resolution; keyframes are
    // loaded as stored and any mismatch with their source surfaces through
    // validate_dataset instead
    auto load_frame = [&](const fs::path& file) {
        ImagePlane img = load_png(file);
        if (resolution.native) {
            if (native_w < 0) {
                native_w = img.width();
                native_h = img.height();
            } else if (img.width() != native_w || img.height() != native_h) {
                throw DimensionError(
                    "mixed dimensions with resolution=native: " + file.string() +
                    " is " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + ", expected " +
                    std::to_string(native_w) + "x" + std::to_string(native_h));
            }
            return img;
        }
        return resample(img, resolution.width, resolution.height);
    };
    auto load_keyframe = [&](const fs::path& file) {
        ImagePlane img = load_png(file);
        if (resolution.native) return img;
        return resample(img, resolution.width, resolution.height);
    };

    for (const auto& f : frame_files) d.frames.push_back(load_frame(f));

    for (const auto& kf : key_files) {
        auto it = by_stem.find(kf.stem().string());
        if (it == by_stem.end())
            throw PairingError("keyframe without source frame: " +
                               kf.filename().string());
        d.keyframe_indices.push_back(it->second);
    }
    // pairing sorted by source index; key_files sorted by name makes this
    // stable for duplicate-free directories
    std::vector<size_t> order(key_files.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return d.keyframe_indices[a] < d.keyframe_indices[b];
    });
    std::vector<int> sorted_idx;
    for (size_t i : order) sorted_idx.push_back(d.keyframe_indices[i]);
    d.keyframe_indices = std::move(sorted_idx);
    for (size_t i : order)
        d.stylized_keyframes.push_back(load_keyframe(key_files[i]));

    return d;
}

std::vector<Violation> validate_dataset(const FrameDataset& d) {
    std::vector<Violation> out;
    const int n = d.frame_count();
    if (n < 1) {
        out.push_back({-1, "dataset has no frames", false});
        return out;
    }
    if (d.keyframe_count() < 1)
        out.push_back({-1, "at least one keyframe required", false});
    if (d.keyframe_indices.size() != d.stylized_keyframes.size())
        out.push_back({-1, "keyframe index/image count mismatch", false});

    for (int k = 0; k < d.keyframe_count(); ++k) {
        const int idx = d.keyframe_indices[k];
        if (idx < 0 || idx >= n) {
            out.push_back({idx, "keyframe index out of range", false});
            continue;
        }
        if (k < static_cast<int>(d.stylized_keyframes.size())) {
            const auto& y = d.stylized_keyframes[k];
            const auto& x = d.frames[idx];
            if (y.width() != x.width() || y.height() != x.height())
                out.push_back({idx,
                               "stylized keyframe dimensions differ from source (" +
                                   std::to_string(y.width()) + "x" +
                                   std::to_string(y.height()) + " vs " +
                                   std::to_string(x.width()) + "x" +
                                   std::to_string(x.height()) + ")",
                               false});
            if (!y.in_range())
                out.push_back({idx, "stylized keyframe values outside [0,1]", false});
        }
    }

    for (int i = 0; i < n; ++i) {
        const auto& f = d.frames[i];
        if (f.width() < 8 || f.height() < 8)
            out.push_back({i, "frame smaller than 8x8", false});
        if (!f.in_range())
            out.push_back({i, "frame values outside [0,1]", false});
    }

    if (n - d.keyframe_count() < 1)
        out.push_back({-1, "no unlabeled frames: training degenerates to pure reconstruction",
                       true});
    return out;
}

} // namespace sr::core
