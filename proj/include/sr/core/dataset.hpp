#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sr/core/image.hpp"

namespace sr::core {

// Target resolution for dataset loading: native keeps source dimensions
// (which must then agree across frames).
struct Resolution {
    bool native = true;
    int width = 0, height = 0;

    static Resolution native_size() { return {}; }
    static Resolution fixed(int w, int h) { return {false, w, h}; }
    static Resolution parse(const std::string& text); // "native" or "WxH"
    std::string describe() const;
};

// The target sequence X, keyframe index set K, and stylized keyframes Y.
// The unlabeled set Z is every index not in K.
struct FrameDataset {
    std::vector<ImagePlane> frames;            // sorted by filename
    std::vector<std::string> names;            // filename stems, aligned with frames
    std::vector<int> keyframe_indices;         // sorted, subset of [0, N)
    std::vector<ImagePlane> stylized_keyframes; // aligned with keyframe_indices

    int frame_count() const { return static_cast<int>(frames.size()); }
    int keyframe_count() const { return static_cast<int>(keyframe_indices.size()); }
    bool is_keyframe(int index) const;
    // position of `index` inside keyframe_indices, or nullopt
    std::optional<int> keyframe_position(int index) const;
    std::vector<int> unlabeled_indices() const;
    uint64_t fingerprint() const; // content hash over names, dims, and pixels
};

struct Violation {
    int index = -1; // -1 when dataset-wide
    std::string rule;
    bool warning = false;
};

// Frames and keyframes are 8-bit PNG files; lexicographic filename order
// defines temporal order, keyframes pair with frames by identical stem.
FrameDataset load_dataset(const std::filesystem::path& frame_dir,
                          const std::filesystem::path& keyframe_dir,
                          const Resolution& resolution);

// Diagnostic: empty iff all dataset invariants hold.
std::vector<Violation> validate_dataset(const FrameDataset& d);

} // namespace sr::core
