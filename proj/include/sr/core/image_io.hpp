#pragma once

#include <filesystem>

#include "sr/core/image.hpp"

namespace sr::core {

// 8-bit PNG (gray, gray+alpha, RGB, RGBA all accepted; alpha dropped,
// gray expanded to 3 channels). Values map to [0,1] as byte/255.
ImagePlane load_png(const std::filesystem::path& file);

// Writes 8-bit PNG; 1-channel images become grayscale, 3-channel RGB.
// Values are clamped and quantized as round(v * 255).
void save_png(const ImagePlane& img, const std::filesystem::path& file);

} // namespace sr::core
