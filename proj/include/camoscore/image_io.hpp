#pragma once

#include <filesystem>

#include "camoscore/image.hpp"

namespace camo {

/// Reads a PNG or JPEG into an ImagePlane with 1 or 3 channels (alpha is
/// dropped). 8-bit data is divided by 255, 16-bit data by 65535.
ImagePlane load_image(const std::filesystem::path& path);

/// Reads a grayscale (or colour, converted by luminance) mask and thresholds
/// it at 0.5.
BinaryMask load_mask(const std::filesystem::path& path);

/// Writes an 8-bit PNG. Values are clamped to [0, 1] and rounded.
void save_png(const std::filesystem::path& path, const ImagePlane& img);
void save_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace camo
