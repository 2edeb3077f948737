#pragma once

#include <filesystem>

#include "lednet/image.hpp"

namespace lednet::io {

/// Value used to normalize 16-bit containers holding 12-bit radiographs.
inline constexpr float kTwelveBitMax = 4095.0f;

/// Decodes PNG/JPEG into [0,1]. 8-bit values are divided by 255, 16-bit by
/// 4095 (clamped). Grayscale is replicated to three channels, alpha dropped.
[[nodiscard]] ImageGrid load_image(const std::filesystem::path& path);

/// Like load_image but keeps the decoded channel count (1 or 3).
[[nodiscard]] ImageGrid load_image_native(const std::filesystem::path& path);

/// Writes an 8-bit PNG (1 or 3 channels); parent directories are created.
void write_image(const std::filesystem::path& path, const ImageGrid& image);

}  // namespace lednet::io
