#pragma once

#include <filesystem>
#include <vector>

#include "lednet/image.hpp"

namespace lednet::mask {

inline constexpr double kDefaultThreshold = 0.5;

struct Pixel {
    int row = 0;
    int col = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Maximal 8-connected foreground region.
struct Component {
    std::vector<Pixel> pixels;  // raster order
    double centroid_row = 0.0;
    double centroid_col = 0.0;
    /// Euclidean distance from the centroid to ((h-1)/2, (w-1)/2).
    double center_distance = 0.0;
};

/// Pixel-wise OR of left and right lung masks.
[[nodiscard]] BinaryMask combine(const BinaryMask& left, const BinaryMask& right);

/// 1 where probability >= threshold. `probabilities` must be single-channel;
/// threshold must lie in (0,1).
[[nodiscard]] BinaryMask binarize(const ImageGrid& probabilities,
                                  double threshold = kDefaultThreshold);

/// Keeps image pixels under the mask and zeroes the rest, on every channel.
[[nodiscard]] ImageGrid overlay(const ImageGrid& image, const BinaryMask& mask);

/// Components ordered by their first pixel in raster order.
[[nodiscard]] std::vector<Component> connected_components(const BinaryMask& mask);

/// Keeps the (at most) two components whose centroids lie nearest the image
/// center. Ties prefer the larger component, then the earlier one.
[[nodiscard]] BinaryMask retain_two_regions(const BinaryMask& mask);

/// Reflection across the vertical centerline (column c -> width-1-c).
[[nodiscard]] BinaryMask reflect(const BinaryMask& mask);

/// Union of a single-component mask with its reflection; other masks are
/// returned unchanged.
[[nodiscard]] BinaryMask mirror_fill(const BinaryMask& mask);

/// Reads an 8-bit single-channel mask; any nonzero value is foreground.
[[nodiscard]] BinaryMask read_mask(const std::filesystem::path& path);

/// Writes 0 for background and 255 for foreground as an 8-bit PNG.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace lednet::mask
