#pragma once

#include <utility>

#include "lednet/dataset.hpp"
#include "lednet/image.hpp"
#include "lednet/random.hpp"

namespace lednet::data {

inline constexpr int kClassifierImageSize = 256;
inline constexpr double kDefaultFlipProbability = 0.5;

/// Bilinear resize (half-pixel centers). Target dims must be positive.
[[nodiscard]] ImageGrid resize(const ImageGrid& image, int height, int width);

/// Nearest-neighbour resize; preserves the {0,1} alphabet.
[[nodiscard]] BinaryMask resize_mask(const BinaryMask& mask, int height, int width);

/// Mirror across the vertical centerline.
[[nodiscard]] ImageGrid hflip(const ImageGrid& image);

/// Flips the image with probability p. Labels pass through untouched.
[[nodiscard]] std::pair<ImageGrid, CleanLabelVector> random_hflip(const ImageGrid& image,
                                                                  const CleanLabelVector& label,
                                                                  double p, Rng& rng);

/// 256-bin CDF equalization of a single-channel image:
/// out = round((cdf(v) - cdf_min) / (total - cdf_min) * 255) / 255.
/// A constant image maps to 0.
[[nodiscard]] ImageGrid equalize_histogram(const ImageGrid& image);

}  // namespace lednet::data
