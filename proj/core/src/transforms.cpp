#include "lednet/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lednet/error.hpp"

namespace lednet::data {
namespace {

void require_target(int height, int width)
{
    if (height < 1 || width < 1) {
        throw ParameterError("resize target must be positive, got " + std::to_string(height) +
                             "x" + std::to_string(width));
    }
}

/// Source coordinate of a destination pixel center (half-pixel convention),
/// clamped to the valid range.
struct Tap {
    int lo = 0;
    int hi = 0;
    float frac = 0.0f;
};

std::vector<Tap> linear_taps(int src, int dst)
{
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        double x = (i + 0.5) * scale - 0.5;
        x = std::clamp(x, 0.0, static_cast<double>(src - 1));
        const int lo = static_cast<int>(std::floor(x));
        const int hi = std::min(lo + 1, src - 1);
        taps[i] = {lo, hi, static_cast<float>(x - lo)};
    }
    return taps;
}

int nearest_index(int dst_index, int src, int dst)
{
    const long long idx = (2LL * dst_index + 1) * src / (2LL * dst);
    return static_cast<int>(std::min<long long>(idx, src - 1));
}

}  // namespace

ImageGrid resize(const ImageGrid& image, int height, int width)
{
    require_target(height, width);
    if (image.empty()) throw ParameterError("cannot resize an empty image");
    if (image.height == height && image.width == width) return image;

    const auto rows = linear_taps(image.height, height);
    const auto cols = linear_taps(image.width, width);
    ImageGrid out(image.channels, height, width);
    for (int c = 0; c < image.channels; ++c) {
        for (int r = 0; r < height; ++r) {
            const Tap& tr = rows[r];
            for (int k = 0; k < width; ++k) {
                const Tap& tc = cols[k];
                const float top = image.at(c, tr.lo, tc.lo) * (1.0f - tc.frac) +
                                  image.at(c, tr.lo, tc.hi) * tc.frac;
                const float bottom = image.at(c, tr.hi, tc.lo) * (1.0f - tc.frac) +
                                     image.at(c, tr.hi, tc.hi) * tc.frac;
                out.at(c, r, k) = top * (1.0f - tr.frac) + bottom * tr.frac;
            }
        }
    }
    return out;
}

BinaryMask resize_mask(const BinaryMask& mask, int height, int width)
{
    require_target(height, width);
    if (mask.values.empty()) throw ParameterError("cannot resize an empty mask");
    BinaryMask out(height, width);
    for (int r = 0; r < height; ++r) {
        const int sr = nearest_index(r, mask.height, height);
        for (int c = 0; c < width; ++c) {
            out.at(r, c) = mask.at(sr, nearest_index(c, mask.width, width));
        }
    }
    return out;
}

ImageGrid hflip(const ImageGrid& image)
{
    ImageGrid out = image;
    for (int c = 0; c < image.channels; ++c) {
        for (int r = 0; r < image.height; ++r) {
            for (int k = 0; k < image.width; ++k) {
                out.at(c, r, k) = image.at(c, r, image.width - 1 - k);
            }
        }
    }
    return out;
}

std::pair<ImageGrid, CleanLabelVector> random_hflip(const ImageGrid& image,
                                                    const CleanLabelVector& label, double p,
                                                    Rng& rng)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError("flip probability must lie in [0,1], got " + std::to_string(p));
    }
    // Always draw so the stream position does not depend on the outcome.
    const bool flip = uniform01(rng) < p;
    return {flip ? hflip(image) : image, label};
}

ImageGrid equalize_histogram(const ImageGrid& image)
{
    if (image.channels != 1) {
        throw DimensionError("equalize_histogram expects a single-channel image, got " +
                             image.shape_string());
    }
    constexpr int kBins = 256;
    const auto plane = image.plane(0);
    auto bin_of = [](float v) {
        return std::clamp(static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)), 0,
                          kBins - 1);
    };

    std::array<std::size_t, kBins> hist{};
    for (const float v : plane) ++hist[bin_of(v)];

    std::array<std::size_t, kBins> cdf{};
    std::size_t running = 0;
    std::size_t cdf_min = 0;
    for (int b = 0; b < kBins; ++b) {
        running += hist[b];
        cdf[b] = running;
        if (cdf_min == 0 && running > 0) cdf_min = running;
    }
    const std::size_t total = running;

    std::array<float, kBins> lut{};
    if (total > cdf_min) {
        const double denom = static_cast<double>(total - cdf_min);
        for (int b = 0; b < kBins; ++b) {
            const double numer = cdf[b] >= cdf_min ? static_cast<double>(cdf[b] - cdf_min) : 0.0;
            lut[b] = static_cast<float>(std::round(numer / denom * 255.0) / 255.0);
        }
    }

    ImageGrid out(1, image.height, image.width);
    auto dst = out.plane(0);
    for (std::size_t i = 0; i < plane.size(); ++i) dst[i] = lut[bin_of(plane[i])];
    return out;
}

}  // namespace lednet::data
