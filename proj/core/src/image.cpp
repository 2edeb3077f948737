#include "lednet/image.hpp"

#include <algorithm>
#include <numeric>

#include "lednet/error.hpp"

namespace lednet {

ImageGrid::ImageGrid(int channels, int height, int width, float fill)
    : channels(channels), height(height), width(width)
{
    if (channels < 1 || height < 1 || width < 1) {
        throw ParameterError("image dimensions must be positive, got " + std::to_string(channels) +
                             "x" + std::to_string(height) + "x" + std::to_string(width));
    }
    data.assign(static_cast<std::size_t>(channels) * plane_size(), fill);
}

std::span<float> ImageGrid::plane(int c)
{
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
}

std::span<const float> ImageGrid::plane(int c) const
{
    return {data.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
}

std::string ImageGrid::shape_string() const
{
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

BinaryMask::BinaryMask(int height, int width, std::uint8_t fill) : height(height), width(width)
{
    if (height < 1 || width < 1) {
        throw ParameterError("mask dimensions must be positive, got " + std::to_string(height) +
                             "x" + std::to_string(width));
    }
    values.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

std::string BinaryMask::shape_string() const
{
    return std::to_string(height) + "x" + std::to_string(width);
}

ImageGrid to_grayscale(const ImageGrid& image)
{
    if (image.channels == 1) return image;
    ImageGrid gray(1, image.height, image.width);
    auto out = gray.plane(0);
    for (int c = 0; c < image.channels; ++c) {
        const auto in = image.plane(c);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
    }
    const float scale = 1.0f / static_cast<float>(image.channels);
    for (auto& v : out) v *= scale;
    return gray;
}

ImageGrid replicate_channels(const ImageGrid& image, int channels)
{
    if (image.channels != 1) {
        throw DimensionError("replicate_channels expects a single-channel image, got " +
                             image.shape_string());
    }
    ImageGrid out(channels, image.height, image.width);
    for (int c = 0; c < channels; ++c) {
        std::ranges::copy(image.plane(0), out.plane(c).begin());
    }
    return out;
}

}  // namespace lednet
