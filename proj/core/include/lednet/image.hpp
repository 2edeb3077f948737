#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lednet {

/// Planar (channel-major) raster with intensities in [0,1].
///
/// Radiographs, overlays and probability maps all use this type. Index
/// order is (channel, row, col); `data.size() == channels * height * width`.
struct ImageGrid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    ImageGrid() = default;
    ImageGrid(int channels, int height, int width, float fill = 0.0f);

    [[nodiscard]] bool empty() const noexcept { return data.empty(); }
    [[nodiscard]] std::size_t plane_size() const noexcept
    {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }

    float& at(int c, int r, int col) { return data[index(c, r, col)]; }
    [[nodiscard]] float at(int c, int r, int col) const { return data[index(c, r, col)]; }

    [[nodiscard]] std::span<float> plane(int c);
    [[nodiscard]] std::span<const float> plane(int c) const;

    [[nodiscard]] std::string shape_string() const;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    [[nodiscard]] std::size_t index(int c, int r, int col) const noexcept
    {
        return (static_cast<std::size_t>(c) * height + r) * width + col;
    }
};

/// 2-D grid over {0,1}. Row-major.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(int height, int width, std::uint8_t fill = 0);

    std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    [[nodiscard]] std::uint8_t at(int r, int c) const
    {
        return values[static_cast<std::size_t>(r) * width + c];
    }

    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] std::string shape_string() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Channel mean; a single-channel image is returned as a copy.
[[nodiscard]] ImageGrid to_grayscale(const ImageGrid& image);

/// Replicates a single-channel image into `channels` identical planes.
[[nodiscard]] ImageGrid replicate_channels(const ImageGrid& image, int channels);

}  // namespace lednet
