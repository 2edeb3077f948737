#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>

#include "lednet/dataset.hpp"
#include "lednet/image.hpp"

// Desk-scale stand-ins for the radiograph datasets: noisy frames with two
// bright elliptical "lungs" either side of the vertical centerline.
namespace lednet::synth {

struct PairOptions {
    /// Adds one to three small blobs near the frame corners, disjoint from
    /// the lungs, so the mask has more than two components.
    bool distractors = false;
};

/// Single-channel image and the exact union mask of the two ellipses.
/// h and w must be at least 32.
[[nodiscard]] std::pair<ImageGrid, BinaryMask> generate_synthetic_pair(
    std::uint64_t seed, int height, int width, const PairOptions& options = {});

struct StudyOptions {
    /// Probability that each observation is positive.
    double positive_rate = 0.5;
    /// Scatter label-independent marker-coloured blobs outside the lungs.
    bool outside_clutter = false;
    /// Corner distractor blobs in the image and its mask (see PairOptions).
    bool distractors = false;
};

/// Unit colour direction of marker `j`; 14 well-separated directions.
[[nodiscard]] std::array<float, 3> marker_direction(std::size_t j);
/// Colour offset added to the lung level for marker `j` in chest studies.
[[nodiscard]] std::array<float, 3> marker_offset(std::size_t j);

/// Three-channel study whose positive observations appear as coloured marker
/// blobs strictly inside the lung mask. Marker j has a fixed colour.
struct Study {
    ImageGrid image;
    BinaryMask mask;
    data::CleanLabelVector labels{};
};
[[nodiscard]] Study generate_synthetic_study(std::uint64_t seed, int height, int width,
                                             const StudyOptions& options = {});

struct BlobOptions {
    int radius = 3;
    double amplitude = 0.4;
    double background = 0.5;
    double noise = 0.0;
    double positive_rate = 0.5;
    /// When positive, label disks are confined to a centered disk of this
    /// radius, which is also returned as the mask.
    int region_radius = 0;
    /// Label-independent disks in marker colours placed outside the region.
    int clutter = 0;
    /// Put disk j at cell j of a 4x4 grid instead of a random free spot, so
    /// every label is a linear function of the pixels. Needs
    /// size / 8 >= radius + 1; region and clutter are ignored.
    bool fixed_slots = false;
};

struct ClsStudy {
    ImageGrid image;
    BinaryMask mask;
    data::CleanLabelVector labels{};
};

/// Three-channel frame with one disjoint coloured disk per positive
/// observation on a flat background. Label j is exactly "disk j is present
/// inside the mask".
[[nodiscard]] ClsStudy generate_marker_blob_sample(std::uint64_t seed, int size,
                                                   const BlobOptions& options = {});

/// Writes `count` studies as PNGs under `image_root` together with a
/// CheXpert-style manifest. Every fifth study also gets a lateral view.
/// Negative observations are spread over the "0.0", "-1.0" and empty tokens.
data::DatasetManifest write_synthetic_chexpert(const std::filesystem::path& image_root,
                                               const std::filesystem::path& manifest_path,
                                               std::size_t count, std::uint64_t seed, int size,
                                               const StudyOptions& options = {});

}  // namespace lednet::synth
