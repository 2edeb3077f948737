#include "lednet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lednet/error.hpp"
#include "lednet/image_io.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/random.hpp"

namespace lednet::synth {
namespace {

using mask::Pixel;

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
    double cy = 0.0;
    double cx = 0.0;
    double ry = 1.0;
    double rx = 1.0;
    double angle = 0.0;

    [[nodiscard]] bool contains(int r, int c) const
    {
        const double dy = r - cy;
        const double dx = c - cx;
        const double ca = std::cos(angle);
        const double sa = std::sin(angle);
        const double u = dx * ca + dy * sa;
        const double v = -dx * sa + dy * ca;
        return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
    }
};

struct Chest {
    ImageGrid image;  // single channel
    BinaryMask mask;
    float lung_level = 0.0f;
};

/// True when any foreground pixel of `mask` lies within `margin` pixels
/// (Chebyshev) of (r, c).
bool near_foreground(const BinaryMask& mask, int r, int c, int margin)
{
    for (int dr = -margin; dr <= margin; ++dr) {
        for (int dc = -margin; dc <= margin; ++dc) {
            const int rr = r + dr;
            const int cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= mask.height || cc >= mask.width) continue;
            if (mask.at(rr, cc)) return true;
        }
    }
    return false;
}

std::vector<Pixel> disk(int cy, int cx, int radius)
{
    std::vector<Pixel> out;
    for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
            if (dr * dr + dc * dc <= radius * radius) out.push_back({cy + dr, cx + dc});
        }
    }
    return out;
}

bool inside_frame(const std::vector<Pixel>& pixels, int h, int w)
{
    return std::ranges::all_of(pixels, [&](const Pixel& p) {
        return p.row >= 0 && p.col >= 0 && p.row < h && p.col < w;
    });
}

Chest draw_chest(std::uint64_t seed, int h, int w, bool distractors)
{
    if (h < 32 || w < 32) {
        throw ParameterError("synthetic frames need h, w >= 32, got " + std::to_string(h) + "x" +
                             std::to_string(w));
    }
    Rng rng(mix_seed(seed, 0));
    const double mid = (w - 1) / 2.0;

    std::array<Ellipse, 2> lungs;
    for (int side = 0; side < 2; ++side) {
        Ellipse e;
        e.cy = h * uniform_range(rng, 0.42, 0.52);
        e.ry = h * uniform_range(rng, 0.20, 0.28);
        e.rx = w * uniform_range(rng, 0.10, 0.15);
        e.angle = uniform_range(rng, -0.2, 0.2);
        const double offset = w * uniform_range(rng, 0.18, 0.26);
        e.cx = side == 0 ? mid - offset : mid + offset;
        // Keep each lung on its own side with a two-pixel gap at the centerline.
        const double reach = std::max(e.rx, e.ry * std::abs(std::sin(e.angle))) + 1.0;
        const double room = std::abs(e.cx - mid) - 2.0;
        if (reach > room) e.rx = std::max(2.0, e.rx - (reach - room));
        e.angle = reach > room ? 0.0 : e.angle;
        lungs[side] = e;
    }

    Chest chest;
    chest.lung_level = static_cast<float>(uniform_range(rng, 0.55, 0.65));
    const auto background = static_cast<float>(uniform_range(rng, 0.10, 0.25));
    chest.image = ImageGrid(1, h, w);
    chest.mask = BinaryMask(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const bool lung = lungs[0].contains(r, c) || lungs[1].contains(r, c);
            const double noise = 0.04 * standard_normal(rng);
            const double base = lung ? chest.lung_level : background + 0.05 * (r / double(h));
            chest.image.at(0, r, c) = static_cast<float>(std::clamp(base + noise, 0.0, 1.0));
            chest.mask.at(r, c) = lung ? 1 : 0;
        }
    }

    if (distractors) {
        // Separate stream: the lungs are identical with or without distractors.
        Rng blob_rng(mix_seed(seed, 1));
        const int radius = std::max(2, std::min(h, w) / 20);
        std::array<Pixel, 4> corners = {{{radius + 1, radius + 1},
                                         {radius + 1, w - radius - 2},
                                         {h - radius - 2, radius + 1},
                                         {h - radius - 2, w - radius - 2}}};
        shuffle(std::span<Pixel>(corners), blob_rng);
        const auto wanted = 1 + uniform_below(blob_rng, 3);
        const BinaryMask lungs_only = chest.mask;
        std::size_t placed = 0;
        for (const auto& corner : corners) {
            if (placed == wanted) break;
            const auto pixels = disk(corner.row, corner.col, radius);
            const bool clear = std::ranges::none_of(
                pixels, [&](const Pixel& p) { return near_foreground(lungs_only, p.row, p.col, 2); });
            if (!clear || !inside_frame(pixels, h, w)) continue;
            for (const auto& p : pixels) {
                chest.mask.at(p.row, p.col) = 1;
                chest.image.at(0, p.row, p.col) = std::clamp(
                    chest.lung_level + static_cast<float>(0.04 * standard_normal(blob_rng)), 0.0f,
                    1.0f);
            }
            ++placed;
        }
    }
    return chest;
}

/// Centers whose disk of `radius + 1` lies inside `allowed` and misses
/// `occupied`.
std::vector<Pixel> free_centers(const BinaryMask& allowed, const BinaryMask& occupied, int radius)
{
    std::vector<Pixel> out;
    const auto offsets = disk(0, 0, radius + 1);
    for (int r = 0; r < allowed.height; ++r) {
        for (int c = 0; c < allowed.width; ++c) {
            const bool fits = std::ranges::all_of(offsets, [&](const Pixel& d) {
                const int rr = r + d.row;
                const int cc = c + d.col;
                return rr >= 0 && cc >= 0 && rr < allowed.height && cc < allowed.width &&
                       allowed.at(rr, cc) && !occupied.at(rr, cc);
            });
            if (fits) out.push_back({r, c});
        }
    }
    return out;
}

/// Stamps a disk of the given colour offset relative to `level`.
void stamp_marker(ImageGrid& image, const std::vector<Pixel>& pixels, float level,
                  const std::array<float, 3>& offset)
{
    for (const auto& p : pixels) {
        for (int ch = 0; ch < 3; ++ch) {
            image.at(ch, p.row, p.col) = std::clamp(level + offset[ch], 0.0f, 1.0f);
        }
    }
}

}  // namespace

std::array<float, 3> marker_direction(std::size_t j)
{
    // Eight cube diagonals then the six signed axes, all unit length: the
    // closest pair is still about 0.77 apart.
    constexpr std::array<std::array<int, 3>, 8> kDiagonals = {{{1, 1, 1},
                                                              {1, 1, -1},
                                                              {1, -1, 1},
                                                              {1, -1, -1},
                                                              {-1, 1, 1},
                                                              {-1, 1, -1},
                                                              {-1, -1, 1},
                                                              {-1, -1, -1}}};
    std::array<float, 3> out{};
    if (j < kDiagonals.size()) {
        for (int ch = 0; ch < 3; ++ch) out[ch] = static_cast<float>(kDiagonals[j][ch] / std::sqrt(3.0));
    } else {
        const std::size_t k = (j - kDiagonals.size()) % 6;
        out[k / 2] = k % 2 == 0 ? 1.0f : -1.0f;
    }
    return out;
}

std::array<float, 3> marker_offset(std::size_t j)
{
    auto out = marker_direction(j);
    for (auto& v : out) v *= 0.3f;
    return out;
}

std::pair<ImageGrid, BinaryMask> generate_synthetic_pair(std::uint64_t seed, int height,
                                                         int width, const PairOptions& options)
{
    auto chest = draw_chest(seed, height, width, options.distractors);
    return {std::move(chest.image), std::move(chest.mask)};
}

Study generate_synthetic_study(std::uint64_t seed, int height, int width,
                               const StudyOptions& options)
{
    auto chest = draw_chest(seed, height, width, options.distractors);
    Rng rng(mix_seed(seed, 2));

    Study study;
    study.image = replicate_channels(chest.image, 3);
    study.mask = chest.mask;

    const int radius = std::max(3, std::min(height, width) / 20);
    const BinaryMask& lungs = chest.mask;
    BinaryMask occupied(height, width);

    for (std::size_t j = 0; j < data::kObservationCount; ++j) {
        study.labels[j] = uniform01(rng) < options.positive_rate ? 1 : 0;
    }
    for (std::size_t j = 0; j < data::kObservationCount; ++j) {
        if (!study.labels[j]) continue;
        const auto centers = free_centers(lungs, occupied, radius);
        // No room left: the observation stays negative so labels match pixels.
        if (centers.empty()) {
            study.labels[j] = 0;
            continue;
        }
        const Pixel center = centers[uniform_below(rng, centers.size())];
        stamp_marker(study.image, disk(center.row, center.col, radius), chest.lung_level,
                     marker_offset(j));
        for (const auto& p : disk(center.row, center.col, radius + 1)) occupied.at(p.row, p.col) = 1;
    }

    if (options.outside_clutter) {
        // Label-independent marker colours, kept three pixels clear of the lungs.
        const auto blobs = 3 + uniform_below(rng, 6);
        for (std::uint64_t k = 0; k < blobs; ++k) {
            const auto j = uniform_below(rng, data::kObservationCount);
            for (int attempt = 0; attempt < 64; ++attempt) {
                const int r = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(height)));
                const int c = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(width)));
                const auto pixels = disk(r, c, radius);
                if (!inside_frame(pixels, height, width)) continue;
                if (std::ranges::any_of(pixels, [&](const Pixel& p) {
                        return near_foreground(lungs, p.row, p.col, 3);
                    })) {
                    continue;
                }
                stamp_marker(study.image, pixels, chest.lung_level, marker_offset(j));
                break;
            }
        }
    }
    return study;
}

ClsStudy generate_marker_blob_sample(std::uint64_t seed, int size, const BlobOptions& options)
{
    if (size < 4 * (options.radius + 1)) {
        throw ParameterError("marker-blob frames need size >= 4*(radius+1), got " +
                             std::to_string(size));
    }
    Rng rng(seed);
    ClsStudy out;
    out.image = ImageGrid(3, size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double noise = options.noise > 0 ? options.noise * standard_normal(rng) : 0.0;
            const auto v = static_cast<float>(std::clamp(options.background + noise, 0.0, 1.0));
            for (int ch = 0; ch < 3; ++ch) out.image.at(ch, r, c) = v;
        }
    }
    out.mask = BinaryMask(size, size, 1);
    if (options.fixed_slots) {
        const int cell = size / 4;
        if (cell / 2 < options.radius + 1) {
            throw ParameterError("fixed marker slots need size / 8 >= radius + 1, got size " +
                                 std::to_string(size));
        }
        for (std::size_t j = 0; j < data::kObservationCount; ++j) {
            out.labels[j] = uniform01(rng) < options.positive_rate ? 1 : 0;
        }
        for (std::size_t j = 0; j < data::kObservationCount; ++j) {
            if (!out.labels[j]) continue;
            const int row = static_cast<int>(j / 4) * cell + cell / 2;
            const int col = static_cast<int>(j % 4) * cell + cell / 2;
            const auto direction = marker_direction(j);
            for (const auto& p : disk(row, col, options.radius)) {
                for (int ch = 0; ch < 3; ++ch) {
                    out.image.at(ch, p.row, p.col) = std::clamp(
                        static_cast<float>(options.background + options.amplitude * direction[ch]), 0.0f, 1.0f);
                }
            }
        }
        return out;
    }
    if (options.region_radius > 0) {
        const double mid = (size - 1) / 2.0;
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                out.mask.at(r, c) =
                    std::hypot(r - mid, c - mid) <= options.region_radius ? 1 : 0;
            }
        }
    }
    BinaryMask occupied(size, size);
    auto stamp = [&](Pixel center, std::size_t j) {
        const auto direction = marker_direction(j);
        for (const auto& p : disk(center.row, center.col, options.radius)) {
            for (int ch = 0; ch < 3; ++ch) {
                out.image.at(ch, p.row, p.col) = std::clamp(
                    static_cast<float>(options.background + options.amplitude * direction[ch]), 0.0f, 1.0f);
            }
        }
        for (const auto& p : disk(center.row, center.col, options.radius + 1)) {
            if (p.row >= 0 && p.col >= 0 && p.row < size && p.col < size) occupied.at(p.row, p.col) = 1;
        }
    };

    for (std::size_t j = 0; j < data::kObservationCount; ++j) {
        out.labels[j] = uniform01(rng) < options.positive_rate ? 1 : 0;
    }
    // Random placement order so no slot is favoured when room runs out.
    std::array<std::size_t, data::kObservationCount> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    for (const std::size_t j : order) {
        if (!out.labels[j]) continue;
        const auto centers = free_centers(out.mask, occupied, options.radius);
        if (centers.empty()) {
            out.labels[j] = 0;
            continue;
        }
        stamp(centers[uniform_below(rng, centers.size())], j);
    }
    if (options.clutter > 0) {
        BinaryMask outside(size, size);
        for (std::size_t i = 0; i < outside.values.size(); ++i) outside.values[i] = !out.mask.values[i];
        for (int k = 0; k < options.clutter; ++k) {
            const auto centers = free_centers(outside, occupied, options.radius);
            if (centers.empty()) break;
            const auto center = centers[uniform_below(rng, centers.size())];
            stamp(center, uniform_below(rng, data::kObservationCount));
        }
    }
    return out;
}

data::DatasetManifest write_synthetic_chexpert(const std::filesystem::path& image_root,
                                               const std::filesystem::path& manifest_path,
                                               std::size_t count, std::uint64_t seed, int size,
                                               const StudyOptions& options)
{
    data::DatasetManifest manifest;
    manifest.observations = data::default_observations();
    Rng meta(mix_seed(seed, 3));
    char name[64];

    for (std::size_t i = 0; i < count; ++i) {
        const auto study_seed = mix_seed(seed, 1000 + i);
        const Study study = generate_synthetic_study(study_seed, size, size, options);

        std::snprintf(name, sizeof(name), "patient%05zu/study1/view1_frontal.png", i + 1);
        io::write_image(image_root / name, study.image);

        data::ManifestRecord record;
        record.path = name;
        record.sex = uniform01(meta) < 0.5 ? "Female" : "Male";
        record.age = std::to_string(20 + uniform_below(meta, 70));
        record.view = data::View::Frontal;
        record.projection = uniform01(meta) < 0.5 ? "AP" : "PA";
        for (std::size_t j = 0; j < data::kObservationCount; ++j) {
            if (study.labels[j]) {
                record.labels[j] = data::RawLabel::Positive;
            } else {
                // Every non-positive token cleans to 0.
                constexpr data::RawLabel kNegatives[] = {data::RawLabel::Negative,
                                                         data::RawLabel::Uncertain,
                                                         data::RawLabel::Missing};
                record.labels[j] = kNegatives[uniform_below(meta, 3)];
            }
        }
        manifest.records.push_back(record);

        if (i % 5 == 4) {
            std::snprintf(name, sizeof(name), "patient%05zu/study1/view2_lateral.png", i + 1);
            auto [lateral, unused] = generate_synthetic_pair(mix_seed(study_seed, 9), size, size);
            io::write_image(image_root / name, lateral);
            data::ManifestRecord side = record;
            side.path = name;
            side.view = data::View::Lateral;
            side.projection.clear();
            manifest.records.push_back(side);
        }
    }
    data::write_manifest(manifest_path, manifest);
    return manifest;
}

}  // namespace lednet::synth
