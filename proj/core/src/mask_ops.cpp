#include "lednet/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <opencv2/imgcodecs.hpp>

#include "lednet/error.hpp"

namespace lednet::mask {
namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op)
{
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": mask shapes differ (" + a.shape_string() +
                             " vs " + b.shape_string() + ")");
    }
}

/// Union-find over provisional labels.
class DisjointSets {
public:
    int make()
    {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

}  // namespace

BinaryMask combine(const BinaryMask& left, const BinaryMask& right)
{
    require_same_shape(left, right, "combine");
    BinaryMask out = left;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = (left.values[i] | right.values[i]) ? 1 : 0;
    }
    return out;
}

BinaryMask binarize(const ImageGrid& probabilities, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ParameterError("binarize threshold must lie in (0,1), got " +
                             std::to_string(threshold));
    }
    if (probabilities.channels != 1) {
        throw DimensionError("binarize expects a single-channel probability map, got " +
                             probabilities.shape_string());
    }
    BinaryMask out(probabilities.height, probabilities.width);
    const auto p = probabilities.plane(0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        out.values[i] = static_cast<double>(p[i]) >= threshold ? 1 : 0;
    }
    return out;
}

ImageGrid overlay(const ImageGrid& image, const BinaryMask& mask)
{
    if (image.height != mask.height || image.width != mask.width) {
        throw DimensionError("overlay: image " + image.shape_string() + " vs mask " +
                             mask.shape_string());
    }
    ImageGrid out = image;
    for (int c = 0; c < out.channels; ++c) {
        auto plane = out.plane(c);
        for (std::size_t i = 0; i < plane.size(); ++i) {
            if (mask.values[i] == 0) plane[i] = 0.0f;
        }
    }
    return out;
}

std::vector<Component> connected_components(const BinaryMask& mask)
{
    const int h = mask.height;
    const int w = mask.width;
    std::vector<int> labels(static_cast<std::size_t>(h) * w, -1);
    DisjointSets sets;

    // First pass: provisional labels from the already-visited 8-neighbours.
    constexpr int kPrior[4][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!mask.at(r, c)) continue;
            int label = -1;
            for (const auto& d : kPrior) {
                const int rr = r + d[0];
                const int cc = c + d[1];
                if (rr < 0 || cc < 0 || cc >= w) continue;
                const int other = labels[static_cast<std::size_t>(rr) * w + cc];
                if (other < 0) continue;
                if (label < 0) {
                    label = other;
                } else {
                    sets.unite(label, other);
                }
            }
            if (label < 0) label = sets.make();
            labels[static_cast<std::size_t>(r) * w + c] = label;
        }
    }

    // Second pass: resolve roots and number components by first appearance.
    std::vector<int> final_id;
    std::vector<Component> components;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int provisional = labels[static_cast<std::size_t>(r) * w + c];
            if (provisional < 0) continue;
            const int root = sets.find(provisional);
            if (static_cast<std::size_t>(root) >= final_id.size()) {
                final_id.resize(static_cast<std::size_t>(root) + 1, -1);
            }
            if (final_id[root] < 0) {
                final_id[root] = static_cast<int>(components.size());
                components.emplace_back();
            }
            components[final_id[root]].pixels.push_back({r, c});
        }
    }

    const double center_row = (h - 1) / 2.0;
    const double center_col = (w - 1) / 2.0;
    for (auto& comp : components) {
        double sr = 0.0;
        double sc = 0.0;
        for (const auto& p : comp.pixels) {
            sr += p.row;
            sc += p.col;
        }
        const auto n = static_cast<double>(comp.pixels.size());
        comp.centroid_row = sr / n;
        comp.centroid_col = sc / n;
        comp.center_distance =
            std::hypot(comp.centroid_row - center_row, comp.centroid_col - center_col);
    }
    return components;
}

BinaryMask retain_two_regions(const BinaryMask& mask)
{
    const auto components = connected_components(mask);
    if (components.size() <= 2) return mask;

    std::vector<std::size_t> order(components.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
        const auto& ca = components[a];
        const auto& cb = components[b];
        if (ca.center_distance != cb.center_distance) {
            return ca.center_distance < cb.center_distance;
        }
        return ca.pixels.size() > cb.pixels.size();
    });

    BinaryMask out(mask.height, mask.width);
    for (std::size_t k = 0; k < 2; ++k) {
        for (const auto& p : components[order[k]].pixels) out.at(p.row, p.col) = 1;
    }
    return out;
}

BinaryMask reflect(const BinaryMask& mask)
{
    BinaryMask out = mask;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            out.at(r, c) = mask.at(r, mask.width - 1 - c);
        }
    }
    return out;
}

BinaryMask mirror_fill(const BinaryMask& mask)
{
    if (connected_components(mask).size() != 1) return mask;
    return combine(mask, reflect(mask));
}

BinaryMask read_mask(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw IoError("mask file not found: " + path.string());
    }
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (raw.empty()) throw FormatError("cannot decode mask: " + path.string());
    BinaryMask out(raw.rows, raw.cols);
    for (int r = 0; r < raw.rows; ++r) {
        const auto* row = raw.ptr<std::uint8_t>(r);
        for (int c = 0; c < raw.cols; ++c) out.at(r, c) = row[c] ? 1 : 0;
    }
    return out;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    cv::Mat raw(mask.height, mask.width, CV_8UC1);
    for (int r = 0; r < mask.height; ++r) {
        auto* row = raw.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.width; ++c) row[c] = mask.at(r, c) ? 255 : 0;
    }
    if (!cv::imwrite(path.string(), raw)) throw IoError("cannot write mask: " + path.string());
}

}  // namespace lednet::mask
