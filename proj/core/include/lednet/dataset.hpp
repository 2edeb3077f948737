#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lednet/image.hpp"

namespace lednet::data {

inline constexpr std::size_t kObservationCount = 14;

/// Observation columns of the public CheXpert CSV, in file order.
inline constexpr std::array<const char*, kObservationCount> kChexpertObservations = {
    "No Finding",       "Enlarged Cardiomediastinum", "Cardiomegaly", "Lung Opacity",
    "Lung Lesion",      "Edema",                      "Consolidation", "Pneumonia",
    "Atelectasis",      "Pneumothorax",               "Pleural Effusion", "Pleural Other",
    "Fracture",         "Support Devices"};

/// Metadata columns preceding the observations in a manifest.
inline constexpr std::array<const char*, 5> kMetadataColumns = {"Path", "Sex", "Age",
                                                                "Frontal/Lateral", "AP/PA"};

enum class RawLabel : std::uint8_t { Negative, Positive, Uncertain, Missing };

using RawLabelVector = std::array<RawLabel, kObservationCount>;
using CleanLabelVector = std::array<std::uint8_t, kObservationCount>;

enum class View : std::uint8_t { Frontal, Lateral };

struct ManifestRecord {
    std::string path;
    std::string sex;
    std::string age;
    View view = View::Frontal;
    std::string projection;  // AP/PA column, kept verbatim
    RawLabelVector labels{};

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
    std::array<std::string, kObservationCount> observations{};
    std::vector<ManifestRecord> records;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Header names in CheXpert order.
[[nodiscard]] std::array<std::string, kObservationCount> default_observations();

/// Parses a CheXpert-style CSV. Label cells: "1.0" positive, "0.0" negative,
/// "-1.0" uncertain, empty missing. Errors carry the 1-based line number.
[[nodiscard]] DatasetManifest parse_manifest(std::istream& csv);
[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);

void serialize_manifest(std::ostream& out, const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Positive -> 1; negative, uncertain and missing -> 0.
[[nodiscard]] CleanLabelVector clean_labels(const RawLabelVector& raw) noexcept;

/// Reinterprets a clean vector as raw labels (1 -> positive, 0 -> negative).
[[nodiscard]] RawLabelVector as_raw(const CleanLabelVector& clean) noexcept;

/// Frontal records only, original order preserved.
[[nodiscard]] DatasetManifest filter_frontal(const DatasetManifest& manifest);

enum class Partition : std::uint8_t { Train, Val, Test };

[[nodiscard]] const char* partition_name(Partition p) noexcept;

struct SplitAssignment {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;

    [[nodiscard]] const std::vector<std::size_t>& indices(Partition p) const;
    [[nodiscard]] std::size_t total() const noexcept { return train.size() + val.size() + test.size(); }

    friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// Seeded shuffle of 0..n-1 cut into floor(0.7n), floor(0.2n) and the rest.
[[nodiscard]] SplitAssignment split(std::size_t n, std::uint64_t seed);

/// Two-way seeded split used for segmentation training: the first
/// n - floor(val_fraction * n) shuffled indices train, the rest validate.
/// `test` stays empty.
[[nodiscard]] SplitAssignment split_train_val(std::size_t n, double val_fraction,
                                              std::uint64_t seed);

/// CSV `index,partition` preceded by a `# seed=N` comment. Rows are in index order.
void write_split(const std::filesystem::path& path, const SplitAssignment& split,
                 const std::string& provenance = {});
[[nodiscard]] SplitAssignment read_split(const std::filesystem::path& path);

/// An image paired with its fused lung mask.
struct SegmentationPair {
    std::string stem;
    std::filesystem::path image;
    std::filesystem::path left_mask;
    std::filesystem::path right_mask;
};

/// Matches images to left/right lung masks by file stem (JSRT/SCR layout).
/// Images without both masks are reported in `unmatched`.
struct PairingResult {
    std::vector<SegmentationPair> pairs;
    std::vector<std::string> unmatched;
};
[[nodiscard]] PairingResult pair_segmentation_files(const std::filesystem::path& image_dir,
                                                    const std::filesystem::path& left_mask_dir,
                                                    const std::filesystem::path& right_mask_dir);

}  // namespace lednet::data
