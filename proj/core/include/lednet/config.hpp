#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "lednet/classifier.hpp"
#include "lednet/localizer.hpp"

namespace lednet {

/// Flat `section.key=value` text; `#` starts a comment line.
using KeyValues = std::map<std::string, std::string>;

[[nodiscard]] KeyValues parse_key_values(std::istream& in);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Typed lookups that raise ConfigError naming the key.
[[nodiscard]] int get_int(const KeyValues& kv, const std::string& key, int fallback);
[[nodiscard]] std::uint64_t get_u64(const KeyValues& kv, const std::string& key,
                                    std::uint64_t fallback);
[[nodiscard]] double get_real(const KeyValues& kv, const std::string& key, double fallback);
[[nodiscard]] bool get_bool(const KeyValues& kv, const std::string& key, bool fallback);
[[nodiscard]] std::string get_string(const KeyValues& kv, const std::string& key,
                                     const std::string& fallback);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes) noexcept;

struct ExperimentPaths {
    std::filesystem::path manifest = "data/manifest.csv";
    std::filesystem::path image_root = "data/images";
    std::filesystem::path mask_dir = "out/masks";
    std::filesystem::path overlay_dir = "out/overlay";
    std::filesystem::path checkpoint_dir = "out/checkpoints";
    std::filesystem::path report_dir = "out/report";
    // Segmentation training images and the left/right lung masks, paired by stem.
    std::filesystem::path seg_image_dir = "data/seg/images";
    std::filesystem::path seg_left_mask_dir = "data/seg/left";
    std::filesystem::path seg_right_mask_dir = "data/seg/right";
};

struct SyntheticSettings {
    std::size_t seg_pairs = 200;
    std::size_t studies = 600;
    int image_size = 64;
    bool distractors = false;
    bool outside_clutter = true;
};

struct ExperimentConfig {
    ExperimentPaths paths;
    std::uint64_t seed = 0;
    seg::SegModelConfig localizer;
    double seg_val_fraction = 0.2;
    cls::ClsModelConfig classifier = cls::ClsModelConfig::dense_tiny();
    double threshold = 0.5;
    bool retain_two = true;
    bool mirror_fill = true;
    SyntheticSettings synthetic;

    /// Relative paths are resolved against `base` (usually the config file's
    /// directory).
    [[nodiscard]] static ExperimentConfig from_key_values(const KeyValues& kv,
                                                          const std::filesystem::path& base = {});
    [[nodiscard]] static ExperimentConfig load(const std::filesystem::path& path);
    [[nodiscard]] KeyValues to_key_values() const;

    void validate() const;

    /// FNV-1a of the canonical key/value text, excluding paths so relocating
    /// an experiment does not change its identity.
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] std::string hash_hex() const;

    /// `seed=N config_hash=XXXXXXXXXXXXXXXX`
    [[nodiscard]] std::string provenance() const;
};

}  // namespace lednet
