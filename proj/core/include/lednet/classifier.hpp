#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lednet/dataset.hpp"
#include "lednet/history.hpp"
#include "lednet/image.hpp"

namespace lednet::cls {

enum class Backbone { Dense121, DenseTiny };

[[nodiscard]] const char* backbone_name(Backbone b) noexcept;
[[nodiscard]] Backbone parse_backbone(const std::string& name);

struct ClsModelConfig {
    Backbone backbone = Backbone::DenseTiny;
    int growth_rate = 8;
    std::vector<int> block_layers{2, 2, 2};
    int init_features = 16;
    int bottleneck_width = 4;  // 1x1 conv produces bottleneck_width * growth_rate maps
    int height = 64;
    int width = 64;
    int channels = 3;
    int label_count = static_cast<int>(data::kObservationCount);
    double learning_rate = 1e-4;
    int batch_size = 50;
    int epochs = 8;
    double flip_probability = 0.5;

    /// Layer counts (6,12,24,16), growth 32, 64 stem features, 256x256x3.
    [[nodiscard]] static ClsModelConfig dense121();
    /// Blocks (2,2,2), growth 8, 16 stem features, 64x64x3.
    [[nodiscard]] static ClsModelConfig dense_tiny();

    void validate() const;

    /// Channel count leaving each dense block (before its transition).
    [[nodiscard]] std::vector<int> block_output_channels() const;
    /// Length of the pooled feature vector.
    [[nodiscard]] int feature_length() const;

    [[nodiscard]] std::map<std::string, std::string> to_map() const;
    [[nodiscard]] static ClsModelConfig from_map(const std::map<std::string, std::string>& kv);

    friend bool operator==(const ClsModelConfig&, const ClsModelConfig&) = default;
};

class DenseLayerImpl : public torch::nn::Module {
public:
    DenseLayerImpl(int in_channels, int growth_rate, int bottleneck_width);
    /// Returns the input with the layer's new maps concatenated on dim 1.
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(DenseLayer);

class TransitionImpl : public torch::nn::Module {
public:
    TransitionImpl(int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Transition);

/// Densely connected backbone, global average pooling, one affine map to
/// `label_count` scores and a per-score sigmoid.
class DenseNetImpl : public torch::nn::Module {
public:
    explicit DenseNetImpl(const ClsModelConfig& config);

    /// Pooled (B, feature_length) features.
    torch::Tensor features(const torch::Tensor& x);
    torch::Tensor forward(const torch::Tensor& x);

    /// Channel count after each stage of the feature extractor, recorded
    /// while building.
    [[nodiscard]] const std::vector<int>& block_channels() const noexcept { return block_channels_; }

private:
    torch::nn::Sequential stem_{nullptr};
    torch::nn::Sequential blocks_{nullptr};
    torch::nn::Sequential tail_{nullptr};
    torch::nn::Linear head_{nullptr};
    std::vector<int> block_channels_;
};
TORCH_MODULE(DenseNet);

[[nodiscard]] DenseNet build_classifier(const ClsModelConfig& config, std::uint64_t seed);

struct ClsSample {
    ImageGrid image;
    data::CleanLabelVector labels{};
};

/// Random-access sample stream. Implementations must be deterministic.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    [[nodiscard]] virtual std::size_t size() const = 0;
    [[nodiscard]] virtual ClsSample get(std::size_t index) const = 0;
};

class InMemorySource final : public SampleSource {
public:
    explicit InMemorySource(std::vector<ClsSample> samples) : samples_(std::move(samples)) {}
    [[nodiscard]] std::size_t size() const override { return samples_.size(); }
    [[nodiscard]] ClsSample get(std::size_t index) const override { return samples_.at(index); }

private:
    std::vector<ClsSample> samples_;
};

/// Loads image files on demand and resizes them to (height, width).
class FileSource final : public SampleSource {
public:
    struct Entry {
        std::filesystem::path path;
        data::CleanLabelVector labels{};
    };
    FileSource(std::vector<Entry> entries, int height, int width);
    [[nodiscard]] std::size_t size() const override { return entries_.size(); }
    [[nodiscard]] ClsSample get(std::size_t index) const override;

private:
    std::vector<Entry> entries_;
    int height_;
    int width_;
};

struct ClsCheckpoint {
    ClsModelConfig config;
    DenseNet model{nullptr};
    std::vector<MetricsRecord> history;
    std::uint64_t seed = 0;
};

struct ClsTrainOptions {
    std::uint64_t seed = 0;
    std::function<void(const MetricsRecord&)> on_epoch;
};

/// Adam on BCE over the train partition (with random horizontal flips),
/// then a validation pass, every epoch. Metrics are sample-weighted.
[[nodiscard]] ClsCheckpoint train_classifier(DenseNet model, const SampleSource& source,
                                             const ClsModelConfig& config,
                                             const data::SplitAssignment& split,
                                             const ClsTrainOptions& options);

/// Maps a batch (B,C,H,W) to probabilities (B,14).
using BatchPredictor = std::function<torch::Tensor(const torch::Tensor&)>;

/// Mean BCE and rounded accuracy of `predict` over the chosen samples (all
/// samples when `indices` is empty). No parameter updates.
[[nodiscard]] MetricsRecord evaluate_predictions(const BatchPredictor& predict,
                                                 const SampleSource& source,
                                                 std::span<const std::size_t> indices = {},
                                                 int batch_size = 50);

[[nodiscard]] MetricsRecord evaluate(const ClsCheckpoint& checkpoint, const SampleSource& source,
                                     std::span<const std::size_t> indices = {});

using FeatureVector = std::vector<float>;

[[nodiscard]] FeatureVector extract_features(const ClsCheckpoint& checkpoint,
                                             const ImageGrid& image);

/// Concatenated features -> one affine layer -> per-slot sigmoid.
class FusionHeadImpl : public torch::nn::Module {
public:
    FusionHeadImpl(int original_length, int overlay_length, int label_count);
    torch::Tensor forward(const torch::Tensor& original, const torch::Tensor& overlay);

    [[nodiscard]] int original_length() const noexcept { return original_length_; }
    [[nodiscard]] int overlay_length() const noexcept { return overlay_length_; }
    torch::nn::Linear& linear() { return linear_; }

private:
    int original_length_;
    int overlay_length_;
    torch::nn::Linear linear_{nullptr};
};
TORCH_MODULE(FusionHead);

[[nodiscard]] std::vector<double> fuse_predict(const FeatureVector& original,
                                               const FeatureVector& overlay, FusionHead& head);

/// Paired streams: sample i of `overlay` is the overlay of sample i of
/// `original` and carries the same labels.
struct FusionTrainOptions {
    double learning_rate = 1e-3;
    int epochs = 8;
    int batch_size = 50;
    std::uint64_t seed = 0;
};

/// Trains only the fusion head; both backbones stay frozen.
[[nodiscard]] std::vector<MetricsRecord> train_fusion_head(
    FusionHead& head, const ClsCheckpoint& original_model, const ClsCheckpoint& overlay_model,
    const SampleSource& original, const SampleSource& overlay, const data::SplitAssignment& split,
    const FusionTrainOptions& options);

void save_checkpoint(const std::filesystem::path& path, const ClsCheckpoint& checkpoint);
[[nodiscard]] ClsCheckpoint load_cls_checkpoint(const std::filesystem::path& path);

}  // namespace lednet::cls
