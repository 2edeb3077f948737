#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lednet/history.hpp"
#include "lednet/image.hpp"

namespace lednet::seg {

struct SegModelConfig {
    int height = 256;
    int width = 256;
    int depth = 4;
    int base_channels = 16;
    int in_channels = 1;
    double learning_rate = 1e-3;
    int batch_size = 8;
    int epochs = 10;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    [[nodiscard]] std::map<std::string, std::string> to_map() const;
    [[nodiscard]] static SegModelConfig from_map(const std::map<std::string, std::string>& kv);

    friend bool operator==(const SegModelConfig&, const SegModelConfig&) = default;
};

/// Two 3x3 convolutions, each followed by group normalization and ReLU.
class DoubleConvImpl : public torch::nn::Module {
public:
    DoubleConvImpl(int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(DoubleConv);

/// Encoder-decoder with a skip connection from every encoder stage to the
/// matching decoder stage. Output is a per-pixel sigmoid probability map
/// with the input's spatial size.
class UNetImpl : public torch::nn::Module {
public:
    explicit UNetImpl(const SegModelConfig& config);

    torch::Tensor logits(const torch::Tensor& x);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::ModuleList down_;
    torch::nn::ModuleList up_;
    torch::nn::ModuleList up_conv_;
    DoubleConv bottleneck_{nullptr};
    torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNet);

/// Validates the config and builds a model whose initial weights depend only
/// on (config, seed).
[[nodiscard]] UNet build_seg_model(const SegModelConfig& config, std::uint64_t seed);

struct SegSample {
    ImageGrid image;   // single channel, config size
    BinaryMask mask;
};

struct SegCheckpoint {
    SegModelConfig config;
    UNet model{nullptr};
    std::vector<MetricsRecord> history;
    std::uint64_t seed = 0;
};

struct SegTrainOptions {
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::function<void(const MetricsRecord&)> on_epoch;
};

/// Adam on mean per-pixel BCE. Records a train and a val row per epoch with
/// loss, rounded pixel accuracy, mean IoU and mean Dice.
[[nodiscard]] SegCheckpoint train_localizer(UNet model, std::span<const SegSample> data,
                                            const SegModelConfig& config,
                                            const SegTrainOptions& options);

/// Probability maps, one single-channel grid per input image. Three-channel
/// inputs are reduced to grayscale when the model expects one channel.
[[nodiscard]] std::vector<ImageGrid> predict_probabilities(const SegCheckpoint& checkpoint,
                                                           std::span<const ImageGrid> images);

[[nodiscard]] std::vector<BinaryMask> predict_masks(const SegCheckpoint& checkpoint,
                                                    std::span<const ImageGrid> images,
                                                    double threshold = 0.5);

void save_checkpoint(const std::filesystem::path& path, const SegCheckpoint& checkpoint);
[[nodiscard]] SegCheckpoint load_seg_checkpoint(const std::filesystem::path& path);

}  // namespace lednet::seg
