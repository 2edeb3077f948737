#pragma once

#include <span>
#include <string>

#include <torch/torch.h>

#include "lednet/image.hpp"

namespace lednet {

/// (C,H,W) float tensor sharing no storage with the image.
[[nodiscard]] torch::Tensor to_tensor(const ImageGrid& image);

/// Stacks images of identical shape into (B,C,H,W).
[[nodiscard]] torch::Tensor to_batch(std::span<const ImageGrid> images);

/// (1,H,W) {0,1} float tensor.
[[nodiscard]] torch::Tensor to_tensor(const BinaryMask& mask);

/// Inverse of to_tensor for a (C,H,W) tensor.
[[nodiscard]] ImageGrid to_image(const torch::Tensor& chw);

/// Serializes all parameters and buffers of a module.
[[nodiscard]] std::string save_module(const torch::nn::Module& module);
void load_module(torch::nn::Module& module, const std::string& bytes);

/// Pins libtorch to deterministic single-threaded execution.
void configure_determinism(int threads = 1);

}  // namespace lednet
