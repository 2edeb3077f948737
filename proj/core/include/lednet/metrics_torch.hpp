#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "lednet/metrics.hpp"

// Tensor forms of the metrics for training loops. They follow the same
// clamp and rounding conventions as lednet/metrics.hpp.
namespace lednet::metrics {

/// Per-element clamped BCE, same shape as `prediction`. Differentiable.
torch::Tensor bce_elementwise(const torch::Tensor& prediction, const torch::Tensor& target,
                              double eps = kBceEpsilon);

/// Mean of `bce_elementwise`; a 0-dim tensor.
torch::Tensor bce_loss(const torch::Tensor& prediction, const torch::Tensor& target,
                       double eps = kBceEpsilon);

/// Number of entries where (prediction >= 0.5) matches target.
std::int64_t rounded_matches(const torch::Tensor& prediction, const torch::Tensor& target);

/// Per-sample IoU and Dice of thresholded probability maps of shape (B,1,H,W)
/// against {0,1} targets; sums over the batch are returned.
struct OverlapSums {
    double iou = 0.0;
    double dice = 0.0;
};
OverlapSums overlap_sums(const torch::Tensor& probabilities, const torch::Tensor& target,
                         double threshold = kRoundingThreshold);

}  // namespace lednet::metrics
