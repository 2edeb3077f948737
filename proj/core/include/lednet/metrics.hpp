#pragma once

#include <span>
#include <vector>

#include "lednet/image.hpp"

namespace lednet::metrics {

/// Prediction clamp used by every binary cross-entropy evaluation.
inline constexpr double kBceEpsilon = 1e-7;

/// Decision boundary for rounding sigmoid outputs; ties round up.
inline constexpr double kRoundingThreshold = 0.5;

/// (prediction, target) operands of the element-wise metrics.
///
/// Constructed through `make`, which enforces equal lengths, predictions in
/// [0,1] and targets in {0,1}. The spans are non-owning.
class ScorePair {
public:
    static ScorePair make(std::span<const double> prediction, std::span<const double> target);

    [[nodiscard]] std::span<const double> prediction() const noexcept { return prediction_; }
    [[nodiscard]] std::span<const double> target() const noexcept { return target_; }
    [[nodiscard]] std::size_t size() const noexcept { return prediction_.size(); }

private:
    ScorePair(std::span<const double> p, std::span<const double> t) : prediction_(p), target_(t) {}

    std::span<const double> prediction_;
    std::span<const double> target_;
};

/// Intersection over union (Jaccard index). Two empty masks score 1.
[[nodiscard]] double iou(const BinaryMask& a, const BinaryMask& b);

/// 2|a∩b| / (|a|+|b|). Two empty masks score 1.
[[nodiscard]] double dice(const BinaryMask& a, const BinaryMask& b);

/// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
[[nodiscard]] double bce_loss(const ScorePair& pair, double eps = kBceEpsilon);

/// Gradient of `bce_loss` with respect to each prediction.
/// Entries whose prediction lies outside the clamp interval get zero.
[[nodiscard]] std::vector<double> bce_gradient(const ScorePair& pair, double eps = kBceEpsilon);

/// Fraction of entries where round(prediction) equals the target.
[[nodiscard]] double rounded_accuracy(const ScorePair& pair);

}  // namespace lednet::metrics
