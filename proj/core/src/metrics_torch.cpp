#include "lednet/metrics_torch.hpp"

#include <sstream>

#include "lednet/error.hpp"

namespace lednet::metrics {
namespace {

void require_same_shape(const torch::Tensor& p, const torch::Tensor& y)
{
    if (p.sizes() != y.sizes()) {
        std::ostringstream msg;
        msg << "prediction shape " << p.sizes() << " differs from target shape " << y.sizes();
        throw DimensionError(msg.str());
    }
}

}  // namespace

torch::Tensor bce_elementwise(const torch::Tensor& prediction, const torch::Tensor& target,
                              double eps)
{
    require_same_shape(prediction, target);
    const auto p = prediction.clamp(eps, 1.0 - eps);
    return -(target * torch::log(p) + (1.0 - target) * torch::log1p(-p));
}

torch::Tensor bce_loss(const torch::Tensor& prediction, const torch::Tensor& target, double eps)
{
    return bce_elementwise(prediction, target, eps).mean();
}

std::int64_t rounded_matches(const torch::Tensor& prediction, const torch::Tensor& target)
{
    require_same_shape(prediction, target);
    const auto rounded = prediction.ge(kRoundingThreshold);
    return rounded.eq(target.ge(0.5)).sum().item<std::int64_t>();
}

OverlapSums overlap_sums(const torch::Tensor& probabilities, const torch::Tensor& target,
                         double threshold)
{
    require_same_shape(probabilities, target);
    const auto batch = probabilities.size(0);
    const auto pred = probabilities.ge(threshold).reshape({batch, -1}).to(torch::kFloat64);
    const auto truth = target.ge(0.5).reshape({batch, -1}).to(torch::kFloat64);
    const auto inter = (pred * truth).sum(1);
    const auto sizes = pred.sum(1) + truth.sum(1);
    const auto uni = sizes - inter;
    // Empty-vs-empty counts as perfect agreement.
    const auto iou = torch::where(uni > 0, inter / uni.clamp_min(1.0), torch::ones_like(inter));
    const auto dice =
        torch::where(sizes > 0, 2.0 * inter / sizes.clamp_min(1.0), torch::ones_like(inter));
    return {iou.sum().item<double>(), dice.sum().item<double>()};
}

}  // namespace lednet::metrics
