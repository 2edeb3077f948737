#include "lednet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lednet/error.hpp"

namespace lednet::metrics {
namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op)
{
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": mask shapes differ (" + a.shape_string() +
                             " vs " + b.shape_string() + ")");
    }
}

struct Overlap {
    std::size_t intersection = 0;
    std::size_t a = 0;
    std::size_t b = 0;
};

Overlap overlap(const BinaryMask& a, const BinaryMask& b)
{
    Overlap o;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const bool x = a.values[i] != 0;
        const bool y = b.values[i] != 0;
        o.a += x;
        o.b += y;
        o.intersection += x && y;
    }
    return o;
}

double clamp_prediction(double p, double eps)
{
    return std::clamp(p, eps, 1.0 - eps);
}

}  // namespace

ScorePair ScorePair::make(std::span<const double> prediction, std::span<const double> target)
{
    if (prediction.size() != target.size()) {
        throw DimensionError("score pair lengths differ (" + std::to_string(prediction.size()) +
                             " vs " + std::to_string(target.size()) + ")");
    }
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        if (!(prediction[i] >= 0.0 && prediction[i] <= 1.0)) {
            throw ParameterError("prediction " + std::to_string(i) + " outside [0,1]: " +
                                 std::to_string(prediction[i]));
        }
        if (target[i] != 0.0 && target[i] != 1.0) {
            throw ParameterError("target " + std::to_string(i) + " is not 0 or 1: " +
                                 std::to_string(target[i]));
        }
    }
    return ScorePair(prediction, target);
}

double iou(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "iou");
    const Overlap o = overlap(a, b);
    const std::size_t uni = o.a + o.b - o.intersection;
    if (uni == 0) return 1.0;
    return static_cast<double>(o.intersection) / static_cast<double>(uni);
}

double dice(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "dice");
    const Overlap o = overlap(a, b);
    if (o.a + o.b == 0) return 1.0;
    return 2.0 * static_cast<double>(o.intersection) / static_cast<double>(o.a + o.b);
}

double bce_loss(const ScorePair& pair, double eps)
{
    if (pair.size() == 0) return 0.0;
    const auto p = pair.prediction();
    const auto y = pair.target();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = clamp_prediction(p[i], eps);
        total -= y[i] * std::log(q) + (1.0 - y[i]) * std::log1p(-q);
    }
    return total / static_cast<double>(p.size());
}

std::vector<double> bce_gradient(const ScorePair& pair, double eps)
{
    const auto p = pair.prediction();
    const auto y = pair.target();
    std::vector<double> grad(p.size(), 0.0);
    const double n = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < eps || p[i] > 1.0 - eps) continue;
        grad[i] = (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i])) / n;
    }
    return grad;
}

double rounded_accuracy(const ScorePair& pair)
{
    if (pair.size() == 0) return 0.0;
    const auto p = pair.prediction();
    const auto y = pair.target();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double rounded = p[i] >= kRoundingThreshold ? 1.0 : 0.0;
        hits += rounded == y[i];
    }
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

}  // namespace lednet::metrics
