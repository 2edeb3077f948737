#include "lednet/localizer.hpp"

#include <cmath>
#include <numeric>

#include "lednet/checkpoint.hpp"
#include "lednet/config.hpp"
#include "lednet/dataset.hpp"
#include "lednet/error.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/metrics_torch.hpp"
#include "lednet/random.hpp"
#include "lednet/tensor.hpp"

namespace lednet::seg {
namespace {

constexpr const char* kKind = "localizer";

torch::nn::GroupNorm group_norm(int channels)
{
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::gcd(channels, 8), channels));
}

int stage_channels(const SegModelConfig& config, int stage)
{
    return config.base_channels << stage;
}

ImageGrid as_model_input(const ImageGrid& image, const SegModelConfig& config)
{
    if (image.height != config.height || image.width != config.width) {
        throw DimensionError("localizer expects " + std::to_string(config.height) + "x" +
                             std::to_string(config.width) + " images, got " +
                             std::to_string(image.height) + "x" + std::to_string(image.width));
    }
    if (image.channels == config.in_channels) return image;
    if (config.in_channels == 1) return to_grayscale(image);
    if (image.channels == 1) return replicate_channels(image, config.in_channels);
    throw DimensionError("localizer expects " + std::to_string(config.in_channels) +
                         " channels, got " + image.shape_string());
}

struct PhaseTotals {
    double loss = 0.0;  // sum of per-sample mean pixel loss
    std::int64_t matches = 0;
    std::int64_t pixels = 0;
    double iou = 0.0;
    double dice = 0.0;
    std::size_t samples = 0;

    [[nodiscard]] MetricsRecord record(int epoch, const char* phase) const
    {
        MetricsRecord r;
        r.epoch = epoch;
        r.phase = phase;
        const auto n = static_cast<double>(samples);
        r.loss = loss / n;
        r.accuracy = static_cast<double>(matches) / static_cast<double>(pixels);
        r.iou = iou / n;
        r.dice = dice / n;
        return r;
    }
};

void accumulate(PhaseTotals& totals, const torch::Tensor& probs, const torch::Tensor& target,
                double batch_loss)
{
    const auto batch = probs.size(0);
    totals.loss += batch_loss * static_cast<double>(batch);
    totals.matches += metrics::rounded_matches(probs, target);
    totals.pixels += probs.numel();
    const auto overlap = metrics::overlap_sums(probs, target);
    totals.iou += overlap.iou;
    totals.dice += overlap.dice;
    totals.samples += static_cast<std::size_t>(batch);
}

torch::Tensor gather(const torch::Tensor& all, std::span<const std::size_t> indices)
{
    std::vector<std::int64_t> idx(indices.begin(), indices.end());
    return all.index_select(0, torch::tensor(idx, torch::kLong));
}

}  // namespace

void SegModelConfig::validate() const
{
    if (depth < 1) throw ConfigError("localizer.depth must be >= 1, got " + std::to_string(depth));
    if (base_channels < 1) throw ConfigError("localizer.base_channels must be >= 1");
    if (in_channels != 1 && in_channels != 3) throw ConfigError("localizer.in_channels must be 1 or 3");
    const int stride = 1 << depth;
    if (height < 1 || height % stride != 0) {
        throw ConfigError("localizer.height " + std::to_string(height) + " is not divisible by " +
                          std::to_string(stride) + " (2^depth)");
    }
    if (width < 1 || width % stride != 0) {
        throw ConfigError("localizer.width " + std::to_string(width) + " is not divisible by " +
                          std::to_string(stride) + " (2^depth)");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("localizer.learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("localizer.batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("localizer.epochs must be >= 1");
}

std::map<std::string, std::string> SegModelConfig::to_map() const
{
    return {{"height", std::to_string(height)},
            {"width", std::to_string(width)},
            {"depth", std::to_string(depth)},
            {"base_channels", std::to_string(base_channels)},
            {"in_channels", std::to_string(in_channels)},
            {"learning_rate", format_real(learning_rate)},
            {"batch_size", std::to_string(batch_size)},
            {"epochs", std::to_string(epochs)}};
}

SegModelConfig SegModelConfig::from_map(const std::map<std::string, std::string>& kv)
{
    SegModelConfig c;
    c.height = get_int(kv, "height", c.height);
    c.width = get_int(kv, "width", c.width);
    c.depth = get_int(kv, "depth", c.depth);
    c.base_channels = get_int(kv, "base_channels", c.base_channels);
    c.in_channels = get_int(kv, "in_channels", c.in_channels);
    c.learning_rate = get_real(kv, "learning_rate", c.learning_rate);
    c.batch_size = get_int(kv, "batch_size", c.batch_size);
    c.epochs = get_int(kv, "epochs", c.epochs);
    return c;
}

DoubleConvImpl::DoubleConvImpl(int in_channels, int out_channels)
{
    using torch::nn::Conv2dOptions;
    body_ = register_module(
        "body",
        torch::nn::Sequential(
            torch::nn::Conv2d(Conv2dOptions(in_channels, out_channels, 3).padding(1).bias(false)),
            group_norm(out_channels), torch::nn::ReLU(),
            torch::nn::Conv2d(Conv2dOptions(out_channels, out_channels, 3).padding(1).bias(false)),
            group_norm(out_channels), torch::nn::ReLU()));
}

torch::Tensor DoubleConvImpl::forward(const torch::Tensor& x)
{
    return body_->forward(x);
}

UNetImpl::UNetImpl(const SegModelConfig& config)
{
    config.validate();
    int in = config.in_channels;
    for (int s = 0; s < config.depth; ++s) {
        down_->push_back(DoubleConv(in, stage_channels(config, s)));
        in = stage_channels(config, s);
    }
    bottleneck_ = DoubleConv(in, stage_channels(config, config.depth));
    for (int s = config.depth - 1; s >= 0; --s) {
        const int wide = stage_channels(config, s + 1);
        const int narrow = stage_channels(config, s);
        up_->push_back(torch::nn::ConvTranspose2d(
            torch::nn::ConvTranspose2dOptions(wide, narrow, 2).stride(2)));
        up_conv_->push_back(DoubleConv(2 * narrow, narrow));
    }
    head_ = torch::nn::Conv2d(torch::nn::Conv2dOptions(config.base_channels, 1, 1));

    register_module("down", down_);
    register_module("bottleneck", bottleneck_);
    register_module("up", up_);
    register_module("up_conv", up_conv_);
    register_module("head", head_);
}

torch::Tensor UNetImpl::logits(const torch::Tensor& x)
{
    std::vector<torch::Tensor> skips;
    auto h = x;
    for (const auto& stage : *down_) {
        h = stage->as<DoubleConv>()->forward(h);
        skips.push_back(h);
        h = torch::max_pool2d(h, 2);
    }
    h = bottleneck_->forward(h);
    for (std::size_t i = 0; i < up_->size(); ++i) {
        h = up_[i]->as<torch::nn::ConvTranspose2d>()->forward(h);
        h = torch::cat({skips[skips.size() - 1 - i], h}, 1);
        h = up_conv_[i]->as<DoubleConv>()->forward(h);
    }
    return head_->forward(h);
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x)
{
    return torch::sigmoid(logits(x));
}

UNet build_seg_model(const SegModelConfig& config, std::uint64_t seed)
{
    config.validate();
    torch::manual_seed(seed);
    return UNet(config);
}

SegCheckpoint train_localizer(UNet model, std::span<const SegSample> data,
                              const SegModelConfig& config, const SegTrainOptions& options)
{
    config.validate();
    if (data.empty()) throw DataError("segmentation training needs at least one sample");

    std::vector<ImageGrid> images;
    std::vector<torch::Tensor> masks;
    images.reserve(data.size());
    masks.reserve(data.size());
    for (const auto& sample : data) {
        images.push_back(as_model_input(sample.image, config));
        if (sample.mask.height != config.height || sample.mask.width != config.width) {
            throw DimensionError("mask " + sample.mask.shape_string() + " does not match the " +
                                 std::to_string(config.height) + "x" +
                                 std::to_string(config.width) + " input size");
        }
        masks.push_back(to_tensor(sample.mask));
    }
    const auto inputs = to_batch(images);
    const auto targets = torch::stack(masks);

    const auto split = data::split_train_val(data.size(), options.val_fraction, options.seed);
    torch::optim::Adam optimizer(model->parameters(),
                                 torch::optim::AdamOptions(config.learning_rate));
    Rng rng(mix_seed(options.seed, 7));

    SegCheckpoint checkpoint{config, model, {}, options.seed};
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        model->train();
        auto order = split.train;
        shuffle(std::span<std::size_t>(order), rng);
        PhaseTotals train;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            ++batch_no;
            const auto count = std::min(batch_size, order.size() - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            const auto x = gather(inputs, idx);
            const auto y = gather(targets, idx);
            optimizer.zero_grad();
            const auto probs = model->forward(x);
            const auto loss = metrics::bce_loss(probs, y);
            const double value = loss.item<double>();
            if (!std::isfinite(value)) {
                throw TrainingError("non-finite segmentation loss at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(batch_no));
            }
            loss.backward();
            optimizer.step();
            accumulate(train, probs.detach(), y, value);
        }
        checkpoint.history.push_back(train.record(epoch, "train"));
        if (options.on_epoch) options.on_epoch(checkpoint.history.back());

        model->eval();
        torch::NoGradGuard no_grad;
        PhaseTotals val;
        for (std::size_t start = 0; start < split.val.size(); start += batch_size) {
            const auto count = std::min(batch_size, split.val.size() - start);
            const std::span<const std::size_t> idx(split.val.data() + start, count);
            const auto x = gather(inputs, idx);
            const auto y = gather(targets, idx);
            const auto probs = model->forward(x);
            accumulate(val, probs, y, metrics::bce_loss(probs, y).item<double>());
        }
        checkpoint.history.push_back(val.record(epoch, "val"));
        if (options.on_epoch) options.on_epoch(checkpoint.history.back());
    }
    model->eval();
    return checkpoint;
}

std::vector<ImageGrid> predict_probabilities(const SegCheckpoint& checkpoint,
                                             std::span<const ImageGrid> images)
{
    std::vector<ImageGrid> out;
    if (images.empty()) return out;
    out.reserve(images.size());
    auto model = checkpoint.model;
    model->eval();
    torch::NoGradGuard no_grad;
    const auto batch_size = static_cast<std::size_t>(std::max(1, checkpoint.config.batch_size));
    for (std::size_t start = 0; start < images.size(); start += batch_size) {
        const auto count = std::min(batch_size, images.size() - start);
        std::vector<ImageGrid> batch;
        batch.reserve(count);
        for (std::size_t i = start; i < start + count; ++i) {
            batch.push_back(as_model_input(images[i], checkpoint.config));
        }
        const auto probs = model->forward(to_batch(batch));
        for (std::int64_t b = 0; b < probs.size(0); ++b) out.push_back(to_image(probs[b]));
    }
    return out;
}

std::vector<BinaryMask> predict_masks(const SegCheckpoint& checkpoint,
                                      std::span<const ImageGrid> images, double threshold)
{
    std::vector<BinaryMask> masks;
    for (const auto& probs : predict_probabilities(checkpoint, images)) {
        masks.push_back(mask::binarize(probs, threshold));
    }
    return masks;
}

void save_checkpoint(const std::filesystem::path& path, const SegCheckpoint& checkpoint)
{
    CheckpointArchive archive;
    archive.kind = kKind;
    archive.config = checkpoint.config.to_map();
    archive.config["seed"] = std::to_string(checkpoint.seed);
    archive.history = checkpoint.history;
    archive.layout = HistoryLayout::Segmentation;
    archive.weights = save_module(*checkpoint.model);
    write_archive(path, archive);
}

SegCheckpoint load_seg_checkpoint(const std::filesystem::path& path)
{
    const auto archive = read_archive(path);
    if (archive.kind != kKind) {
        throw FormatError(path.string() + " holds a '" + archive.kind + "' checkpoint, expected '" +
                          kKind + "'");
    }
    SegCheckpoint checkpoint;
    checkpoint.config = SegModelConfig::from_map(archive.config);
    checkpoint.seed = get_u64(archive.config, "seed", 0);
    checkpoint.history = archive.history;
    checkpoint.model = UNet(checkpoint.config);
    load_module(*checkpoint.model, archive.weights);
    checkpoint.model->eval();
    return checkpoint;
}

}  // namespace lednet::seg
