#include "lednet/classifier.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "lednet/checkpoint.hpp"
#include "lednet/config.hpp"
#include "lednet/error.hpp"
#include "lednet/image_io.hpp"
#include "lednet/metrics_torch.hpp"
#include "lednet/random.hpp"
#include "lednet/tensor.hpp"
#include "lednet/transforms.hpp"

namespace lednet::cls {
namespace {

constexpr const char* kKind = "classifier";

torch::nn::GroupNorm group_norm(int channels)
{
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::gcd(channels, 8), channels));
}

torch::nn::Conv2d conv(int in, int out, int kernel, int stride = 1, int padding = 0)
{
    return torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false));
}

std::string join_ints(const std::vector<int>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& key)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(key + ": '" + text + "' is not a comma-separated integer list");
        }
    }
    return out;
}

torch::Tensor labels_tensor(const std::vector<ClsSample>& samples)
{
    const auto n = static_cast<std::int64_t>(samples.size());
    const auto k = static_cast<std::int64_t>(data::kObservationCount);
    auto out = torch::empty({n, k}, torch::kFloat32);
    auto acc = out.accessor<float, 2>();
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < k; ++j) acc[i][j] = samples[i].labels[j] ? 1.0f : 0.0f;
    }
    return out;
}

void check_sample(const ClsSample& sample, const ClsModelConfig& config)
{
    const auto& im = sample.image;
    if (im.channels != config.channels || im.height != config.height || im.width != config.width) {
        throw DimensionError("classifier expects " + std::to_string(config.channels) + "x" +
                             std::to_string(config.height) + "x" + std::to_string(config.width) +
                             " images, got " + im.shape_string());
    }
}

struct PhaseTotals {
    double loss = 0.0;  // summed per-element BCE
    std::int64_t matches = 0;
    std::int64_t entries = 0;

    void add(const torch::Tensor& probs, const torch::Tensor& target)
    {
        loss += metrics::bce_elementwise(probs, target).to(torch::kFloat64).sum().item<double>();
        matches += metrics::rounded_matches(probs, target);
        entries += probs.numel();
    }

    [[nodiscard]] MetricsRecord record(int epoch, const char* phase) const
    {
        MetricsRecord r;
        r.epoch = epoch;
        r.phase = phase;
        r.loss = loss / static_cast<double>(entries);
        r.accuracy = static_cast<double>(matches) / static_cast<double>(entries);
        return r;
    }
};

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

void check_indices(std::span<const std::size_t> indices, std::size_t size, const char* what)
{
    for (const auto i : indices) {
        if (i >= size) {
            throw DataError(std::string(what) + " index " + std::to_string(i) +
                            " out of range for " + std::to_string(size) + " samples");
        }
    }
}

}  // namespace

const char* backbone_name(Backbone b) noexcept
{
    return b == Backbone::Dense121 ? "dense-121" : "dense-tiny";
}

Backbone parse_backbone(const std::string& name)
{
    if (name == "dense-121") return Backbone::Dense121;
    if (name == "dense-tiny") return Backbone::DenseTiny;
    throw ConfigError("unknown backbone '" + name + "' (expected dense-121 or dense-tiny)");
}

ClsModelConfig ClsModelConfig::dense121()
{
    ClsModelConfig c;
    c.backbone = Backbone::Dense121;
    c.growth_rate = 32;
    c.block_layers = {6, 12, 24, 16};
    c.init_features = 64;
    c.bottleneck_width = 4;
    c.height = data::kClassifierImageSize;
    c.width = data::kClassifierImageSize;
    return c;
}

ClsModelConfig ClsModelConfig::dense_tiny()
{
    return ClsModelConfig{};
}

void ClsModelConfig::validate() const
{
    if (block_layers.empty()) throw ConfigError("classifier.blocks must list at least one block");
    for (const int n : block_layers) {
        if (n < 1) throw ConfigError("classifier.blocks entries must be >= 1, got " + join_ints(block_layers));
    }
    if (backbone == Backbone::Dense121 &&
        (block_layers != std::vector<int>{6, 12, 24, 16} || growth_rate != 32)) {
        throw ConfigError("dense-121 requires blocks 6,12,24,16 and growth rate 32");
    }
    if (growth_rate < 1) throw ConfigError("classifier.growth_rate must be >= 1");
    if (init_features < 1) throw ConfigError("classifier.init_features must be >= 1");
    if (bottleneck_width < 1) throw ConfigError("classifier.bottleneck_width must be >= 1");
    if (channels < 1) throw ConfigError("classifier.channels must be >= 1");
    if (label_count != static_cast<int>(data::kObservationCount)) {
        throw ConfigError("classifier.label_count must be 14, got " + std::to_string(label_count));
    }
    const int stem_stride = backbone == Backbone::Dense121 ? 4 : 1;
    const int min_side = stem_stride << (block_layers.size() - 1);
    if (height < min_side || width < min_side) {
        throw ConfigError("classifier input " + std::to_string(height) + "x" + std::to_string(width) +
                          " is smaller than the backbone's downsampling factor " +
                          std::to_string(min_side));
    }
    if (!(learning_rate >= 0.0)) throw ConfigError("classifier.learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("classifier.batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("classifier.epochs must be >= 1");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
        throw ConfigError("classifier.flip_probability must lie in [0,1]");
    }
}

std::vector<int> ClsModelConfig::block_output_channels() const
{
    std::vector<int> out;
    int channels_in = init_features;
    for (std::size_t i = 0; i < block_layers.size(); ++i) {
        const int channels_out = channels_in + growth_rate * block_layers[i];
        out.push_back(channels_out);
        channels_in = channels_out / 2;
    }
    return out;
}

int ClsModelConfig::feature_length() const
{
    return block_output_channels().back();
}

std::map<std::string, std::string> ClsModelConfig::to_map() const
{
    return {{"backbone", backbone_name(backbone)},
            {"growth_rate", std::to_string(growth_rate)},
            {"blocks", join_ints(block_layers)},
            {"init_features", std::to_string(init_features)},
            {"bottleneck_width", std::to_string(bottleneck_width)},
            {"height", std::to_string(height)},
            {"width", std::to_string(width)},
            {"channels", std::to_string(channels)},
            {"label_count", std::to_string(label_count)},
            {"learning_rate", format_real(learning_rate)},
            {"batch_size", std::to_string(batch_size)},
            {"epochs", std::to_string(epochs)},
            {"flip_probability", format_real(flip_probability)}};
}

ClsModelConfig ClsModelConfig::from_map(const std::map<std::string, std::string>& kv)
{
    const auto backbone = parse_backbone(get_string(kv, "backbone", "dense-tiny"));
    ClsModelConfig c = backbone == Backbone::Dense121 ? dense121() : dense_tiny();
    c.growth_rate = get_int(kv, "growth_rate", c.growth_rate);
    if (const auto it = kv.find("blocks"); it != kv.end()) c.block_layers = parse_ints(it->second, "blocks");
    c.init_features = get_int(kv, "init_features", c.init_features);
    c.bottleneck_width = get_int(kv, "bottleneck_width", c.bottleneck_width);
    c.height = get_int(kv, "height", c.height);
    c.width = get_int(kv, "width", c.width);
    c.channels = get_int(kv, "channels", c.channels);
    c.label_count = get_int(kv, "label_count", c.label_count);
    c.learning_rate = get_real(kv, "learning_rate", c.learning_rate);
    c.batch_size = get_int(kv, "batch_size", c.batch_size);
    c.epochs = get_int(kv, "epochs", c.epochs);
    c.flip_probability = get_real(kv, "flip_probability", c.flip_probability);
    return c;
}

DenseLayerImpl::DenseLayerImpl(int in_channels, int growth_rate, int bottleneck_width)
{
    const int mid = bottleneck_width * growth_rate;
    body_ = register_module("body", torch::nn::Sequential(group_norm(in_channels), torch::nn::ReLU(),
                                                          conv(in_channels, mid, 1), group_norm(mid),
                                                          torch::nn::ReLU(),
                                                          conv(mid, growth_rate, 3, 1, 1)));
}

torch::Tensor DenseLayerImpl::forward(const torch::Tensor& x)
{
    return torch::cat({x, body_->forward(x)}, 1);
}

TransitionImpl::TransitionImpl(int in_channels, int out_channels)
{
    body_ = register_module(
        "body", torch::nn::Sequential(group_norm(in_channels), torch::nn::ReLU(),
                                      conv(in_channels, out_channels, 1),
                                      torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(2).stride(2))));
}

torch::Tensor TransitionImpl::forward(const torch::Tensor& x)
{
    return body_->forward(x);
}

DenseNetImpl::DenseNetImpl(const ClsModelConfig& config)
{
    config.validate();
    stem_ = torch::nn::Sequential();
    if (config.backbone == Backbone::Dense121) {
        stem_->push_back(conv(config.channels, config.init_features, 7, 2, 3));
        stem_->push_back(group_norm(config.init_features));
        stem_->push_back(torch::nn::ReLU());
        stem_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));
    } else {
        stem_->push_back(conv(config.channels, config.init_features, 3, 1, 1));
    }

    blocks_ = torch::nn::Sequential();
    int channels = config.init_features;
    for (std::size_t b = 0; b < config.block_layers.size(); ++b) {
        for (int l = 0; l < config.block_layers[b]; ++l) {
            blocks_->push_back("denseblock" + std::to_string(b + 1) + "_layer" + std::to_string(l + 1),
                               DenseLayer(channels + l * config.growth_rate, config.growth_rate,
                                          config.bottleneck_width));
        }
        channels += config.block_layers[b] * config.growth_rate;
        block_channels_.push_back(channels);
        if (b + 1 != config.block_layers.size()) {
            blocks_->push_back("transition" + std::to_string(b + 1), Transition(channels, channels / 2));
            channels /= 2;
        }
    }
    tail_ = torch::nn::Sequential(group_norm(channels), torch::nn::ReLU());
    head_ = torch::nn::Linear(channels, config.label_count);

    register_module("stem", stem_);
    register_module("blocks", blocks_);
    register_module("tail", tail_);
    register_module("head", head_);
}

torch::Tensor DenseNetImpl::features(const torch::Tensor& x)
{
    auto h = tail_->forward(blocks_->forward(stem_->forward(x)));
    return torch::adaptive_avg_pool2d(h, {1, 1}).flatten(1);
}

torch::Tensor DenseNetImpl::forward(const torch::Tensor& x)
{
    return torch::sigmoid(head_->forward(features(x)));
}

DenseNet build_classifier(const ClsModelConfig& config, std::uint64_t seed)
{
    config.validate();
    torch::manual_seed(seed);
    DenseNet model(config);
    // Reference DenseNet init; the libtorch defaults leave some seeds stuck.
    torch::NoGradGuard no_grad;
    for (auto& module : model->modules(/*include_self=*/false)) {
        if (auto* c = module->as<torch::nn::Conv2d>()) {
            torch::nn::init::kaiming_normal_(c->weight);
        } else if (auto* g = module->as<torch::nn::GroupNorm>()) {
            torch::nn::init::ones_(g->weight);
            torch::nn::init::zeros_(g->bias);
        } else if (auto* l = module->as<torch::nn::Linear>()) {
            torch::nn::init::zeros_(l->bias);
        }
    }
    return model;
}

FileSource::FileSource(std::vector<Entry> entries, int height, int width)
    : entries_(std::move(entries)), height_(height), width_(width)
{
}

ClsSample FileSource::get(std::size_t index) const
{
    const auto& entry = entries_.at(index);
    ClsSample sample;
    sample.image = data::resize(io::load_image(entry.path), height_, width_);
    sample.labels = entry.labels;
    return sample;
}

ClsCheckpoint train_classifier(DenseNet model, const SampleSource& source,
                               const ClsModelConfig& config, const data::SplitAssignment& split,
                               const ClsTrainOptions& options)
{
    config.validate();
    if (split.train.empty()) throw DataError("classifier training partition is empty");
    if (split.val.empty()) throw DataError("classifier validation partition is empty");
    check_indices(split.train, source.size(), "train");
    check_indices(split.val, source.size(), "val");

    torch::optim::Adam optimizer(model->parameters(),
                                 torch::optim::AdamOptions(config.learning_rate));
    Rng order_rng(mix_seed(options.seed, 11));
    Rng flip_rng(mix_seed(options.seed, 12));

    ClsCheckpoint checkpoint{config, model, {}, options.seed};
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        model->train();
        auto order = split.train;
        shuffle(std::span<std::size_t>(order), order_rng);
        PhaseTotals train;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            ++batch_no;
            const auto count = std::min(batch_size, order.size() - start);
            std::vector<ClsSample> batch;
            std::vector<ImageGrid> images;
            batch.reserve(count);
            images.reserve(count);
            for (std::size_t i = start; i < start + count; ++i) {
                auto sample = source.get(order[i]);
                check_sample(sample, config);
                auto [image, labels] =
                    data::random_hflip(sample.image, sample.labels, config.flip_probability, flip_rng);
                images.push_back(std::move(image));
                batch.push_back({ImageGrid{}, labels});
            }
            const auto x = to_batch(images);
            const auto y = labels_tensor(batch);
            optimizer.zero_grad();
            const auto probs = model->forward(x);
            const auto loss = metrics::bce_loss(probs, y);
            if (!std::isfinite(loss.item<double>())) {
                throw TrainingError("non-finite classification loss at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(batch_no));
            }
            loss.backward();
            optimizer.step();
            train.add(probs.detach(), y);
        }
        checkpoint.history.push_back(train.record(epoch, "train"));
        if (options.on_epoch) options.on_epoch(checkpoint.history.back());

        auto val = evaluate(checkpoint, source, split.val);
        val.epoch = epoch;
        val.phase = "val";
        checkpoint.history.push_back(val);
        if (options.on_epoch) options.on_epoch(checkpoint.history.back());
    }
    model->eval();
    return checkpoint;
}

MetricsRecord evaluate_predictions(const BatchPredictor& predict, const SampleSource& source,
                                   std::span<const std::size_t> indices, int batch_size)
{
    std::vector<std::size_t> owned;
    if (indices.empty()) {
        owned = all_indices(source.size());
        indices = owned;
    }
    if (indices.empty()) throw DataError("cannot evaluate an empty sample stream");
    check_indices(indices, source.size(), "evaluation");

    torch::NoGradGuard no_grad;
    PhaseTotals totals;
    const auto step = static_cast<std::size_t>(std::max(1, batch_size));
    for (std::size_t start = 0; start < indices.size(); start += step) {
        const auto count = std::min(step, indices.size() - start);
        std::vector<ClsSample> batch;
        std::vector<ImageGrid> images;
        for (std::size_t i = start; i < start + count; ++i) {
            auto sample = source.get(indices[i]);
            images.push_back(std::move(sample.image));
            batch.push_back({ImageGrid{}, sample.labels});
        }
        const auto y = labels_tensor(batch);
        totals.add(predict(to_batch(images)), y);
    }
    return totals.record(0, "test");
}

MetricsRecord evaluate(const ClsCheckpoint& checkpoint, const SampleSource& source,
                       std::span<const std::size_t> indices)
{
    auto model = checkpoint.model;
    const bool was_training = model->is_training();
    model->eval();
    const auto& config = checkpoint.config;
    auto record = evaluate_predictions(
        [&](const torch::Tensor& x) {
            if (x.size(1) != config.channels || x.size(2) != config.height || x.size(3) != config.width) {
                std::ostringstream msg;
                msg << "classifier expects (B," << config.channels << ',' << config.height << ','
                    << config.width << ") input, got " << x.sizes();
                throw DimensionError(msg.str());
            }
            return model->forward(x);
        },
        source, indices, config.batch_size);
    if (was_training) model->train();
    return record;
}

FeatureVector extract_features(const ClsCheckpoint& checkpoint, const ImageGrid& image)
{
    check_sample({image, {}}, checkpoint.config);
    auto model = checkpoint.model;
    model->eval();
    torch::NoGradGuard no_grad;
    const auto f = model->features(to_tensor(image).unsqueeze(0)).squeeze(0).contiguous();
    return FeatureVector(f.data_ptr<float>(), f.data_ptr<float>() + f.numel());
}

FusionHeadImpl::FusionHeadImpl(int original_length, int overlay_length, int label_count)
    : original_length_(original_length), overlay_length_(overlay_length)
{
    if (original_length < 1 || overlay_length < 1 || label_count < 1) {
        throw ConfigError("fusion head arities must be positive");
    }
    linear_ = register_module("linear",
                              torch::nn::Linear(original_length + overlay_length, label_count));
}

torch::Tensor FusionHeadImpl::forward(const torch::Tensor& original, const torch::Tensor& overlay)
{
    if (original.size(-1) != original_length_ || overlay.size(-1) != overlay_length_) {
        throw DimensionError("fusion head expects feature lengths (" +
                             std::to_string(original_length_) + ", " +
                             std::to_string(overlay_length_) + "), got (" +
                             std::to_string(original.size(-1)) + ", " +
                             std::to_string(overlay.size(-1)) + ")");
    }
    return torch::sigmoid(linear_->forward(torch::cat({original, overlay}, -1)));
}

std::vector<double> fuse_predict(const FeatureVector& original, const FeatureVector& overlay,
                                 FusionHead& head)
{
    torch::NoGradGuard no_grad;
    auto to_row = [](const FeatureVector& v) {
        return torch::from_blob(const_cast<float*>(v.data()), {1, static_cast<std::int64_t>(v.size())},
                                torch::kFloat32)
            .clone();
    };
    const auto out = head->forward(to_row(original), to_row(overlay)).to(torch::kFloat64).contiguous();
    return std::vector<double>(out.data_ptr<double>(), out.data_ptr<double>() + out.numel());
}

std::vector<MetricsRecord> train_fusion_head(FusionHead& head, const ClsCheckpoint& original_model,
                                             const ClsCheckpoint& overlay_model,
                                             const SampleSource& original,
                                             const SampleSource& overlay,
                                             const data::SplitAssignment& split,
                                             const FusionTrainOptions& options)
{
    if (original.size() != overlay.size()) {
        throw DimensionError("fusion streams differ in length (" + std::to_string(original.size()) +
                             " vs " + std::to_string(overlay.size()) + ")");
    }
    if (split.train.empty() || split.val.empty()) {
        throw DataError("fusion training needs non-empty train and val partitions");
    }
    check_indices(split.train, original.size(), "train");
    check_indices(split.val, original.size(), "val");

    // Frozen backbones: features are computed once.
    auto featurize = [](const ClsCheckpoint& ckpt, const SampleSource& source) {
        auto model = ckpt.model;
        model->eval();
        torch::NoGradGuard no_grad;
        std::vector<torch::Tensor> rows;
        for (std::size_t i = 0; i < source.size(); ++i) {
            rows.push_back(model->features(to_tensor(source.get(i).image).unsqueeze(0)));
        }
        return torch::cat(rows, 0);
    };
    const auto f_orig = featurize(original_model, original);
    const auto f_over = featurize(overlay_model, overlay);
    std::vector<ClsSample> label_rows;
    for (std::size_t i = 0; i < original.size(); ++i) label_rows.push_back({ImageGrid{}, original.get(i).labels});
    const auto labels = labels_tensor(label_rows);

    torch::optim::Adam optimizer(head->parameters(), torch::optim::AdamOptions(options.learning_rate));
    Rng rng(mix_seed(options.seed, 13));
    auto pick = [](const torch::Tensor& t, std::span<const std::size_t> idx) {
        std::vector<std::int64_t> v(idx.begin(), idx.end());
        return t.index_select(0, torch::tensor(v, torch::kLong));
    };

    std::vector<MetricsRecord> history;
    const auto step = static_cast<std::size_t>(std::max(1, options.batch_size));
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        auto order = split.train;
        shuffle(std::span<std::size_t>(order), rng);
        PhaseTotals train;
        for (std::size_t start = 0; start < order.size(); start += step) {
            const std::span<const std::size_t> idx(order.data() + start,
                                                   std::min(step, order.size() - start));
            const auto y = pick(labels, idx);
            optimizer.zero_grad();
            const auto probs = head->forward(pick(f_orig, idx), pick(f_over, idx));
            const auto loss = metrics::bce_loss(probs, y);
            if (!std::isfinite(loss.item<double>())) {
                throw TrainingError("non-finite fusion loss at epoch " + std::to_string(epoch));
            }
            loss.backward();
            optimizer.step();
            train.add(probs.detach(), y);
        }
        history.push_back(train.record(epoch, "train"));

        torch::NoGradGuard no_grad;
        PhaseTotals val;
        val.add(head->forward(pick(f_orig, split.val), pick(f_over, split.val)), pick(labels, split.val));
        history.push_back(val.record(epoch, "val"));
    }
    return history;
}

void save_checkpoint(const std::filesystem::path& path, const ClsCheckpoint& checkpoint)
{
    CheckpointArchive archive;
    archive.kind = kKind;
    archive.config = checkpoint.config.to_map();
    archive.config["seed"] = std::to_string(checkpoint.seed);
    archive.history = checkpoint.history;
    archive.layout = HistoryLayout::Classification;
    archive.weights = save_module(*checkpoint.model);
    write_archive(path, archive);
}

ClsCheckpoint load_cls_checkpoint(const std::filesystem::path& path)
{
    const auto archive = read_archive(path);
    if (archive.kind != kKind) {
        throw FormatError(path.string() + " holds a '" + archive.kind + "' checkpoint, expected '" +
                          kKind + "'");
    }
    ClsCheckpoint checkpoint;
    checkpoint.config = ClsModelConfig::from_map(archive.config);
    checkpoint.seed = get_u64(archive.config, "seed", 0);
    checkpoint.history = archive.history;
    checkpoint.model = DenseNet(checkpoint.config);
    load_module(*checkpoint.model, archive.weights);
    checkpoint.model->eval();
    return checkpoint;
}

}  // namespace lednet::cls
