#include "lednet/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lednet/classifier.hpp"
#include "lednet/error.hpp"
#include "lednet/image_io.hpp"
#include "lednet/localizer.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/random.hpp"
#include "lednet/report.hpp"
#include "lednet/synthetic.hpp"
#include "lednet/tensor.hpp"
#include "lednet/transforms.hpp"

namespace lednet::pipeline {
namespace fs = std::filesystem;
namespace {

constexpr const char* kSidecarHeader =
    "source_path,overlay_path,components_before,components_after,skipped_reason";

/// Grayscale, histogram-equalized and resized to the localizer's input size.
ImageGrid localizer_input(const ImageGrid& image, const seg::SegModelConfig& config)
{
    auto gray = data::equalize_histogram(to_grayscale(image));
    gray = data::resize(gray, config.height, config.width);
    return config.in_channels == 1 ? gray : replicate_channels(gray, config.in_channels);
}

void log_epoch(std::ostream& log, const std::string& tag, const MetricsRecord& r)
{
    log << tag << " epoch " << r.epoch << ' ' << r.phase << " loss=" << format_real(r.loss)
        << " accuracy=" << format_real(r.accuracy);
    if (r.iou) log << " iou=" << format_real(*r.iou);
    if (r.dice) log << " dice=" << format_real(*r.dice);
    log << '\n';
}

void ensure_synthetic_studies(const ExperimentConfig& config, std::ostream& log)
{
    if (fs::exists(config.paths.manifest)) return;
    log << "generating " << config.synthetic.studies << " synthetic studies under "
        << config.paths.image_root.string() << '\n';
    synth::StudyOptions options;
    options.outside_clutter = config.synthetic.outside_clutter;
    options.distractors = config.synthetic.distractors;
    synth::write_synthetic_chexpert(config.paths.image_root, config.paths.manifest,
                                    config.synthetic.studies, mix_seed(config.seed, 5),
                                    config.synthetic.image_size, options);
}

std::string csv_field(const std::string& value)
{
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (const char ch : value) {
        if (ch == '"') out += '"';
        out += ch == '\n' ? ' ' : ch;
    }
    return out + '"';
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    return fields;
}

data::DatasetManifest frontal_manifest(const ExperimentConfig& config)
{
    if (!fs::exists(config.paths.manifest)) {
        throw ConfigError("manifest not found: " + config.paths.manifest.string());
    }
    return data::filter_frontal(data::read_manifest(config.paths.manifest));
}

bool same_partition(const data::SplitAssignment& a, const data::SplitAssignment& b)
{
    return a.seed == b.seed && a.train == b.train && a.val == b.val && a.test == b.test;
}

/// The split shared by both arms: written on first use, verified afterwards.
data::SplitAssignment shared_split(const ExperimentConfig& config, std::size_t n)
{
    const auto computed = data::split(n, config.seed);
    const auto path = split_path(config);
    if (fs::exists(path)) {
        const auto stored = data::read_split(path);
        if (!same_partition(stored, computed)) {
            throw DataError("split file " + path.string() +
                            " does not match the manifest and seed of this run");
        }
    } else {
        data::write_split(path, computed, "config_hash=" + config.hash_hex());
    }
    return computed;
}

cls::FileSource arm_source(const ExperimentConfig& config, Arm arm,
                           const data::DatasetManifest& manifest)
{
    std::vector<cls::FileSource::Entry> entries;
    entries.reserve(manifest.records.size());
    for (const auto& record : manifest.records) {
        const fs::path path = arm == Arm::Original ? config.paths.image_root / record.path
                                                   : overlay_path_for(config, record.path);
        entries.push_back({path, data::clean_labels(record.labels)});
    }
    return cls::FileSource(std::move(entries), config.classifier.height, config.classifier.width);
}

}  // namespace

const char* arm_name(Arm arm) noexcept
{
    return arm == Arm::Original ? "original" : "overlay";
}

Arm parse_arm(const std::string& name)
{
    if (name == "original") return Arm::Original;
    if (name == "overlay") return Arm::Overlay;
    throw ConfigError("unknown arm '" + name + "' (expected original or overlay)");
}

fs::path localizer_checkpoint_path(const ExperimentConfig& config)
{
    return config.paths.checkpoint_dir / "localizer.ckpt";
}

fs::path localizer_history_path(const ExperimentConfig& config)
{
    return config.paths.checkpoint_dir / "localizer_history.csv";
}

fs::path classifier_checkpoint_path(const ExperimentConfig& config, Arm arm)
{
    return config.paths.checkpoint_dir / (std::string("classifier_") + arm_name(arm) + ".ckpt");
}

fs::path history_path(const fs::path& report_dir, Arm arm)
{
    return report_dir / (std::string("history_") + arm_name(arm) + ".csv");
}

fs::path test_summary_path(const fs::path& report_dir, Arm arm)
{
    return report_dir / (std::string("test_") + arm_name(arm) + ".csv");
}

fs::path split_path(const ExperimentConfig& config)
{
    return config.paths.report_dir / "split.csv";
}

fs::path sidecar_path(const ExperimentConfig& config)
{
    return config.paths.report_dir / "overlay_sidecar.csv";
}

fs::path overlay_path_for(const ExperimentConfig& config, const std::string& record_path)
{
    fs::path relative(record_path);
    relative.replace_extension(".png");
    return config.paths.overlay_dir / relative;
}

fs::path cmd_localize_train(const ExperimentConfig& config, bool synthetic, std::ostream& log)
{
    config.validate();
    configure_determinism();
    const auto& seg_config = config.localizer;

    std::vector<seg::SegSample> samples;
    if (synthetic) {
        const int size = config.synthetic.image_size;
        for (std::size_t i = 0; i < config.synthetic.seg_pairs; ++i) {
            auto [image, mask] = synth::generate_synthetic_pair(
                mix_seed(config.seed, 100 + i), size, size, {config.synthetic.distractors});
            samples.push_back({localizer_input(image, seg_config),
                               data::resize_mask(mask, seg_config.height, seg_config.width)});
        }
    } else {
        const auto& p = config.paths;
        for (const auto& dir : {p.seg_image_dir, p.seg_left_mask_dir, p.seg_right_mask_dir}) {
            if (!fs::is_directory(dir)) {
                throw ConfigError("segmentation data directory not found: " + dir.string() +
                                  " (pass --synthetic to generate data)");
            }
        }
        const auto pairing =
            data::pair_segmentation_files(p.seg_image_dir, p.seg_left_mask_dir, p.seg_right_mask_dir);
        for (const auto& stem : pairing.unmatched) log << "no left/right masks for " << stem << '\n';
        for (const auto& pair : pairing.pairs) {
            const auto image = io::load_image_native(pair.image);
            const auto mask = mask::combine(mask::read_mask(pair.left_mask), mask::read_mask(pair.right_mask));
            samples.push_back({localizer_input(image, seg_config),
                               data::resize_mask(mask, seg_config.height, seg_config.width)});
        }
    }
    if (samples.empty()) throw DataError("no segmentation training pairs available");
    log << "training localizer on " << samples.size() << " pairs\n";

    auto model = seg::build_seg_model(seg_config, config.seed);
    seg::SegTrainOptions options;
    options.val_fraction = config.seg_val_fraction;
    options.seed = config.seed;
    options.on_epoch = [&](const MetricsRecord& r) { log_epoch(log, "localizer", r); };
    const auto checkpoint = seg::train_localizer(model, samples, seg_config, options);

    const auto path = localizer_checkpoint_path(config);
    seg::save_checkpoint(path, checkpoint);
    write_history(localizer_history_path(config), checkpoint.history, HistoryLayout::Segmentation,
                  config.provenance());
    log << "wrote " << path.string() << '\n';
    return path;
}

std::vector<OverlayRow> cmd_overlay(const ExperimentConfig& config, bool synthetic, std::ostream& log)
{
    config.validate();
    configure_determinism();
    if (synthetic) ensure_synthetic_studies(config, log);
    const auto ckpt_path = localizer_checkpoint_path(config);
    if (!fs::exists(ckpt_path)) {
        throw ConfigError("localizer checkpoint not found: " + ckpt_path.string() +
                          " (run localize-train first)");
    }
    const auto checkpoint = seg::load_seg_checkpoint(ckpt_path);
    const auto manifest = frontal_manifest(config);
    fs::create_directories(config.paths.overlay_dir);

    std::vector<OverlayRow> rows;
    for (const auto& record : manifest.records) {
        OverlayRow row;
        row.source_path = record.path;
        ImageGrid image;
        try {
            image = io::load_image(config.paths.image_root / record.path);
        } catch (const Error& e) {
            row.skipped_reason = e.what();
            log << "skipping " << record.path << ": " << e.what() << '\n';
            rows.push_back(std::move(row));
            continue;
        }

        const std::vector<ImageGrid> input{localizer_input(image, checkpoint.config)};
        auto mask = seg::predict_masks(checkpoint, input, config.threshold).front();
        row.components_before = static_cast<int>(mask::connected_components(mask).size());
        if (config.retain_two) mask = mask::retain_two_regions(mask);
        if (config.mirror_fill) mask = mask::mirror_fill(mask);
        row.components_after = static_cast<int>(mask::connected_components(mask).size());

        mask = data::resize_mask(mask, image.height, image.width);
        const auto overlaid = mask::overlay(image, mask);
        for (std::size_t i = 0; i < overlaid.data.size(); ++i) {
            if (overlaid.data[i] > image.data[i]) {
                throw Error("overlay brightened a pixel of " + record.path);
            }
        }
        const auto out_path = overlay_path_for(config, record.path);
        fs::path mask_rel(record.path);
        mask_rel.replace_extension(".png");
        io::write_image(out_path, overlaid);
        mask::write_mask(config.paths.mask_dir / mask_rel, mask);
        row.overlay_path = fs::relative(out_path, config.paths.overlay_dir).generic_string();
        rows.push_back(std::move(row));
    }
    write_sidecar(sidecar_path(config), rows);
    // Provenance line for the sidecar is prepended separately so read_sidecar
    // stays format-agnostic.
    {
        std::ifstream in(sidecar_path(config), std::ios::binary);
        std::stringstream body;
        body << in.rdbuf();
        in.close();
        std::ofstream out(sidecar_path(config), std::ios::binary);
        out << "# " << config.provenance() << '\n' << body.str();
    }
    log << "overlaid " << rows.size() << " frontal records\n";
    return rows;
}

void write_sidecar(const fs::path& path, const std::vector<OverlayRow>& rows)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write sidecar: " + path.string());
    out << kSidecarHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.source_path) << ',' << csv_field(r.overlay_path) << ','
            << r.components_before << ',' << r.components_after << ',' << csv_field(r.skipped_reason)
            << '\n';
    }
}

std::vector<OverlayRow> read_sidecar(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sidecar: " + path.string());
    std::vector<OverlayRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != kSidecarHeader) throw ParseError("line " + std::to_string(line_no) + ": bad sidecar header");
            header = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 5) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 sidecar columns");
        }
        OverlayRow row{f[0], f[1], 0, 0, f[4]};
        try {
            row.components_before = std::stoi(f[2]);
            row.components_after = std::stoi(f[3]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad component count");
        }
        rows.push_back(std::move(row));
    }
    if (!header) throw ParseError("sidecar has no header: " + path.string());
    return rows;
}

ArmResult cmd_classify_train(const ExperimentConfig& config, Arm arm, bool synthetic, std::ostream& log)
{
    config.validate();
    configure_determinism();
    if (synthetic) ensure_synthetic_studies(config, log);
    if (arm == Arm::Overlay && !fs::is_directory(config.paths.overlay_dir)) {
        throw ConfigError("overlay directory not found: " + config.paths.overlay_dir.string() +
                          " (run overlay first)");
    }
    const auto manifest = frontal_manifest(config);
    const auto split = shared_split(config, manifest.records.size());
    const auto source = arm_source(config, arm, manifest);
    log << "training " << arm_name(arm) << " arm: " << split.train.size() << " train, "
        << split.val.size() << " val, " << split.test.size() << " test\n";

    auto model = cls::build_classifier(config.classifier, config.seed);
    cls::ClsTrainOptions options;
    options.seed = config.seed;
    const std::string tag = std::string("classifier[") + arm_name(arm) + "]";
    options.on_epoch = [&](const MetricsRecord& r) { log_epoch(log, tag, r); };
    const auto checkpoint = cls::train_classifier(model, source, config.classifier, split, options);

    ArmResult result;
    result.history = checkpoint.history;
    cls::save_checkpoint(classifier_checkpoint_path(config, arm), checkpoint);
    const auto& report_dir = config.paths.report_dir;
    const std::string provenance = config.provenance() + " arm=" + arm_name(arm);
    write_history(history_path(report_dir, arm), checkpoint.history, HistoryLayout::Classification,
                  provenance);
    if (!split.test.empty()) {
        result.test = cls::evaluate(checkpoint, source, split.test);
        result.test.epoch = config.classifier.epochs;
        write_history(test_summary_path(report_dir, arm), {result.test},
                      HistoryLayout::Classification, provenance);
        log_epoch(log, tag, result.test);
    }
    return result;
}

MetricsRecord cmd_evaluate(const ExperimentConfig& config, Arm arm, data::Partition partition,
                           std::ostream& log)
{
    config.validate();
    configure_determinism();
    const auto ckpt_path = classifier_checkpoint_path(config, arm);
    if (!fs::exists(ckpt_path)) {
        throw ConfigError("classifier checkpoint not found: " + ckpt_path.string());
    }
    const auto checkpoint = cls::load_cls_checkpoint(ckpt_path);
    const auto manifest = frontal_manifest(config);
    const auto split = shared_split(config, manifest.records.size());
    const auto& indices = split.indices(partition);
    if (indices.empty()) {
        throw DataError(std::string(data::partition_name(partition)) + " partition is empty");
    }
    const auto source = arm_source(config, arm, manifest);
    auto record = cls::evaluate(checkpoint, source, indices);
    record.phase = partition == data::Partition::Train ? "train"
                   : partition == data::Partition::Val ? "val"
                                                       : "test";
    record.epoch = checkpoint.config.epochs;
    log << arm_name(arm) << ' ' << record.phase << " loss=" << format_real(record.loss)
        << " accuracy=" << format_real(record.accuracy) << '\n';
    return record;
}

ReportFiles cmd_report(const fs::path& report_dir, const std::vector<Arm>& arms)
{
    if (arms.empty()) throw ConfigError("compare-report needs at least one arm");
    std::vector<report::ArmSeries> series;
    for (const auto arm : arms) {
        const auto path = history_path(report_dir, arm);
        if (!fs::exists(path)) {
            throw DataError(std::string("missing history for arm '") + arm_name(arm) + "': " +
                            path.string());
        }
        report::ArmSeries s;
        s.name = arm_name(arm);
        try {
            s.history = read_history(path, &s.provenance);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        const auto test_path = test_summary_path(report_dir, arm);
        if (fs::exists(test_path)) {
            const auto rows = read_history(test_path);
            if (!rows.empty()) s.test = rows.front();
        }
        series.push_back(std::move(s));
    }

    ReportFiles files{report_dir / "accuracy.png", report_dir / "loss.png", report_dir / "table.txt"};
    report::render_curve(files.accuracy_plot, series, report::Metric::Accuracy);
    report::render_curve(files.loss_plot, series, report::Metric::Loss);
    std::ofstream out(files.table, std::ios::binary);
    if (!out) throw IoError("cannot write table: " + files.table.string());
    out << report::render_table(series);
    return files;
}

ReportFiles cmd_compare(const ExperimentConfig& config, bool synthetic, std::ostream& log)
{
    cmd_classify_train(config, Arm::Original, synthetic, log);
    cmd_classify_train(config, Arm::Overlay, synthetic, log);
    return cmd_report(config.paths.report_dir, {Arm::Original, Arm::Overlay});
}

}  // namespace lednet::pipeline
