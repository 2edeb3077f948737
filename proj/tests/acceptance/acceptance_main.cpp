// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Optional arguments select criteria by name;
// `--workdir DIR` keeps the end-to-end run under DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "lednet/classifier.hpp"
#include "lednet/config.hpp"
#include "lednet/dataset.hpp"
#include "lednet/history.hpp"
#include "lednet/localizer.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/metrics.hpp"
#include "lednet/metrics_torch.hpp"
#include "lednet/random.hpp"
#include "lednet/synthetic.hpp"
#include "lednet/tensor.hpp"

namespace fs = std::filesystem;
using lednet::BinaryMask;
using lednet::Rng;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1e", v);
    return buf;
}

std::string fmt(double v, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

BinaryMask random_mask(Rng& rng, int h, int w, double density)
{
    BinaryMask m(h, w);
    for (auto& v : m.values) v = lednet::uniform01(rng) < density ? 1 : 0;
    return m;
}

// Random disks, sometimes with speckle: from zero to a dozen or more parts.
BinaryMask blobby_mask(Rng& rng, int size)
{
    BinaryMask m(size, size);
    const auto disks = lednet::uniform_below(rng, 6);
    for (std::uint64_t k = 0; k < disks; ++k) {
        const int cy = static_cast<int>(lednet::uniform_below(rng, size));
        const int cx = static_cast<int>(lednet::uniform_below(rng, size));
        const int rad = 1 + static_cast<int>(lednet::uniform_below(rng, 6));
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c)
                if ((r - cy) * (r - cy) + (c - cx) * (c - cx) <= rad * rad) m.at(r, c) = 1;
    }
    const double speckle = lednet::uniform_below(rng, 3) == 0 ? 0.01 * lednet::uniform01(rng) : 0.0;
    for (auto& v : m.values)
        if (lednet::uniform01(rng) < speckle) v = 1;
    return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b)
{
    for (std::size_t i = 0; i < a.values.size(); ++i)
        if (a.values[i] && !b.values[i]) return false;
    return true;
}

Outcome metric_oracle_suite()
{
    Rng rng(101);
    double worst = 0.0, worst_identity = 0.0;
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 1 + static_cast<int>(lednet::uniform_below(rng, 8));
        const int w = 1 + static_cast<int>(lednet::uniform_below(rng, 8));
        const double density = lednet::uniform01(rng);
        const auto a = random_mask(rng, h, w, density);
        const auto b = trial % 10 == 0 ? a : random_mask(rng, h, w, lednet::uniform01(rng));
        const double iou = lednet::metrics::iou(a, b);
        const double dice = lednet::metrics::dice(a, b);
        worst = std::max({worst, std::abs(iou - oracle::iou(a, b)), std::abs(dice - oracle::dice(a, b))});
        worst_identity = std::max(worst_identity, std::abs(dice - 2 * iou / (1 + iou)));

        const auto n = 1 + lednet::uniform_below(rng, 24);
        std::vector<double> p(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto pick = lednet::uniform_below(rng, 8);
            p[i] = pick == 0 ? 0.0 : pick == 1 ? 1.0 : pick == 2 ? 0.5 : lednet::uniform01(rng);
            y[i] = static_cast<double>(lednet::uniform_below(rng, 2));
        }
        const auto pair = lednet::metrics::ScorePair::make(p, y);
        const double bce = lednet::metrics::bce_loss(pair);
        worst = std::max(worst, std::abs(bce - oracle::bce(p, y)) / std::max(1.0, oracle::bce(p, y)));
        if (lednet::metrics::rounded_accuracy(pair) != oracle::accuracy(p, y)) ++mismatches;
    }
    const bool pass = worst <= 1e-12 && worst_identity <= 1e-12 && mismatches == 0;
    return {pass, "1000 random inputs; max |lib-oracle| " + sci(worst) +
                      ", max dice identity error " + sci(worst_identity) +
                      ", accuracy mismatches " + std::to_string(mismatches)};
}

Outcome mask_ops_suite()
{
    Rng rng(202);
    int retain_mismatch = 0, mirror_mismatch = 0, invariant_fail = 0;
    std::map<std::size_t, int> parts;
    for (int trial = 0; trial < 500; ++trial) {
        const auto m = blobby_mask(rng, 32);
        ++parts[std::min<std::size_t>(oracle::components(m).size(), 5)];

        const auto kept = lednet::mask::retain_two_regions(m);
        if (kept != oracle::retain_two(m)) ++retain_mismatch;
        const auto filled = lednet::mask::mirror_fill(kept);
        if (filled != oracle::mirror_fill(kept)) ++mirror_mismatch;

        const bool ok = subset(kept, m) && oracle::components(kept).size() <= 2 &&
                        lednet::mask::retain_two_regions(kept) == kept && subset(kept, filled) &&
                        (oracle::components(kept).size() != 1 || oracle::mirror(filled) == filled) &&
                        lednet::mask::reflect(lednet::mask::reflect(m)) == m;
        if (!ok) ++invariant_fail;
    }
    std::string histogram;
    for (auto [k, v] : parts) histogram += (histogram.empty() ? "" : " ") + std::to_string(k) + (k == 5 ? "+" : "") + ":" + std::to_string(v);
    return {retain_mismatch == 0 && mirror_mismatch == 0 && invariant_fail == 0,
            "500 random 32x32 masks (components " + histogram + "); retain mismatches " +
                std::to_string(retain_mismatch) + ", mirror mismatches " + std::to_string(mirror_mismatch) +
                ", invariant failures " + std::to_string(invariant_fail)};
}

Outcome label_policy_suite()
{
    using lednet::data::RawLabel;
    constexpr RawLabel kTokens[] = {RawLabel::Negative, RawLabel::Positive, RawLabel::Uncertain,
                                    RawLabel::Missing};
    int failures = 0;
    // Every token in every slot, other slots missing.
    for (std::size_t slot = 0; slot < lednet::data::kObservationCount; ++slot) {
        for (auto token : kTokens) {
            lednet::data::RawLabelVector raw;
            raw.fill(RawLabel::Missing);
            raw[slot] = token;
            const auto clean = lednet::data::clean_labels(raw);
            for (std::size_t j = 0; j < clean.size(); ++j) {
                const std::uint8_t want = j == slot && token == RawLabel::Positive ? 1 : 0;
                if (clean[j] != want) ++failures;
            }
        }
    }
    // Random combinations through a manifest round trip.
    Rng rng(303);
    lednet::data::DatasetManifest manifest;
    manifest.observations = lednet::data::default_observations();
    for (int i = 0; i < 2000; ++i) {
        lednet::data::ManifestRecord r;
        r.path = "p" + std::to_string(i) + "/view1_frontal.jpg";
        r.sex = i % 2 ? "Male" : "Female";
        r.age = std::to_string(i % 90);
        r.projection = i % 3 ? "AP" : "PA";
        r.view = i % 4 ? lednet::data::View::Frontal : lednet::data::View::Lateral;
        for (auto& l : r.labels) l = kTokens[lednet::uniform_below(rng, 4)];
        manifest.records.push_back(r);
    }
    std::stringstream csv;
    lednet::data::serialize_manifest(csv, manifest);
    const auto parsed = lednet::data::parse_manifest(csv);
    if (!(parsed == manifest)) ++failures;
    for (std::size_t i = 0; i < parsed.records.size(); ++i) {
        const auto clean = lednet::data::clean_labels(parsed.records[i].labels);
        for (std::size_t j = 0; j < clean.size(); ++j) {
            const std::uint8_t want = manifest.records[i].labels[j] == RawLabel::Positive ? 1 : 0;
            if (clean[j] != want) ++failures;
        }
        if (lednet::data::clean_labels(lednet::data::as_raw(clean)) != clean) ++failures;
    }
    return {failures == 0, "56 single-slot cases and 2000 sampled rows through parse/serialize; failures " +
                               std::to_string(failures)};
}

Outcome split_suite()
{
    int failures = 0;
    for (std::size_t n = 0; n <= 1000; ++n) {
        const auto s = lednet::data::split(n, 17);
        if (s.train.size() != n * 7 / 10 || s.val.size() != n * 2 / 10 ||
            s.test.size() != n - n * 7 / 10 - n * 2 / 10) {
            ++failures;
        }
        std::vector<std::size_t> all;
        for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i)
            if (all[i] != i) {
                ++failures;
                break;
            }
        if (all.size() != n || !(lednet::data::split(n, 17) == s)) ++failures;
    }
    const auto big = lednet::data::split(28629, 3);
    const bool example = big.train.size() == 20040 && big.val.size() == 5725 && big.test.size() == 2864;
    return {failures == 0 && example,
            "n in 0..1000 exact partitions and reruns; n=28629 -> (" + std::to_string(big.train.size()) +
                ", " + std::to_string(big.val.size()) + ", " + std::to_string(big.test.size()) +
                "); failures " + std::to_string(failures)};
}

Outcome segmentation()
{
    lednet::seg::SegModelConfig c;
    c.height = c.width = 64;
    c.depth = 3;
    c.batch_size = 8;
    c.epochs = 10;
    std::vector<lednet::seg::SegSample> data;
    for (int i = 0; i < 200; ++i) {
        auto [img, mask] = lednet::synth::generate_synthetic_pair(lednet::mix_seed(41, i), 64, 64);
        data.push_back({img, mask});
    }
    lednet::seg::SegTrainOptions opts;
    opts.seed = 41;
    const auto ckpt = lednet::seg::train_localizer(lednet::seg::build_seg_model(c, 41), data, c, opts);
    const auto& val = ckpt.history.back();

    // Fresh frames never seen in training or validation.
    std::vector<lednet::ImageGrid> images;
    std::vector<BinaryMask> truth;
    for (int i = 0; i < 50; ++i) {
        auto [img, mask] = lednet::synth::generate_synthetic_pair(lednet::mix_seed(42, i), 64, 64);
        images.push_back(img);
        truth.push_back(mask);
    }
    const auto predicted = lednet::seg::predict_masks(ckpt, images);
    double iou = 0, dice = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        iou += oracle::iou(predicted[i], truth[i]);
        dice += oracle::dice(predicted[i], truth[i]);
    }
    iou /= truth.size();
    dice /= truth.size();
    const bool pass = *val.iou >= 0.90 && *val.dice >= 0.94 && iou >= 0.90 && dice >= 0.94;
    return {pass, "200 pairs 64x64, depth 3, batch 8, 10 epochs; val IoU " + fmt(*val.iou) + " Dice " +
                      fmt(*val.dice) + "; 50 fresh frames IoU " + fmt(iou) + " Dice " + fmt(dice) +
                      " (need >= 0.90 / 0.94)"};
}

Outcome gradient_checks()
{
    lednet::seg::SegModelConfig sc;
    sc.height = sc.width = 16;
    sc.depth = 1;
    sc.base_channels = 4;
    auto unet = lednet::seg::build_seg_model(sc, 8);
    unet->to(torch::kFloat64);
    torch::manual_seed(8);
    const auto sx = torch::rand({2, 1, 16, 16}, torch::kFloat64);
    const auto sy = (torch::rand({2, 1, 16, 16}, torch::kFloat64) > 0.5).to(torch::kFloat64);
    const auto seg = gradcheck::check(
        *unet, [&] { return lednet::metrics::bce_loss(unet->forward(sx), sy); }, 30, 8);

    auto cc = lednet::cls::ClsModelConfig::dense_tiny();
    cc.height = cc.width = 8;
    auto net = lednet::cls::build_classifier(cc, 9);
    net->to(torch::kFloat64);
    const auto cx = torch::rand({2, 3, 8, 8}, torch::kFloat64);
    const auto cy = (torch::rand({2, 14}, torch::kFloat64) > 0.5).to(torch::kFloat64);
    const auto cls = gradcheck::check(
        *net, [&] { return lednet::metrics::bce_loss(net->forward(cx), cy); }, 30, 9);

    const bool pass = seg.checked == 30 && cls.checked == 30 && seg.worst_relative_error <= 1e-3 &&
                      cls.worst_relative_error <= 1e-3;
    std::ostringstream detail;
    detail << "30 entries each; worst relative error segmentation " << seg.worst_relative_error
           << ", classification " << cls.worst_relative_error << " (need <= 1e-3)";
    return {pass, detail.str()};
}

Outcome classification()
{
    constexpr std::size_t kSamples = 9000;
    std::vector<lednet::cls::ClsSample> samples;
    samples.reserve(kSamples);
    for (std::size_t i = 0; i < kSamples; ++i) {
        auto s = lednet::synth::generate_marker_blob_sample(lednet::mix_seed(51, i), 32);
        samples.push_back({std::move(s.image), s.labels});
    }
    const lednet::cls::InMemorySource source(std::move(samples));
    auto c = lednet::cls::ClsModelConfig::dense_tiny();
    c.height = c.width = 32;
    c.batch_size = 50;
    c.epochs = 8;
    c.learning_rate = 3e-3;
    const auto split = lednet::data::split(source.size(), 51);
    const auto ckpt = lednet::cls::train_classifier(lednet::cls::build_classifier(c, 51), source, c,
                                                    split, {51, {}});

    std::ostringstream csv;
    lednet::write_history(csv, ckpt.history, lednet::HistoryLayout::Classification);
    std::istringstream back(csv.str());
    std::string header;
    std::getline(back, header);
    int rows = 0;
    bool layout_ok = header == "epoch,phase,loss,accuracy";
    for (std::string line; std::getline(back, line); ++rows) {
        const std::string want_prefix =
            std::to_string(rows / 2 + 1) + (rows % 2 == 0 ? ",train," : ",val,");
        layout_ok = layout_ok && line.rfind(want_prefix, 0) == 0 &&
                    std::count(line.begin(), line.end(), ',') == 3;
    }
    std::istringstream reread(csv.str());
    layout_ok = layout_ok && rows == 2 * c.epochs && lednet::read_history(reread) == ckpt.history;

    std::string curve;
    for (const auto& r : ckpt.history)
        if (r.phase == "val") curve += (curve.empty() ? "" : " ") + fmt(r.accuracy, 3);
    const double final_val = ckpt.history.back().accuracy;
    return {final_val >= 0.95 && layout_ok,
            std::to_string(kSamples) + " marker-blob frames 32x32, dense-tiny, batch 50, 8 epochs; val accuracy [" +
                curve + "] (need final >= 0.95); history " + std::to_string(rows) + " rows " +
                (layout_ok ? "well-formed" : "MALFORMED")};
}

// ----- end-to-end -----------------------------------------------------------

int run(const std::string& command)
{
    std::cerr << "$ " << command << '\n';
    return std::system(command.c_str());
}

std::map<std::string, std::string> tree_bytes(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        out[fs::relative(entry.path(), root).generic_string()] = s.str();
    }
    return out;
}

/// One full CLI run in `dir` with the synthetic experiment config.
bool e2e_run(const fs::path& dir, const fs::path& config_template)
{
    std::ifstream in(config_template);
    auto kv = lednet::parse_key_values(in);
    for (auto& [key, value] : kv) {
        if (key.rfind("paths.", 0) == 0) value = "run/" + fs::path(value).filename().string();
    }
    kv["paths.manifest"] = "run/data/manifest.csv";
    kv["paths.image_root"] = "run/data/images";
    std::ofstream out(dir / "experiment.cfg");
    lednet::write_key_values(out, kv);
    out.close();

    const std::string cli = LEDNET_CLI;
    const std::string cfg = " --config " + (dir / "experiment.cfg").string() + " --synthetic";
    const std::string quiet = " >> " + (dir / "log.txt").string() + " 2>&1";
    return run(cli + " localize-train" + cfg + quiet) == 0 && run(cli + " overlay" + cfg + quiet) == 0 &&
           run(cli + " compare-report --train" + cfg + quiet) == 0;
}

fs::path g_e2e_dir;
fs::path g_scratch_root;
// When set, the end-to-end run lives here and survives the process so a
// separate overlay-benefit invocation can read it.
fs::path g_workdir;

Outcome end_to_end()
{
    fs::path root;
    if (g_workdir.empty()) {
        root = fixture::scratch_dir("e2e");
        g_scratch_root = root;
    } else {
        root = g_workdir / "e2e";
        fs::remove_all(root);
    }
    const auto a = root / "a", b = root / "b";
    fs::create_directories(a);
    fs::create_directories(b);
    const fs::path cfg = LEDNET_SYNTHETIC_CONFIG;
    if (!e2e_run(a, cfg) || !e2e_run(b, cfg)) {
        g_e2e_dir = a;
        return {false, "a pipeline command failed; see " + root.string()};
    }
    g_e2e_dir = a;
    const auto report = a / "run/report";
    std::vector<std::string> missing;
    for (const char* f : {"history_original.csv", "history_overlay.csv", "accuracy.png", "loss.png", "table.txt"})
        if (!fs::exists(report / f)) missing.push_back(f);

    const auto ta = tree_bytes(a / "run"), tb = tree_bytes(b / "run");
    std::size_t differing = 0;
    std::string first;
    for (const auto& [path, bytes] : ta) {
        const auto it = tb.find(path);
        if (it == tb.end() || it->second != bytes) {
            if (first.empty()) first = path;
            ++differing;
        }
    }
    differing += tb.size() > ta.size() ? tb.size() - ta.size() : 0;
    const bool pass = missing.empty() && differing == 0;
    std::string detail = "localize-train, overlay, compare-report --train run twice; " + std::to_string(ta.size()) +
                         " files compared, " + std::to_string(differing) + " differ";
    if (!first.empty()) detail += " (first: " + first + ")";
    if (!missing.empty()) detail += "; missing " + missing.front();
    return {pass, detail};
}

double all_absent_accuracy(const lednet::cls::SampleSource& source, std::span<const std::size_t> indices)
{
    double negatives = 0;
    for (auto i : indices)
        for (auto v : source.get(i).labels) negatives += v == 0;
    return negatives / (14.0 * static_cast<double>(indices.size()));
}

/// Both arms on frames whose label disks lie inside a central region and
/// whose same-coloured clutter lies outside it. The overlay arm sees the
/// frame multiplied by the region mask.
std::pair<double, double> region_experiment(double& baseline)
{
    constexpr std::size_t kSamples = 9000;
    lednet::synth::BlobOptions opts;
    opts.region_radius = 11;
    opts.clutter = 4;
    opts.positive_rate = 0.25;
    std::vector<lednet::cls::ClsSample> original, overlaid;
    for (std::size_t i = 0; i < kSamples; ++i) {
        auto s = lednet::synth::generate_marker_blob_sample(lednet::mix_seed(61, i), 32, opts);
        overlaid.push_back({lednet::mask::overlay(s.image, s.mask), s.labels});
        original.push_back({std::move(s.image), s.labels});
    }
    const lednet::cls::InMemorySource orig_source(std::move(original));
    const lednet::cls::InMemorySource over_source(std::move(overlaid));
    auto c = lednet::cls::ClsModelConfig::dense_tiny();
    c.height = c.width = 32;
    c.learning_rate = 3e-3;
    const auto split = lednet::data::split(kSamples, 61);
    baseline = all_absent_accuracy(orig_source, split.val);
    auto train = [&](const lednet::cls::SampleSource& source) {
        return lednet::cls::train_classifier(lednet::cls::build_classifier(c, 61), source, c, split, {61, {}})
            .history.back()
            .accuracy;
    };
    const double orig = train(orig_source);
    return {orig, train(over_source)};
}

Outcome overlay_benefit()
{
    if (g_e2e_dir.empty() && !g_workdir.empty()) g_e2e_dir = g_workdir / "e2e/a";
    if (g_e2e_dir.empty() || !fs::exists(g_e2e_dir / "run/report/history_overlay.csv")) {
        return {false, "needs the end-to-end run's histories"};
    }
    const auto report = g_e2e_dir / "run/report";
    const auto orig = lednet::read_history(report / "history_original.csv").back();
    const auto over = lednet::read_history(report / "history_overlay.csv").back();

    // Accuracy of always answering "absent" on the validation partition.
    const auto manifest = lednet::data::filter_frontal(
        lednet::data::read_manifest(g_e2e_dir / "run/data/manifest.csv"));
    const auto split = lednet::data::read_split(report / "split.csv");
    double negatives = 0;
    for (auto i : split.val)
        for (auto v : lednet::data::clean_labels(manifest.records[i].labels)) negatives += v == 0;
    const double baseline = negatives / (14.0 * split.val.size());

    double region_baseline = 0;
    const auto [region_orig, region_over] = region_experiment(region_baseline);

    const bool pass = over.accuracy >= orig.accuracy - 0.02 && region_over >= region_orig - 0.02;
    return {pass, "final val accuracy, overlay vs original (need overlay >= original - 0.02): pipeline run " +
                      fmt(over.accuracy) + " vs " + fmt(orig.accuracy) + " (all-absent " + fmt(baseline) +
                      "); 9000 region frames 32x32 " + fmt(region_over) + " vs " + fmt(region_orig) +
                      " (all-absent " + fmt(region_baseline) + ")"};
}

}  // namespace

int main(int argc, char** argv)
{
    lednet::configure_determinism();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"metric-oracle", metric_oracle_suite},
        {"mask-ops", mask_ops_suite},
        {"label-policy", label_policy_suite},
        {"split", split_suite},
        {"segmentation", segmentation},
        {"gradient-checks", gradient_checks},
        {"classification", classification},
        {"end-to-end", end_to_end},
        {"overlay-benefit", overlay_benefit},
    };
    std::vector<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workdir" && i + 1 < argc) {
            g_workdir = argv[++i];
        } else {
            only.push_back(arg);
        }
    }
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !outcome.pass;
        std::printf("%s %s [%.1f s] %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), seconds,
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    // Failed runs keep their directories for inspection.
    if (failures == 0 && !g_scratch_root.empty()) fs::remove_all(g_scratch_root);
    return failures == 0 ? 0 : 1;
}
