#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "lednet/dataset.hpp"
#include "lednet/error.hpp"
#include "lednet/mask_ops.hpp"
#include "lednet/synthetic.hpp"

namespace d = lednet::data;
using d::RawLabel;

namespace {

const std::string kHeader =
    "Path,Sex,Age,Frontal/Lateral,AP/PA,No Finding,Enlarged Cardiomediastinum,Cardiomegaly,"
    "Lung Opacity,Lung Lesion,Edema,Consolidation,Pneumonia,Atelectasis,Pneumothorax,"
    "Pleural Effusion,Pleural Other,Fracture,Support Devices\n";

d::DatasetManifest parse(const std::string& text)
{
    std::istringstream in(text);
    return d::parse_manifest(in);
}

std::string row(const std::string& path, const std::string& view, const std::string& labels)
{
    return path + ",Female,68," + view + ",AP," + labels + "\n";
}

d::RawLabelVector random_raw(std::mt19937& gen)
{
    d::RawLabelVector raw{};
    for (auto& v : raw) v = static_cast<RawLabel>(gen() % 4);
    return raw;
}

}  // namespace

TEST(Manifest, ParsesTokensInOrder)
{
    const auto m = parse(kHeader + row("p1/s1/view1_frontal.jpg", "Frontal", "1.0,-1.0,,0.0,,,,,,,,,,1.0"));
    ASSERT_EQ(m.records.size(), 1u);
    const auto& r = m.records[0];
    EXPECT_EQ(r.path, "p1/s1/view1_frontal.jpg");
    EXPECT_EQ(r.view, d::View::Frontal);
    EXPECT_EQ(r.labels[0], RawLabel::Positive);
    EXPECT_EQ(r.labels[1], RawLabel::Uncertain);
    EXPECT_EQ(r.labels[2], RawLabel::Missing);
    EXPECT_EQ(r.labels[3], RawLabel::Negative);
    EXPECT_EQ(r.labels[13], RawLabel::Positive);
    EXPECT_EQ(m.observations[12], "Fracture");
}

TEST(Manifest, EmptyDataSection)
{
    EXPECT_TRUE(parse(kHeader).records.empty());
}

TEST(Manifest, ShortRowReportsRowNumber)
{
    const std::string text = kHeader + row("a.png", "Frontal", ",,,,,,,,,,,,,") +
                             row("b.png", "Frontal", ",,,,,,,,,,,,");
    try {
        (void)parse(text);
        FAIL() << "expected ParseError";
    } catch (const lednet::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
    }
}

TEST(Manifest, UnknownTokenIsNamed)
{
    try {
        (void)parse(kHeader + row("a.png", "Frontal", "maybe,,,,,,,,,,,,,"));
        FAIL() << "expected ParseError";
    } catch (const lednet::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("maybe"), std::string::npos) << e.what();
    }
}

TEST(Manifest, RejectsBadHeaderAndView)
{
    EXPECT_THROW((void)parse("Path,Sex\n"), lednet::ParseError);
    EXPECT_THROW((void)parse(kHeader + row("a.png", "Oblique", ",,,,,,,,,,,,,")), lednet::ParseError);
}

TEST(Manifest, SerializeRoundTrip)
{
    std::mt19937 gen(12);
    d::DatasetManifest m;
    m.observations = d::default_observations();
    for (int i = 0; i < 40; ++i) {
        d::ManifestRecord r;
        r.path = "patient" + std::to_string(i) + "/study1/view" + std::to_string(i % 2 + 1) + ".jpg";
        r.sex = i % 3 ? "Male" : "Female";
        r.age = std::to_string(20 + i);
        r.view = i % 4 == 3 ? d::View::Lateral : d::View::Frontal;
        r.projection = r.view == d::View::Frontal ? "PA" : "";
        r.labels = random_raw(gen);
        m.records.push_back(r);
    }
    m.records[5].path = "odd, \"quoted\" path.png";
    std::ostringstream out;
    d::serialize_manifest(out, m);
    EXPECT_EQ(parse(out.str()), m);
}

TEST(Labels, PolicyMapsOnlyPositiveToOne)
{
    d::RawLabelVector raw{};
    raw.fill(RawLabel::Missing);
    raw[0] = RawLabel::Uncertain;
    raw[2] = RawLabel::Negative;
    raw[3] = RawLabel::Positive;
    const d::CleanLabelVector expected{0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(d::clean_labels(raw), expected);

    raw.fill(RawLabel::Positive);
    d::CleanLabelVector ones{};
    ones.fill(1);
    EXPECT_EQ(d::clean_labels(raw), ones);
}

TEST(Labels, SingleSlotExhaustiveAndIdempotent)
{
    for (std::size_t slot = 0; slot < d::kObservationCount; ++slot) {
        for (int token = 0; token < 4; ++token) {
            d::RawLabelVector raw{};
            raw.fill(RawLabel::Negative);
            raw[slot] = static_cast<RawLabel>(token);
            const auto clean = d::clean_labels(raw);
            for (std::size_t j = 0; j < d::kObservationCount; ++j) {
                const int want = j == slot && raw[slot] == RawLabel::Positive ? 1 : 0;
                EXPECT_EQ(clean[j], want);
            }
            EXPECT_EQ(d::clean_labels(d::as_raw(clean)), clean);
        }
    }
}

TEST(FilterFrontal, KeepsOrder)
{
    const auto m = parse(kHeader + row("f1", "Frontal", ",,,,,,,,,,,,,") + row("l1", "Lateral", ",,,,,,,,,,,,,") +
                         row("f2", "Frontal", ",,,,,,,,,,,,,") + row("l2", "Lateral", ",,,,,,,,,,,,,") +
                         row("f3", "Frontal", ",,,,,,,,,,,,,"));
    const auto f = d::filter_frontal(m);
    ASSERT_EQ(f.records.size(), 3u);
    EXPECT_EQ(f.records[0].path, "f1");
    EXPECT_EQ(f.records[1].path, "f2");
    EXPECT_EQ(f.records[2].path, "f3");
    EXPECT_EQ(d::filter_frontal(f), f);

    auto lateral = m;
    std::erase_if(lateral.records, [](const auto& r) { return r.view == d::View::Frontal; });
    EXPECT_TRUE(d::filter_frontal(lateral).records.empty());
}

TEST(Split, SizesFollowFloorArithmetic)
{
    const auto big = d::split(28629, 1);
    EXPECT_EQ(big.train.size(), 20040u);
    EXPECT_EQ(big.val.size(), 5725u);
    EXPECT_EQ(big.test.size(), 2864u);
    const auto ten = d::split(10, 1);
    EXPECT_EQ(ten.train.size(), 7u);
    EXPECT_EQ(ten.val.size(), 2u);
    EXPECT_EQ(ten.test.size(), 1u);
}

TEST(Split, PartitionsExactlyForAllSmallN)
{
    for (std::size_t n = 0; n <= 1000; ++n) {
        const auto s = d::split(n, 77);
        std::vector<std::size_t> all;
        all.insert(all.end(), s.train.begin(), s.train.end());
        all.insert(all.end(), s.val.begin(), s.val.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), 0);
        ASSERT_EQ(all, expected) << "n=" << n;
        ASSERT_EQ(s.train.size(), n * 7 / 10);
        ASSERT_EQ(s.val.size(), n * 2 / 10);
    }
}

TEST(Split, SeededRerunsMatchAndSeedsDiffer)
{
    EXPECT_EQ(d::split(500, 3), d::split(500, 3));
    EXPECT_NE(d::split(500, 3).train, d::split(500, 4).train);
}

TEST(Split, FileRoundTrip)
{
    const auto path = std::filesystem::temp_directory_path() / "lednet_split_test.csv";
    const auto s = d::split(57, 9);
    d::write_split(path, s, "config_hash=abc");
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first.rfind("# seed=9", 0), 0u) << first;
    EXPECT_EQ(d::read_split(path), s);
    std::filesystem::remove(path);
}

TEST(Synthetic, PairIsDeterministicWithTwoLungs)
{
    const auto [img1, mask1] = lednet::synth::generate_synthetic_pair(42, 64, 64);
    const auto [img2, mask2] = lednet::synth::generate_synthetic_pair(42, 64, 64);
    EXPECT_EQ(img1, img2);
    EXPECT_EQ(mask1, mask2);
    EXPECT_EQ(img1.channels, 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pair = lednet::synth::generate_synthetic_pair(seed, 48, 40);
        EXPECT_EQ(lednet::mask::connected_components(pair.second).size(), 2u) << "seed " << seed;
    }
    EXPECT_THROW((void)lednet::synth::generate_synthetic_pair(1, 31, 64), lednet::ParameterError);
}

TEST(Synthetic, DistractorsAreRemovedByRetainTwo)
{
    int with_extra = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto clean = lednet::synth::generate_synthetic_pair(seed, 64, 64);
        const auto noisy = lednet::synth::generate_synthetic_pair(seed, 64, 64, {.distractors = true});
        if (lednet::mask::connected_components(noisy.second).size() > 2) ++with_extra;
        EXPECT_EQ(lednet::mask::retain_two_regions(noisy.second), clean.second) << "seed " << seed;
    }
    EXPECT_GT(with_extra, 10);
}
