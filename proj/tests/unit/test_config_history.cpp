#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lednet/checkpoint.hpp"
#include "lednet/config.hpp"
#include "lednet/error.hpp"
#include "lednet/history.hpp"

namespace fs = std::filesystem;
using lednet::MetricsRecord;

TEST(KeyValues, ParsesCommentsAndWhitespace)
{
    std::istringstream in("# top\nseed = 3\n\n  classifier.epochs=4  \n");
    const auto kv = lednet::parse_key_values(in);
    EXPECT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv.at("seed"), "3");
    EXPECT_EQ(kv.at("classifier.epochs"), "4");
    std::istringstream bad("seed 3\n");
    EXPECT_THROW((void)lednet::parse_key_values(bad), lednet::ParseError);
}

TEST(KeyValues, TypedLookupsNameTheKey)
{
    const lednet::KeyValues kv{{"a", "x1"}, {"b", "yes"}, {"c", "0.25"}};
    try {
        (void)lednet::get_int(kv, "a", 0);
        FAIL();
    } catch (const lednet::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("a:"), std::string::npos);
    }
    EXPECT_EQ(lednet::get_real(kv, "c", 0), 0.25);
    EXPECT_EQ(lednet::get_int(kv, "missing", 7), 7);
    EXPECT_TRUE(lednet::get_bool(kv, "b", false));
}

TEST(Fnv1a, KnownVectors)
{
    EXPECT_EQ(lednet::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(lednet::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(lednet::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(ExperimentConfig, RoundTripAndHash)
{
    lednet::ExperimentConfig c;
    c.seed = 11;
    c.classifier.learning_rate = 0.003;
    c.localizer.depth = 3;
    const auto back = lednet::ExperimentConfig::from_key_values(c.to_key_values());
    EXPECT_EQ(back.to_key_values(), c.to_key_values());
    EXPECT_EQ(back.hash(), c.hash());

    auto moved = c;
    moved.paths.report_dir = "/elsewhere";
    EXPECT_EQ(moved.hash(), c.hash());
    auto other = c;
    other.classifier.epochs = 3;
    EXPECT_NE(other.hash(), c.hash());
    EXPECT_EQ(c.provenance(), "seed=11 config_hash=" + c.hash_hex());
    EXPECT_EQ(c.hash_hex().size(), 16u);
}

TEST(ExperimentConfig, RejectsUnknownKeysAndBadValues)
{
    EXPECT_THROW((void)lednet::ExperimentConfig::from_key_values({{"clasifier.epochs", "3"}}),
                 lednet::ConfigError);
    auto c = lednet::ExperimentConfig::from_key_values({{"threshold", "1.5"}});
    EXPECT_THROW(c.validate(), lednet::ConfigError);
}

TEST(ExperimentConfig, RelativePathsResolveAgainstFile)
{
    const auto dir = fs::temp_directory_path() / "lednet_cfg_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "exp.cfg");
        out << "seed=2\npaths.report_dir=../rep\n";
    }
    const auto c = lednet::ExperimentConfig::load(dir / "exp.cfg");
    EXPECT_EQ(c.seed, 2u);
    EXPECT_EQ(fs::weakly_canonical(c.paths.report_dir), fs::weakly_canonical(dir / "../rep"));
    EXPECT_THROW((void)lednet::ExperimentConfig::load(dir / "absent.cfg"), lednet::IoError);
    fs::remove_all(dir);
}

TEST(History, ClassificationFormat)
{
    const std::vector<MetricsRecord> rows{{1, "train", 0.5, 0.75, {}, {}}, {1, "val", 0.25, 0.875, {}, {}}};
    std::ostringstream out;
    lednet::write_history(out, rows, lednet::HistoryLayout::Classification, "seed=1");
    EXPECT_EQ(out.str(), "# seed=1\nepoch,phase,loss,accuracy\n1,train,0.5,0.75\n1,val,0.25,0.875\n");
    std::istringstream in(out.str());
    std::string provenance;
    EXPECT_EQ(lednet::read_history(in, &provenance), rows);
    EXPECT_EQ(provenance, "seed=1");
}

TEST(History, SegmentationFormatKeepsOptionalColumns)
{
    const std::vector<MetricsRecord> rows{{1, "train", 0.1, 0.9, {}, {}},
                                          {1, "val", 0.2, 0.8, 0.7, 0.8235294117647058}};
    std::ostringstream out;
    lednet::write_history(out, rows, lednet::HistoryLayout::Segmentation);
    EXPECT_NE(out.str().find("epoch,phase,loss,accuracy,iou,dice\n1,train,0.1,0.9,,\n"),
              std::string::npos);
    std::istringstream in(out.str());
    EXPECT_EQ(lednet::read_history(in), rows);
}

TEST(History, MalformedRowsReportLine)
{
    std::istringstream in("epoch,phase,loss,accuracy\n1,train,0.5,0.75\n2,train,abc,0.1\n");
    try {
        (void)lednet::read_history(in);
        FAIL();
    } catch (const lednet::ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    std::istringstream phase("epoch,phase,loss,accuracy\n1,warmup,0.5,0.75\n");
    EXPECT_THROW((void)lednet::read_history(phase), lednet::ParseError);
}

TEST(History, RealsRoundTripExactly)
{
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 0.0}) {
        EXPECT_EQ(std::strtod(lednet::format_real(v).c_str(), nullptr), v);
    }
    EXPECT_EQ(lednet::format_real(0.1), "0.1");
}

TEST(Checkpoint, ArchiveRoundTripWithBinaryWeights)
{
    lednet::CheckpointArchive a;
    a.kind = "test";
    a.config = {{"x", "1"}, {"name", "a b"}};
    a.history = {{1, "train", 0.5, 0.5, {}, {}}};
    a.weights = std::string("\0\n[history]\nLEDNET", 18) + std::string(1000, '\xff');
    const auto path = fs::temp_directory_path() / "lednet_archive_test.ckpt";
    lednet::write_archive(path, a);
    const auto b = lednet::read_archive(path);
    EXPECT_EQ(b.kind, a.kind);
    EXPECT_EQ(b.config, a.config);
    EXPECT_EQ(b.history, a.history);
    EXPECT_EQ(b.weights, a.weights);

    // Truncation is detected.
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 10);
    EXPECT_THROW((void)lednet::read_archive(path), lednet::FormatError);
    {
        std::ofstream out(path);
        out << "not a checkpoint\n";
    }
    EXPECT_THROW((void)lednet::read_archive(path), lednet::FormatError);
    fs::remove(path);
    EXPECT_THROW((void)lednet::read_archive(path), lednet::IoError);
}
