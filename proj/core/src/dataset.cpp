#include "lednet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "lednet/error.hpp"
#include "lednet/random.hpp"

namespace lednet::data {
namespace {

constexpr std::size_t kColumnCount = kMetadataColumns.size() + kObservationCount;

std::string line_prefix(std::size_t line)
{
    return "line " + std::to_string(line) + ": ";
}

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    if (quoted) throw ParseError(line_prefix(line_no) + "unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_field(const std::string& value)
{
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char ch : value) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

RawLabel parse_label(const std::string& token, std::size_t line_no)
{
    if (token.empty()) return RawLabel::Missing;
    if (token == "1.0" || token == "1") return RawLabel::Positive;
    if (token == "0.0" || token == "0") return RawLabel::Negative;
    if (token == "-1.0" || token == "-1") return RawLabel::Uncertain;
    throw ParseError(line_prefix(line_no) + "unknown label token '" + token + "'");
}

const char* label_token(RawLabel label)
{
    switch (label) {
    case RawLabel::Positive: return "1.0";
    case RawLabel::Negative: return "0.0";
    case RawLabel::Uncertain: return "-1.0";
    case RawLabel::Missing: return "";
    }
    return "";
}

View parse_view(const std::string& token, std::size_t line_no)
{
    if (token == "Frontal") return View::Frontal;
    if (token == "Lateral") return View::Lateral;
    throw ParseError(line_prefix(line_no) + "unknown view '" + token + "'");
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::array<std::string, kObservationCount> default_observations()
{
    std::array<std::string, kObservationCount> names;
    std::ranges::copy(kChexpertObservations, names.begin());
    return names;
}

DatasetManifest parse_manifest(std::istream& csv)
{
    DatasetManifest manifest;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(csv, line)) {
        ++line_no;
        strip_cr(line);
        if (!line.empty()) break;
    }
    if (line.empty()) throw ParseError("manifest has no header row");

    const auto header = split_csv_line(line, line_no);
    if (header.size() != kColumnCount) {
        throw ParseError(line_prefix(line_no) + "header has " + std::to_string(header.size()) +
                         " columns, expected " + std::to_string(kColumnCount));
    }
    for (std::size_t i = 0; i < kMetadataColumns.size(); ++i) {
        if (header[i] != kMetadataColumns[i]) {
            throw ParseError(line_prefix(line_no) + "header column " + std::to_string(i + 1) +
                             " is '" + header[i] + "', expected '" + kMetadataColumns[i] + "'");
        }
    }
    for (std::size_t j = 0; j < kObservationCount; ++j) {
        manifest.observations[j] = header[kMetadataColumns.size() + j];
    }

    while (std::getline(csv, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line, line_no);
        if (fields.size() != kColumnCount) {
            throw ParseError(line_prefix(line_no) + "expected " + std::to_string(kColumnCount) +
                             " columns, got " + std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw ParseError(line_prefix(line_no) + "empty image path");
        ManifestRecord record;
        record.path = fields[0];
        record.sex = fields[1];
        record.age = fields[2];
        record.view = parse_view(fields[3], line_no);
        record.projection = fields[4];
        for (std::size_t j = 0; j < kObservationCount; ++j) {
            record.labels[j] = parse_label(fields[kMetadataColumns.size() + j], line_no);
        }
        manifest.records.push_back(std::move(record));
    }
    return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    return parse_manifest(in);
}

void serialize_manifest(std::ostream& out, const DatasetManifest& manifest)
{
    for (std::size_t i = 0; i < kMetadataColumns.size(); ++i) {
        out << (i ? "," : "") << kMetadataColumns[i];
    }
    for (const auto& name : manifest.observations) out << ',' << csv_field(name);
    out << '\n';
    for (const auto& r : manifest.records) {
        out << csv_field(r.path) << ',' << csv_field(r.sex) << ',' << csv_field(r.age) << ','
            << (r.view == View::Frontal ? "Frontal" : "Lateral") << ',' << csv_field(r.projection);
        for (const auto label : r.labels) out << ',' << label_token(label);
        out << '\n';
    }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    serialize_manifest(out, manifest);
}

CleanLabelVector clean_labels(const RawLabelVector& raw) noexcept
{
    CleanLabelVector clean{};
    for (std::size_t j = 0; j < raw.size(); ++j) clean[j] = raw[j] == RawLabel::Positive ? 1 : 0;
    return clean;
}

RawLabelVector as_raw(const CleanLabelVector& clean) noexcept
{
    RawLabelVector raw{};
    for (std::size_t j = 0; j < clean.size(); ++j) {
        raw[j] = clean[j] ? RawLabel::Positive : RawLabel::Negative;
    }
    return raw;
}

DatasetManifest filter_frontal(const DatasetManifest& manifest)
{
    DatasetManifest out;
    out.observations = manifest.observations;
    std::ranges::copy_if(manifest.records, std::back_inserter(out.records),
                         [](const ManifestRecord& r) { return r.view == View::Frontal; });
    return out;
}

const char* partition_name(Partition p) noexcept
{
    switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
    }
    return "";
}

const std::vector<std::size_t>& SplitAssignment::indices(Partition p) const
{
    switch (p) {
    case Partition::Train: return train;
    case Partition::Val: return val;
    case Partition::Test: return test;
    }
    return train;
}

SplitAssignment split(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    const auto order = shuffled_indices(n, rng);
    const std::size_t n_train = n * 7 / 10;
    const std::size_t n_val = n * 2 / 10;

    SplitAssignment out;
    out.seed = seed;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    std::ranges::sort(out.train);
    std::ranges::sort(out.val);
    std::ranges::sort(out.test);
    return out;
}

SplitAssignment split_train_val(std::size_t n, double val_fraction, std::uint64_t seed)
{
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ParameterError("validation fraction must lie in (0,1), got " +
                             std::to_string(val_fraction));
    }
    if (n < 2) throw DataError("need at least 2 samples for a train/validation split");
    Rng rng(seed);
    const auto order = shuffled_indices(n, rng);
    auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

    SplitAssignment out;
    out.seed = seed;
    out.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    out.val.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::ranges::sort(out.train);
    std::ranges::sort(out.val);
    return out;
}

void write_split(const std::filesystem::path& path, const SplitAssignment& split,
                 const std::string& provenance)
{
    const std::size_t n = split.total();
    std::vector<const char*> tag(n, nullptr);
    for (const auto p : {Partition::Train, Partition::Val, Partition::Test}) {
        for (const auto i : split.indices(p)) {
            if (i >= n || tag[i]) throw DataError("split lists do not partition 0..n-1");
            tag[i] = partition_name(p);
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write split file: " + path.string());
    out << "# seed=" << split.seed;
    if (!provenance.empty()) out << ' ' << provenance;
    out << '\n' << "index,partition\n";
    for (std::size_t i = 0; i < n; ++i) out << i << ',' << tag[i] << '\n';
}

SplitAssignment read_split(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file: " + path.string());
    SplitAssignment out;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    bool seen_seed = false;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto pos = line.find("seed=");
            if (pos != std::string::npos) {
                out.seed = std::stoull(line.substr(pos + 5));
                seen_seed = true;
            }
            continue;
        }
        if (!seen_header) {
            if (line != "index,partition") {
                throw ParseError(line_prefix(line_no) + "expected header 'index,partition'");
            }
            seen_header = true;
            continue;
        }
        const auto fields = split_csv_line(line, line_no);
        if (fields.size() != 2) throw ParseError(line_prefix(line_no) + "expected 2 columns");
        std::size_t index = 0;
        try {
            index = std::stoull(fields[0]);
        } catch (const std::exception&) {
            throw ParseError(line_prefix(line_no) + "bad index '" + fields[0] + "'");
        }
        if (fields[1] == "train") {
            out.train.push_back(index);
        } else if (fields[1] == "val") {
            out.val.push_back(index);
        } else if (fields[1] == "test") {
            out.test.push_back(index);
        } else {
            throw ParseError(line_prefix(line_no) + "unknown partition '" + fields[1] + "'");
        }
    }
    if (!seen_seed) throw ParseError("split file lacks a '# seed=' comment: " + path.string());
    std::ranges::sort(out.train);
    std::ranges::sort(out.val);
    std::ranges::sort(out.test);
    return out;
}

PairingResult pair_segmentation_files(const std::filesystem::path& image_dir,
                                      const std::filesystem::path& left_mask_dir,
                                      const std::filesystem::path& right_mask_dir)
{
    namespace fs = std::filesystem;
    for (const auto& dir : {image_dir, left_mask_dir, right_mask_dir}) {
        if (!fs::is_directory(dir)) throw IoError("directory not found: " + dir.string());
    }
    auto index_by_stem = [](const fs::path& dir) {
        std::map<std::string, fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) files.emplace(entry.path().stem().string(), entry.path());
        }
        return files;
    };
    const auto images = index_by_stem(image_dir);
    const auto left = index_by_stem(left_mask_dir);
    const auto right = index_by_stem(right_mask_dir);

    PairingResult result;
    for (const auto& [stem, path] : images) {
        const auto l = left.find(stem);
        const auto r = right.find(stem);
        if (l == left.end() || r == right.end()) {
            result.unmatched.push_back(stem);
            continue;
        }
        result.pairs.push_back({stem, path, l->second, r->second});
    }
    return result;
}

}  // namespace lednet::data
