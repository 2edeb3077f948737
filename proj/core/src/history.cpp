#include "lednet/history.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lednet/error.hpp"

namespace lednet {
namespace {

constexpr const char* kClassificationHeader = "epoch,phase,loss,accuracy";
constexpr const char* kSegmentationHeader = "epoch,phase,loss,accuracy,iou,dice";

double parse_real(const std::string& token, std::size_t line_no)
{
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
    return value;
}

}  // namespace

std::string format_real(double value)
{
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return ec == std::errc{} ? std::string(buffer, ptr) : std::string("nan");
}

void write_history(std::ostream& out, const std::vector<MetricsRecord>& rows, HistoryLayout layout,
                   const std::string& provenance)
{
    if (!provenance.empty()) out << "# " << provenance << '\n';
    const bool seg = layout == HistoryLayout::Segmentation;
    out << (seg ? kSegmentationHeader : kClassificationHeader) << '\n';
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.phase << ',' << format_real(r.loss) << ','
            << format_real(r.accuracy);
        if (seg) {
            out << ',' << (r.iou ? format_real(*r.iou) : "") << ','
                << (r.dice ? format_real(*r.dice) : "");
        }
        out << '\n';
    }
}

void write_history(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows,
                   HistoryLayout layout, const std::string& provenance)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write history: " + path.string());
    write_history(out, rows, layout, provenance);
}

std::vector<MetricsRecord> read_history(std::istream& in, std::string* provenance)
{
    std::vector<MetricsRecord> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (provenance) *provenance = line.substr(line.find_first_not_of("# "));
            continue;
        }
        if (columns == 0) {
            if (line == kClassificationHeader) {
                columns = 4;
            } else if (line == kSegmentationHeader) {
                columns = 6;
            } else {
                throw ParseError("line " + std::to_string(line_no) + ": unexpected header '" +
                                 line + "'");
            }
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != columns) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(columns) + " columns, got " +
                             std::to_string(fields.size()));
        }
        MetricsRecord r;
        r.epoch = static_cast<int>(parse_real(fields[0], line_no));
        r.phase = fields[1];
        if (r.phase != "train" && r.phase != "val" && r.phase != "test") {
            throw ParseError("line " + std::to_string(line_no) + ": unknown phase '" + r.phase + "'");
        }
        r.loss = parse_real(fields[2], line_no);
        r.accuracy = parse_real(fields[3], line_no);
        if (columns == 6) {
            if (!fields[4].empty()) r.iou = parse_real(fields[4], line_no);
            if (!fields[5].empty()) r.dice = parse_real(fields[5], line_no);
        }
        rows.push_back(std::move(r));
    }
    if (columns == 0) throw ParseError("history has no header row");
    return rows;
}

std::vector<MetricsRecord> read_history(const std::filesystem::path& path, std::string* provenance)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open history: " + path.string());
    return read_history(in, provenance);
}

}  // namespace lednet
