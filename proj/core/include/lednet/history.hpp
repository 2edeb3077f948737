#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lednet {

/// One row of a training history: a phase (train, val or test) of an epoch.
struct MetricsRecord {
    int epoch = 0;
    std::string phase;
    double loss = 0.0;
    double accuracy = 0.0;
    std::optional<double> iou;   // segmentation only
    std::optional<double> dice;  // segmentation only

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

enum class HistoryLayout { Classification, Segmentation };

/// Writes `epoch,phase,loss,accuracy[,iou,dice]`. A non-empty `provenance`
/// string is emitted first as a `# ...` comment line.
void write_history(std::ostream& out, const std::vector<MetricsRecord>& rows, HistoryLayout layout,
                   const std::string& provenance = {});
void write_history(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows,
                   HistoryLayout layout, const std::string& provenance = {});

/// Accepts either layout. Lines starting with '#' are skipped; the last such
/// comment is returned through `provenance` when provided.
std::vector<MetricsRecord> read_history(std::istream& in, std::string* provenance = nullptr);
std::vector<MetricsRecord> read_history(const std::filesystem::path& path,
                                        std::string* provenance = nullptr);

/// Shortest round-tripping decimal form used in every CSV artifact.
[[nodiscard]] std::string format_real(double value);

}  // namespace lednet
