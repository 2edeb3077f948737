#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lednet/history.hpp"

namespace lednet {

/// On-disk model archive: a plain-text header (kind, config key/values and
/// the training history) followed by an opaque weights blob.
///
///     LEDNET-CHECKPOINT 1
///     kind=<kind>
///     [config]
///     key=value ...
///     [history]
///     <history csv>
///     [weights] <byte count>
///     <bytes>
struct CheckpointArchive {
    std::string kind;
    std::map<std::string, std::string> config;
    std::vector<MetricsRecord> history;
    HistoryLayout layout = HistoryLayout::Classification;
    std::string weights;
};

void write_archive(const std::filesystem::path& path, const CheckpointArchive& archive);
[[nodiscard]] CheckpointArchive read_archive(const std::filesystem::path& path);

}  // namespace lednet
