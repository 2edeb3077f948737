#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lednet/history.hpp"

namespace lednet::report {

struct ArmSeries {
    std::string name;
    std::vector<MetricsRecord> history;
    std::optional<MetricsRecord> test;
    std::string provenance;
};

/// Per-epoch table (train loss/accuracy, val loss/accuracy) for every arm,
/// followed by test summaries and provenance lines.
[[nodiscard]] std::string render_table(const std::vector<ArmSeries>& arms);

enum class Metric { Accuracy, Loss };

/// Epoch-vs-metric line chart with one train and one val series per arm.
void render_curve(const std::filesystem::path& path, const std::vector<ArmSeries>& arms,
                  Metric metric);

}  // namespace lednet::report
