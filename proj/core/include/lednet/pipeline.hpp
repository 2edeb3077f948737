#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lednet/config.hpp"
#include "lednet/dataset.hpp"
#include "lednet/history.hpp"

namespace lednet::pipeline {

enum class Arm { Original, Overlay };

[[nodiscard]] const char* arm_name(Arm arm) noexcept;
[[nodiscard]] Arm parse_arm(const std::string& name);

/// File layout shared by the commands.
[[nodiscard]] std::filesystem::path localizer_checkpoint_path(const ExperimentConfig& config);
[[nodiscard]] std::filesystem::path localizer_history_path(const ExperimentConfig& config);
[[nodiscard]] std::filesystem::path classifier_checkpoint_path(const ExperimentConfig& config, Arm arm);
[[nodiscard]] std::filesystem::path history_path(const std::filesystem::path& report_dir, Arm arm);
[[nodiscard]] std::filesystem::path test_summary_path(const std::filesystem::path& report_dir, Arm arm);
[[nodiscard]] std::filesystem::path split_path(const ExperimentConfig& config);
[[nodiscard]] std::filesystem::path sidecar_path(const ExperimentConfig& config);
/// overlay_dir / <record path with a .png extension>
[[nodiscard]] std::filesystem::path overlay_path_for(const ExperimentConfig& config,
                                                     const std::string& record_path);

/// Trains the localizer on synthetic pairs (synthetic = true) or on the
/// stem-paired segmentation directories, then writes the checkpoint and its
/// history CSV. Returns the checkpoint path.
std::filesystem::path cmd_localize_train(const ExperimentConfig& config, bool synthetic,
                                         std::ostream& log);

struct OverlayRow {
    std::string source_path;
    std::string overlay_path;
    int components_before = 0;
    int components_after = 0;
    std::string skipped_reason;
};

/// Predict, post-process and overlay every frontal record; writes overlay
/// PNGs, mask PNGs and the sidecar CSV. Unreadable images are skipped and
/// logged in the sidecar. In synthetic mode the study set is generated first
/// when the manifest is absent.
std::vector<OverlayRow> cmd_overlay(const ExperimentConfig& config, bool synthetic,
                                    std::ostream& log);

void write_sidecar(const std::filesystem::path& path, const std::vector<OverlayRow>& rows);
[[nodiscard]] std::vector<OverlayRow> read_sidecar(const std::filesystem::path& path);

struct ArmResult {
    std::vector<MetricsRecord> history;
    MetricsRecord test;
};

/// Trains one arm's classifier on the shared split, writes its checkpoint,
/// history CSV and test summary. The split file is created on first use and
/// must match on later runs.
ArmResult cmd_classify_train(const ExperimentConfig& config, Arm arm, bool synthetic,
                             std::ostream& log);

/// Evaluates a stored arm checkpoint on one partition of the shared split.
MetricsRecord cmd_evaluate(const ExperimentConfig& config, Arm arm, data::Partition partition,
                           std::ostream& log);

struct ReportFiles {
    std::filesystem::path accuracy_plot;
    std::filesystem::path loss_plot;
    std::filesystem::path table;
};

/// Joins the per-arm history CSVs under `report_dir` into a text table and
/// accuracy/loss curve PNGs. Every requested arm must have a history file.
ReportFiles cmd_report(const std::filesystem::path& report_dir, const std::vector<Arm>& arms);

/// Both arms in sequence followed by the report.
ReportFiles cmd_compare(const ExperimentConfig& config, bool synthetic, std::ostream& log);

}  // namespace lednet::pipeline
