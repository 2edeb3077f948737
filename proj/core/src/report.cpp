#include "lednet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lednet/error.hpp"

namespace lednet::report {
namespace {

const MetricsRecord* find_row(const std::vector<MetricsRecord>& rows, int epoch, const char* phase)
{
    for (const auto& r : rows) {
        if (r.epoch == epoch && r.phase == phase) return &r;
    }
    return nullptr;
}

std::vector<int> epochs_of(const ArmSeries& arm)
{
    std::vector<int> epochs;
    for (const auto& r : arm.history) {
        if (std::ranges::find(epochs, r.epoch) == epochs.end()) epochs.push_back(r.epoch);
    }
    std::ranges::sort(epochs);
    return epochs;
}

std::string cell(const MetricsRecord* row, bool loss)
{
    if (!row) return "-";
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6f", loss ? row->loss : row->accuracy);
    return buffer;
}

// BGR
const cv::Scalar kArmColours[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}};

double metric_of(const MetricsRecord& r, Metric m)
{
    return m == Metric::Accuracy ? r.accuracy : r.loss;
}

void dashed_line(cv::Mat& canvas, cv::Point a, cv::Point b, const cv::Scalar& colour)
{
    const double length = std::hypot(b.x - a.x, b.y - a.y);
    const int dashes = std::max(1, static_cast<int>(length / 8.0));
    for (int i = 0; i < dashes; i += 2) {
        const double t0 = static_cast<double>(i) / dashes;
        const double t1 = std::min(1.0, static_cast<double>(i + 1) / dashes);
        cv::line(canvas, {a.x + static_cast<int>((b.x - a.x) * t0), a.y + static_cast<int>((b.y - a.y) * t0)},
                 {a.x + static_cast<int>((b.x - a.x) * t1), a.y + static_cast<int>((b.y - a.y) * t1)},
                 colour, 2, cv::LINE_AA);
    }
}

}  // namespace

std::string render_table(const std::vector<ArmSeries>& arms)
{
    std::ostringstream out;
    char line[160];
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const auto& arm = arms[a];
        if (a) out << '\n';
        out << "Arm: " << arm.name << '\n';
        if (!arm.provenance.empty()) out << "Provenance: " << arm.provenance << '\n';
        std::snprintf(line, sizeof(line), "%5s  %12s  %14s  %12s  %14s\n", "Epoch", "Train Loss",
                      "Train Accuracy", "Val Loss", "Val Accuracy");
        out << line;
        for (const int epoch : epochs_of(arm)) {
            const auto* train = find_row(arm.history, epoch, "train");
            const auto* val = find_row(arm.history, epoch, "val");
            std::snprintf(line, sizeof(line), "%5d  %12s  %14s  %12s  %14s\n", epoch,
                          cell(train, true).c_str(), cell(train, false).c_str(),
                          cell(val, true).c_str(), cell(val, false).c_str());
            out << line;
        }
        if (arm.test) {
            out << "Test: loss " << cell(&*arm.test, true) << "  accuracy "
                << cell(&*arm.test, false) << '\n';
        }
    }
    return out.str();
}

void render_curve(const std::filesystem::path& path, const std::vector<ArmSeries>& arms,
                  Metric metric)
{
    constexpr int kWidth = 900;
    constexpr int kHeight = 600;
    const cv::Rect plot(90, 60, 620, 460);
    cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));

    int max_epoch = 1;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& arm : arms) {
        for (const auto& r : arm.history) {
            if (r.phase != "train" && r.phase != "val") continue;
            max_epoch = std::max(max_epoch, r.epoch);
            lo = std::min(lo, metric_of(r, metric));
            hi = std::max(hi, metric_of(r, metric));
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-9) {
        lo -= 0.05;
        hi += 0.05;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto to_px = [&](double epoch, double value) {
        const double fx = max_epoch > 1 ? (epoch - 1.0) / (max_epoch - 1.0) : 0.5;
        const double fy = (value - lo) / (hi - lo);
        return cv::Point(plot.x + static_cast<int>(std::lround(fx * plot.width)),
                         plot.y + plot.height - static_cast<int>(std::lround(fy * plot.height)));
    };

    const auto font = cv::FONT_HERSHEY_SIMPLEX;
    const cv::Scalar ink(40, 40, 40);
    const cv::Scalar grid(225, 225, 225);
    char label[64];
    for (int i = 0; i <= 5; ++i) {
        const double v = lo + (hi - lo) * i / 5.0;
        const auto y = to_px(1.0, v).y;
        cv::line(canvas, {plot.x, y}, {plot.x + plot.width, y}, grid, 1);
        std::snprintf(label, sizeof(label), "%.3f", v);
        cv::putText(canvas, label, {plot.x - 75, y + 5}, font, 0.45, ink, 1, cv::LINE_AA);
    }
    for (int e = 1; e <= max_epoch; ++e) {
        const auto x = to_px(e, lo).x;
        cv::line(canvas, {x, plot.y + plot.height}, {x, plot.y + plot.height + 6}, ink, 1);
        cv::putText(canvas, std::to_string(e), {x - 5, plot.y + plot.height + 24}, font, 0.45, ink, 1,
                    cv::LINE_AA);
    }
    cv::rectangle(canvas, plot, ink, 1);

    const char* name = metric == Metric::Accuracy ? "Accuracy" : "Loss";
    cv::putText(canvas, std::string(name) + " vs epoch", {plot.x, 35}, font, 0.8, ink, 2, cv::LINE_AA);
    cv::putText(canvas, "Epoch", {plot.x + plot.width / 2 - 25, kHeight - 30}, font, 0.55, ink, 1,
                cv::LINE_AA);

    int legend_y = plot.y + 10;
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const auto colour = kArmColours[a % std::size(kArmColours)];
        for (const char* phase : {"train", "val"}) {
            const bool dashed = std::string(phase) == "val";
            std::vector<cv::Point> points;
            for (const auto& r : arms[a].history) {
                if (r.phase == phase) points.push_back(to_px(r.epoch, metric_of(r, metric)));
            }
            for (std::size_t i = 1; i < points.size(); ++i) {
                if (dashed) {
                    dashed_line(canvas, points[i - 1], points[i], colour);
                } else {
                    cv::line(canvas, points[i - 1], points[i], colour, 2, cv::LINE_AA);
                }
            }
            for (const auto& p : points) cv::circle(canvas, p, 4, colour, dashed ? 1 : cv::FILLED, cv::LINE_AA);

            const cv::Point l0(plot.x + plot.width + 15, legend_y);
            const cv::Point l1(l0.x + 30, legend_y);
            if (dashed) {
                dashed_line(canvas, l0, l1, colour);
            } else {
                cv::line(canvas, l0, l1, colour, 2, cv::LINE_AA);
            }
            cv::putText(canvas, arms[a].name + " " + phase, {l1.x + 8, legend_y + 5}, font, 0.45, ink, 1,
                        cv::LINE_AA);
            legend_y += 22;
        }
    }
    if (!arms.empty() && !arms.front().provenance.empty()) {
        cv::putText(canvas, arms.front().provenance, {plot.x, kHeight - 8}, font, 0.4, ink, 1, cv::LINE_AA);
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), canvas)) throw IoError("cannot write plot: " + path.string());
}

}  // namespace lednet::report
