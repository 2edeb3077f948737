#include "lednet/image_io.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lednet/error.hpp"

namespace lednet::io {
namespace {

ImageGrid from_mat(const cv::Mat& mat, float scale)
{
    const int channels = mat.channels() >= 3 ? 3 : 1;
    cv::Mat ordered;
    if (mat.channels() == 4) {
        cv::cvtColor(mat, ordered, cv::COLOR_BGRA2RGB);
    } else if (mat.channels() == 3) {
        cv::cvtColor(mat, ordered, cv::COLOR_BGR2RGB);
    } else if (mat.channels() == 2) {
        // gray + alpha
        cv::extractChannel(mat, ordered, 0);
    } else {
        ordered = mat;
    }
    cv::Mat real;
    ordered.convertTo(real, CV_32F, 1.0 / scale);

    ImageGrid out(channels, real.rows, real.cols);
    for (int r = 0; r < real.rows; ++r) {
        const float* row = real.ptr<float>(r);
        for (int c = 0; c < real.cols; ++c) {
            for (int ch = 0; ch < channels; ++ch) {
                out.at(ch, r, c) = std::clamp(row[c * channels + ch], 0.0f, 1.0f);
            }
        }
    }
    return out;
}

}  // namespace

ImageGrid load_image_native(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw IoError("image not found: " + path.string());
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw FormatError("cannot decode image: " + path.string());
    switch (raw.depth()) {
    case CV_8U: return from_mat(raw, 255.0f);
    case CV_16U: return from_mat(raw, kTwelveBitMax);
    default: throw FormatError("unsupported pixel depth in " + path.string());
    }
}

ImageGrid load_image(const std::filesystem::path& path)
{
    ImageGrid image = load_image_native(path);
    return image.channels == 1 ? replicate_channels(image, 3) : image;
}

void write_image(const std::filesystem::path& path, const ImageGrid& image)
{
    if (image.channels != 1 && image.channels != 3) {
        throw DimensionError("write_image supports 1 or 3 channels, got " + image.shape_string());
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    cv::Mat mat(image.height, image.width, image.channels == 3 ? CV_8UC3 : CV_8UC1);
    for (int r = 0; r < image.height; ++r) {
        auto* row = mat.ptr<std::uint8_t>(r);
        for (int c = 0; c < image.width; ++c) {
            for (int ch = 0; ch < image.channels; ++ch) {
                // OpenCV stores BGR.
                const int src = image.channels == 3 ? 2 - ch : ch;
                const float v = std::clamp(image.at(src, r, c), 0.0f, 1.0f);
                row[c * image.channels + ch] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
    if (!cv::imwrite(path.string(), mat)) throw IoError("cannot write image: " + path.string());
}

}  // namespace lednet::io
