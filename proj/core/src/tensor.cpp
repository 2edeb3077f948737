#include "lednet/tensor.hpp"

#include <cstring>
#include <sstream>

#include "lednet/error.hpp"

namespace lednet {

torch::Tensor to_tensor(const ImageGrid& image)
{
    return torch::from_blob(const_cast<float*>(image.data.data()),
                            {image.channels, image.height, image.width}, torch::kFloat32)
        .clone();
}

torch::Tensor to_batch(std::span<const ImageGrid> images)
{
    if (images.empty()) throw DataError("cannot batch zero images");
    std::vector<torch::Tensor> items;
    items.reserve(images.size());
    for (const auto& image : images) {
        if (image.channels != images[0].channels || image.height != images[0].height ||
            image.width != images[0].width) {
            throw DimensionError("batch images differ in shape: " + images[0].shape_string() +
                                 " vs " + image.shape_string());
        }
        items.push_back(to_tensor(image));
    }
    return torch::stack(items);
}

torch::Tensor to_tensor(const BinaryMask& mask)
{
    return torch::from_blob(const_cast<std::uint8_t*>(mask.values.data()),
                            {1, mask.height, mask.width}, torch::kUInt8)
        .to(torch::kFloat32);
}

ImageGrid to_image(const torch::Tensor& chw)
{
    if (chw.dim() != 3) throw DimensionError("to_image expects a (C,H,W) tensor");
    const auto t = chw.to(torch::kFloat32).contiguous();
    ImageGrid out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)),
                  static_cast<int>(t.size(2)));
    std::memcpy(out.data.data(), t.data_ptr<float>(), out.data.size() * sizeof(float));
    return out;
}

std::string save_module(const torch::nn::Module& module)
{
    torch::serialize::OutputArchive archive;
    module.save(archive);
    std::ostringstream out;
    archive.save_to(out);
    return out.str();
}

void load_module(torch::nn::Module& module, const std::string& bytes)
{
    std::istringstream in(bytes);
    torch::serialize::InputArchive archive;
    try {
        archive.load_from(in);
        module.load(archive);
    } catch (const c10::Error& e) {
        throw FormatError(std::string("cannot restore model weights: ") + e.what_without_backtrace());
    }
}

void configure_determinism(int threads)
{
    torch::set_num_threads(threads);
    at::globalContext().setDeterministicAlgorithms(true, false);
}

}  // namespace lednet
