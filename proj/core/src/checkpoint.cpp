#include "lednet/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "lednet/error.hpp"

namespace lednet {
namespace {

constexpr const char* kMagic = "LEDNET-CHECKPOINT 1";

}  // namespace

void write_archive(const std::filesystem::path& path, const CheckpointArchive& archive)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out << kMagic << '\n' << "kind=" << archive.kind << '\n' << "[config]\n";
    for (const auto& [key, value] : archive.config) out << key << '=' << value << '\n';
    out << "[history]\n";
    write_history(out, archive.history, archive.layout);
    out << "[weights] " << archive.weights.size() << '\n';
    out.write(archive.weights.data(), static_cast<std::streamsize>(archive.weights.size()));
    if (!out) throw IoError("short write to checkpoint: " + path.string());
}

CheckpointArchive read_archive(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint not found: " + path.string());

    auto fail = [&](const std::string& what) {
        return FormatError("malformed checkpoint " + path.string() + ": " + what);
    };

    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw fail("missing magic line");
    CheckpointArchive archive;
    if (!std::getline(in, line) || line.rfind("kind=", 0) != 0) throw fail("missing kind");
    archive.kind = line.substr(5);
    if (!std::getline(in, line) || line != "[config]") throw fail("missing [config]");

    while (std::getline(in, line) && line != "[history]") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw fail("config line without '='");
        archive.config[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (line != "[history]") throw fail("missing [history]");

    std::string history_text;
    std::size_t weight_bytes = 0;
    bool found_weights = false;
    while (std::getline(in, line)) {
        if (line.rfind("[weights] ", 0) == 0) {
            weight_bytes = std::stoull(line.substr(10));
            found_weights = true;
            break;
        }
        history_text += line;
        history_text += '\n';
    }
    if (!found_weights) throw fail("missing [weights]");
    std::istringstream hs(history_text);
    archive.history = read_history(hs);
    archive.layout = history_text.rfind("epoch,phase,loss,accuracy,iou,dice", 0) == 0
                         ? HistoryLayout::Segmentation
                         : HistoryLayout::Classification;

    archive.weights.resize(weight_bytes);
    in.read(archive.weights.data(), static_cast<std::streamsize>(weight_bytes));
    if (static_cast<std::size_t>(in.gcount()) != weight_bytes) throw fail("truncated weights");
    return archive;
}

}  // namespace lednet
