#include "lednet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "lednet/error.hpp"

namespace lednet {
namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

KeyValues section(const KeyValues& kv, const std::string& prefix)
{
    KeyValues out;
    for (const auto& [key, value] : kv) {
        if (key.rfind(prefix, 0) == 0) out[key.substr(prefix.size())] = value;
    }
    return out;
}

void put_section(KeyValues& kv, const std::string& prefix,
                 const std::map<std::string, std::string>& values)
{
    for (const auto& [key, value] : values) kv[prefix + key] = value;
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = [] {
        std::set<std::string> k = {"seed",
                                   "threshold",
                                   "postprocess.retain_two",
                                   "postprocess.mirror_fill",
                                   "paths.manifest",
                                   "paths.image_root",
                                   "paths.mask_dir",
                                   "paths.overlay_dir",
                                   "paths.checkpoint_dir",
                                   "paths.report_dir",
                                   "paths.seg_image_dir",
                                   "paths.seg_left_mask_dir",
                                   "paths.seg_right_mask_dir",
                                   "localizer.val_fraction",
                                   "synthetic.seg_pairs",
                                   "synthetic.studies",
                                   "synthetic.image_size",
                                   "synthetic.distractors",
                                   "synthetic.outside_clutter"};
        for (const auto& [key, unused] : seg::SegModelConfig{}.to_map()) k.insert("localizer." + key);
        for (const auto& [key, unused] : cls::ClsModelConfig{}.to_map()) k.insert("classifier." + key);
        return k;
    }();
    return keys;
}

}  // namespace

KeyValues parse_key_values(std::istream& in)
{
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = trim(text.substr(0, eq));
        if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        kv[key] = trim(text.substr(eq + 1));
    }
    return kv;
}

void write_key_values(std::ostream& out, const KeyValues& kv)
{
    for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
}

int get_int(const KeyValues& kv, const std::string& key, int fallback)
{
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    int value = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(key + ": '" + s + "' is not an integer");
    }
    return value;
}

std::uint64_t get_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback)
{
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::uint64_t value = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(key + ": '" + s + "' is not an unsigned integer");
    }
    return value;
}

double get_real(const KeyValues& kv, const std::string& key, double fallback)
{
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    double value = 0.0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(key + ": '" + s + "' is not a number");
    }
    return value;
}

bool get_bool(const KeyValues& kv, const std::string& key, bool fallback)
{
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const auto& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback)
{
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::uint64_t fnv1a(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv,
                                                   const std::filesystem::path& base)
{
    for (const auto& [key, unused] : kv) {
        if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    auto path_of = [&](const std::string& key, const std::filesystem::path& fallback) {
        std::filesystem::path p = get_string(kv, key, fallback.string());
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    auto& p = c.paths;
    p.manifest = path_of("paths.manifest", p.manifest);
    p.image_root = path_of("paths.image_root", p.image_root);
    p.mask_dir = path_of("paths.mask_dir", p.mask_dir);
    p.overlay_dir = path_of("paths.overlay_dir", p.overlay_dir);
    p.checkpoint_dir = path_of("paths.checkpoint_dir", p.checkpoint_dir);
    p.report_dir = path_of("paths.report_dir", p.report_dir);
    p.seg_image_dir = path_of("paths.seg_image_dir", p.seg_image_dir);
    p.seg_left_mask_dir = path_of("paths.seg_left_mask_dir", p.seg_left_mask_dir);
    p.seg_right_mask_dir = path_of("paths.seg_right_mask_dir", p.seg_right_mask_dir);

    c.seed = get_u64(kv, "seed", c.seed);
    c.threshold = get_real(kv, "threshold", c.threshold);
    c.retain_two = get_bool(kv, "postprocess.retain_two", c.retain_two);
    c.mirror_fill = get_bool(kv, "postprocess.mirror_fill", c.mirror_fill);

    c.localizer = seg::SegModelConfig::from_map(section(kv, "localizer."));
    c.seg_val_fraction = get_real(kv, "localizer.val_fraction", c.seg_val_fraction);
    c.classifier = cls::ClsModelConfig::from_map(section(kv, "classifier."));

    auto& s = c.synthetic;
    s.seg_pairs = static_cast<std::size_t>(get_u64(kv, "synthetic.seg_pairs", s.seg_pairs));
    s.studies = static_cast<std::size_t>(get_u64(kv, "synthetic.studies", s.studies));
    s.image_size = get_int(kv, "synthetic.image_size", s.image_size);
    s.distractors = get_bool(kv, "synthetic.distractors", s.distractors);
    s.outside_clutter = get_bool(kv, "synthetic.outside_clutter", s.outside_clutter);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    auto config = from_key_values(parse_key_values(in), path.parent_path());
    config.validate();
    return config;
}

KeyValues ExperimentConfig::to_key_values() const
{
    KeyValues kv;
    kv["paths.manifest"] = paths.manifest.string();
    kv["paths.image_root"] = paths.image_root.string();
    kv["paths.mask_dir"] = paths.mask_dir.string();
    kv["paths.overlay_dir"] = paths.overlay_dir.string();
    kv["paths.checkpoint_dir"] = paths.checkpoint_dir.string();
    kv["paths.report_dir"] = paths.report_dir.string();
    kv["paths.seg_image_dir"] = paths.seg_image_dir.string();
    kv["paths.seg_left_mask_dir"] = paths.seg_left_mask_dir.string();
    kv["paths.seg_right_mask_dir"] = paths.seg_right_mask_dir.string();
    kv["seed"] = std::to_string(seed);
    kv["threshold"] = format_real(threshold);
    kv["postprocess.retain_two"] = retain_two ? "true" : "false";
    kv["postprocess.mirror_fill"] = mirror_fill ? "true" : "false";
    put_section(kv, "localizer.", localizer.to_map());
    kv["localizer.val_fraction"] = format_real(seg_val_fraction);
    put_section(kv, "classifier.", classifier.to_map());
    kv["synthetic.seg_pairs"] = std::to_string(synthetic.seg_pairs);
    kv["synthetic.studies"] = std::to_string(synthetic.studies);
    kv["synthetic.image_size"] = std::to_string(synthetic.image_size);
    kv["synthetic.distractors"] = synthetic.distractors ? "true" : "false";
    kv["synthetic.outside_clutter"] = synthetic.outside_clutter ? "true" : "false";
    return kv;
}

void ExperimentConfig::validate() const
{
    localizer.validate();
    classifier.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
    if (!(seg_val_fraction > 0.0 && seg_val_fraction < 1.0)) {
        throw ConfigError("localizer.val_fraction must lie in (0,1)");
    }
    if (synthetic.image_size < 32) throw ConfigError("synthetic.image_size must be >= 32");
}

std::uint64_t ExperimentConfig::hash() const
{
    std::ostringstream canonical;
    for (const auto& [key, value] : to_key_values()) {
        if (key.rfind("paths.", 0) == 0) continue;
        canonical << key << '=' << value << '\n';
    }
    return fnv1a(canonical.str());
}

std::string ExperimentConfig::hash_hex() const
{
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash()));
    return buffer;
}

std::string ExperimentConfig::provenance() const
{
    return "seed=" + std::to_string(seed) + " config_hash=" + hash_hex();
}

}  // namespace lednet
