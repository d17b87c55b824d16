#include "cfo/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cfo/error.hpp"

namespace cfo::harness {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

const std::set<std::string>& ExperimentConfig::known_keys() {
    static const std::set<std::string> keys{
        "mods",   "snr_min", "snr_max",   "snr_step",  "per_cell", "test_per_cell", "len",         "os",
        "channel", "cfo_min", "cfo_max",  "cfo_unit",  "rolloff_min", "rolloff_max", "seed",       "epochs",
        "batch",  "lr",      "lr_drops",  "lr_factor", "head",     "out_dir",
    };
    return keys;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorKind::Validation, "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (cfg.has(key)) fail(ErrorKind::Validation, "config line " + std::to_string(line_no) + ": duplicate key " + key);
        cfg.set(key, value);
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) fail(ErrorKind::Validation, "unknown config key '" + key + "'");
    values_[key] = value;
}

std::optional<std::string> ExperimentConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double ExperimentConfig::get_real(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size())
        fail(ErrorKind::Validation, "config key " + key + ": '" + *v + "' is not a number");
    return out;
}

long long ExperimentConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    long long out = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size())
        fail(ErrorKind::Validation, "config key " + key + ": '" + *v + "' is not an integer");
    return out;
}

void ExperimentConfig::validate() const {
    for (const auto& [key, value] : values_) {
        if (key.size() < 4 || key.compare(key.size() - 4, 4, "_dir") != 0) continue;
        const std::filesystem::path p(value);
        const auto parent = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
        if (!std::filesystem::exists(p) && !std::filesystem::is_directory(parent))
            fail(ErrorKind::Validation, "config key " + key + ": parent directory of '" + value + "' does not exist");
    }
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace cfo::harness
