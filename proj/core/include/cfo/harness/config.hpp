#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace cfo::harness {

/// Flat `key = value` text, one entry per line, `#` starts a comment. Keys are
/// checked against a fixed vocabulary so typos fail loudly.
class ExperimentConfig {
public:
    static const std::set<std::string>& known_keys();

    static ExperimentConfig parse(std::string_view text);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Throws Validation for unknown keys.
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    /// Output directories must have an existing parent; input paths must exist.
    void validate() const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace cfo::harness
