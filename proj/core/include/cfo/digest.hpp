#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace cfo {

/// 64-bit FNV-1a, used as a content fingerprint for files and reports.
class Fnv1a {
public:
    void update(std::span<const std::byte> bytes) noexcept;
    void update(std::string_view text) noexcept;
    std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xCBF29CE484222325ull;
};

std::uint64_t file_digest(const std::filesystem::path& path);

/// 16 lowercase hex digits.
std::string hex_digest(std::uint64_t value);

}  // namespace cfo
