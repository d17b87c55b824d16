#include "cfo/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "cfo/error.hpp"

namespace cfo {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Length: return "length error";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::Degenerate: return "degenerate input";
        case ErrorKind::State: return "state error";
        case ErrorKind::Divergence: return "training divergence";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Io: return "io error";
        case ErrorKind::Usage: return "usage error";
    }
    return "error";
}

void Fnv1a::update(std::span<const std::byte> bytes) noexcept {
    for (auto b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= 0x100000001B3ull;
    }
}

void Fnv1a::update(std::string_view text) noexcept {
    update(std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    Fnv1a h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        const auto n = static_cast<std::size_t>(in.gcount());
        h.update(std::as_bytes(std::span(buf.data(), n)));
    }
    return h.value();
}

std::string hex_digest(std::uint64_t value) {
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(value));
    return out;
}

}  // namespace cfo
