#pragma once

#include <array>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "apnatlas/error.hpp"

namespace apn {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view data) {
    Digest out{};
    unsigned len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        throw Error(ErrorCode::InvalidArgument, "SHA-256 computation failed");
    return out;
}

inline std::string to_hex(const Digest& d) {
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (auto b : d) os << std::setw(2) << static_cast<unsigned>(b);
    return os.str();
}

inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

/// 64-bit mixer (splitmix64 finalizer) for in-memory hashing of small signatures.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) noexcept {
    return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

} // namespace apn
