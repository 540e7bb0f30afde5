#include "wsched/hashing.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>

namespace wsched {

void Fnv1a::update(std::string_view bytes) {
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= 0x100000001b3ULL;
    }
}

void Fnv1a::update_u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
        state_ ^= (v >> (8 * k)) & 0xffU;
        state_ *= 0x100000001b3ULL;
    }
}

void Fnv1a::update_double(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }

std::string Fnv1a::hex() const {
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(state_));
    return std::string(buf.data());
}

std::string hash_hex(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), ptr);
}

}  // namespace wsched
