#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wsched {

/// 64-bit FNV-1a. Used for config and cache keys, not for security.
class Fnv1a {
public:
    void update(std::string_view bytes);
    void update_u64(std::uint64_t v);
    void update_double(double v);
    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::string_view bytes);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace wsched
