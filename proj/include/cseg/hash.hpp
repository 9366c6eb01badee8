#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace cseg {

/// 64-bit FNV-1a, used for config hashes, branch signatures and file checksums.
class Fnv1a {
public:
    void add_byte(std::uint8_t b) {
        state_ ^= b;
        state_ *= 0x100000001b3ULL;
    }
    void add_bytes(std::string_view bytes) {
        for (char c : bytes) add_byte(static_cast<std::uint8_t>(c));
    }
    void add_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void add_double(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        add_u64(bits);
    }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

}  // namespace cseg
