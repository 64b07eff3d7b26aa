#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "imphy/rng.hpp"

namespace imphy {

/// A bit string, most significant bit first. Each element is 0 or 1.
using Bits = std::vector<std::uint8_t>;
using BitSpan = std::span<const std::uint8_t>;

inline Bits bits_from_string(std::string_view s) {
    Bits out;
    out.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw std::invalid_argument("bit string may contain only 0/1");
        out.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return out;
}

inline std::string bits_to_string(BitSpan bits) {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

inline void append_uint(Bits& bits, std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i)
        bits.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

inline Bits bits_from_uint(std::uint64_t value, int width) {
    Bits out;
    out.reserve(static_cast<std::size_t>(width));
    append_uint(out, value, width);
    return out;
}

inline std::uint64_t bits_to_uint(BitSpan bits) {
    if (bits.size() > 64) throw std::invalid_argument("bit string wider than 64");
    std::uint64_t v = 0;
    for (auto b : bits) v = (v << 1) | b;
    return v;
}

inline Bits random_bits(Rng& rng, std::size_t count) {
    Bits out(count);
    for (auto& b : out) b = rng.bit();
    return out;
}

inline std::size_t count_bit_errors(BitSpan a, BitSpan b) {
    if (a.size() != b.size()) throw std::invalid_argument("bit strings differ in length");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] != b[i]);
    return n;
}

}  // namespace imphy
