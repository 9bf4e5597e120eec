#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "regenn/errors.hpp"

namespace regenn::detail {

inline void write_u32_be(std::ostream& out, std::uint32_t x) {
    const unsigned char b[4] = {static_cast<unsigned char>(x >> 24),
                                static_cast<unsigned char>(x >> 16),
                                static_cast<unsigned char>(x >> 8),
                                static_cast<unsigned char>(x)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_be(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw DataError(std::string("truncated ") + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_f64_le(std::ostream& out, double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline bool read_f64_le(std::istream& in, double& x) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) return false;
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
    x = std::bit_cast<double>(bits);
    return true;
}

} // namespace regenn::detail
