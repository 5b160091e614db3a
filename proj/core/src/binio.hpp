#pragma once

// Internal little-endian stream helpers shared by the binary file codecs.

#include <bit>
#include <cstdint>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>

#include "vstyle/errors.hpp"

namespace vstyle::detail {

inline void write_u16le(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xffu),
                                static_cast<unsigned char>((v >> 8) & 0xffu)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

inline void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f32le(std::ostream& os, float v) {
    write_u32le(os, std::bit_cast<std::uint32_t>(v));
}

inline bool read_exact(std::istream& is, unsigned char* b, std::size_t n) {
    is.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n));
    return is.gcount() == static_cast<std::streamsize>(n);
}

inline std::uint16_t read_u16le(std::istream& is, const std::string& what) {
    unsigned char b[2];
    if (!read_exact(is, b, 2)) throw FormatError(what + ": truncated file");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t read_u32le(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!read_exact(is, b, 4)) throw FormatError(what + ": truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64le(std::istream& is, const std::string& what) {
    unsigned char b[8];
    if (!read_exact(is, b, 8)) throw FormatError(what + ": truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline float read_f32le(std::istream& is, const std::string& what) {
    return std::bit_cast<float>(read_u32le(is, what));
}

// Throws FormatError if anything beyond the declared payload remains.
inline void expect_eof(std::istream& is, const std::string& what) {
    char extra;
    is.read(&extra, 1);
    if (is.gcount() != 0) throw FormatError(what + ": trailing bytes after payload");
}

}  // namespace vstyle::detail
