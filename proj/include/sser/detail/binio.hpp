// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "sser/common.hpp"

// Little-endian primitives shared by the container formats.
namespace sser::binio {

inline void w_u8(std::ostream& o, std::uint8_t v) { o.put(char(v)); }
inline void w_u16(std::ostream& o, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    o.write(reinterpret_cast<char*>(b), 2);
}
inline void w_u32(std::ostream& o, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
    o.write(reinterpret_cast<char*>(b), 4);
}
inline void w_u64(std::ostream& o, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    o.write(reinterpret_cast<char*>(b), 8);
}
inline void w_i32(std::ostream& o, std::int32_t v) { w_u32(o, std::uint32_t(v)); }
inline void w_f32(std::ostream& o, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    w_u32(o, u);
}
inline void w_f64(std::ostream& o, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    w_u64(o, u);
}

inline std::uint8_t r_u8(std::istream& i) {
    const int c = i.get();
    if (c < 0) fail("parse", "unexpected end of file");
    return std::uint8_t(c);
}
inline std::uint16_t r_u16(std::istream& i) {
    unsigned char b[2];
    i.read(reinterpret_cast<char*>(b), 2);
    if (i.gcount() != 2) fail("parse", "unexpected end of file");
    return std::uint16_t(b[0] | (std::uint16_t(b[1]) << 8));
}
inline std::uint32_t r_u32(std::istream& i) {
    unsigned char b[4];
    i.read(reinterpret_cast<char*>(b), 4);
    if (i.gcount() != 4) fail("parse", "unexpected end of file");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(b[k]) << (8 * k);
    return v;
}
inline std::uint64_t r_u64(std::istream& i) {
    unsigned char b[8];
    i.read(reinterpret_cast<char*>(b), 8);
    if (i.gcount() != 8) fail("parse", "unexpected end of file");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(b[k]) << (8 * k);
    return v;
}
inline std::int32_t r_i32(std::istream& i) { return std::int32_t(r_u32(i)); }
inline float r_f32(std::istream& i) {
    const std::uint32_t u = r_u32(i);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}
inline double r_f64(std::istream& i) {
    const std::uint64_t u = r_u64(i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace sser::binio
