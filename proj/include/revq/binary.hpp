#pragma once

// Little-endian primitives for the checkpoint and motion-cache containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "revq/error.hpp"

namespace revq::binary {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::istream& in, ErrorCode on_error) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in.gcount() == 4, on_error, "unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::int32_t get_i32(std::istream& in, ErrorCode on_error) {
  return static_cast<std::int32_t>(get_u32(in, on_error));
}

inline float get_f32(std::istream& in, ErrorCode on_error) { return std::bit_cast<float>(get_u32(in, on_error)); }

inline std::string get_bytes(std::istream& in, std::size_t n, ErrorCode on_error) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  require(static_cast<std::size_t>(in.gcount()) == n, on_error, "unexpected end of stream");
  return s;
}

}  // namespace revq::binary
