#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpd::binio {

// Little-endian primitives for the checkpoint and sample containers.

inline void put_u32(std::ostream& out, std::uint32_t x) {
  const char b[4] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
                     static_cast<char>((x >> 16) & 0xff), static_cast<char>((x >> 24) & 0xff)};
  out.write(b, 4);
}

inline void put_u8(std::ostream& out, std::uint8_t x) { out.put(static_cast<char>(x)); }

inline void put_f32(std::ostream& out, float x) { put_u32(out, std::bit_cast<std::uint32_t>(x)); }

inline void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float x : v) put_f32(out, x);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

inline std::vector<float> get_floats(std::istream& in, std::size_t n) {
  std::vector<float> v(n);
  for (float& x : v) x = get_f32(in);
  return v;
}

inline std::string get_string(std::istream& in, std::size_t max_len = 1 << 16) {
  const std::uint32_t n = get_u32(in);
  if (n > max_len) throw FormatError("string field too long");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("unexpected end of file");
  return s;
}

}  // namespace gpd::binio
