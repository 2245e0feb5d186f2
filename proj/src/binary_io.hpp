#pragma once

// Little-endian helpers for the dataset container and model file.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "freqrise/error.hpp"

namespace freqrise::io {

template <typename T>
T byteswap_if_needed(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
void write(std::ostream& out, T value) {
  value = byteswap_if_needed(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void write_array(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const T& v : values) write(out, v);
  }
}

template <typename T>
T read(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  return byteswap_if_needed(value);
}

template <typename T>
void read_array(std::istream& in, std::span<T> values, const char* what) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) v = byteswap_if_needed(v);
  }
}

}  // namespace freqrise::io
