// Hand-assembled RIFF/WAVE files for ingestion tests.
#pragma once

#include <cstdint>
#include <vector>

namespace testing_support {

inline void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

inline void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

inline void put_tag(std::vector<unsigned char>& b, const char* t) { b.insert(b.end(), t, t + 4); }

// PCM file with an extra LIST chunk before "fmt " that readers must skip.
inline std::vector<unsigned char> wav_bytes(const std::vector<std::int16_t>& samples, std::uint32_t rate,
                                            std::uint16_t channels = 1, std::uint16_t format = 1,
                                            std::uint16_t bits = 16) {
  std::vector<unsigned char> b;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  put_tag(b, "RIFF");
  put32(b, 36 + data_bytes + 12);
  put_tag(b, "WAVE");
  put_tag(b, "LIST");
  put32(b, 4);
  put_tag(b, "INFO");
  put_tag(b, "fmt ");
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, rate);
  put32(b, rate * channels * bits / 8);
  put16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put16(b, bits);
  put_tag(b, "data");
  put32(b, data_bytes);
  for (auto s : samples) put16(b, static_cast<std::uint16_t>(s));
  return b;
}

}  // namespace testing_support
