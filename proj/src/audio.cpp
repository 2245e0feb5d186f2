#include "freqrise/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include "freqrise/error.hpp"

namespace freqrise {
namespace {

constexpr std::size_t kTaps = 64;
constexpr double kKaiserBeta = 8.0;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

// Modified Bessel function I0 by its power series; converges quickly for the
// arguments used here (|x| <= kKaiserBeta).
double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 64 && term > 1e-17 * sum; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
  }
  return sum;
}

double kaiser(double x) {
  // x in [-1, 1]
  static const double norm = 1.0 / bessel_i0(kKaiserBeta);
  const double arg = 1.0 - x * x;
  if (arg <= 0.0) return 0.0;
  return bessel_i0(kKaiserBeta * std::sqrt(arg)) * norm;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

TimeSeries parse_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12) throw CorruptWav("file too short for a RIFF header");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "RIFF") || !std::equal(bytes.begin() + 8, bytes.begin() + 12, "WAVE"))
    throw UnsupportedWav("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* header = bytes.data() + pos;
    const std::uint32_t size = le32(header + 4);
    const std::size_t body = pos + 8;
    if (std::equal(header, header + 4, "fmt ")) {
      if (size < 16 || body + size > bytes.size()) throw CorruptWav("truncated fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = le16(bytes.data() + body + 24);  // extensible subformat
      have_fmt = true;
    } else if (std::equal(header, header + 4, "data")) {
      if (!have_fmt) throw CorruptWav("data chunk precedes fmt chunk");
      if (format != 1) throw UnsupportedWav("only PCM encoding is supported (format " + std::to_string(format) + ")");
      if (channels != 1) throw UnsupportedWav("only mono files are supported (" + std::to_string(channels) + " channels)");
      if (bits != 16) throw UnsupportedWav("only 16-bit samples are supported (" + std::to_string(bits) + " bits)");
      if (rate == 0) throw CorruptWav("sample rate is zero");
      if (body + size > bytes.size() || size % 2 != 0) throw CorruptWav("truncated data chunk");
      TimeSeries x;
      x.sample_rate_hz = static_cast<double>(rate);
      x.samples.resize(size / 2);
      for (std::size_t i = 0; i < x.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
        x.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return x;
    }
    pos = body + size + (size & 1U);
  }
  if (!have_fmt) throw CorruptWav("missing fmt chunk");
  throw CorruptWav("missing data chunk");
}

TimeSeries load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

void write_wav(const TimeSeries& x, const std::filesystem::path& path) {
  if (!(x.sample_rate_hz > 0.0)) throw InvalidSignal("sample rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const auto data_bytes = static_cast<std::uint32_t>(x.samples.size() * 2);
  const auto rate = static_cast<std::uint32_t>(std::lround(x.sample_rate_hz));
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  for (double v : x.samples) {
    const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

TimeSeries resample(const TimeSeries& x, double target_rate) {
  validate(x);
  if (!(target_rate > 0.0)) throw InvalidArgument("target rate must be positive");
  if (target_rate == x.sample_rate_hz) return x;

  const double step = x.sample_rate_hz / target_rate;  // input samples per output sample
  const double cutoff = std::min(1.0, 1.0 / step);     // relative to the input Nyquist
  const double half_width = static_cast<double>(kTaps / 2) / cutoff;  // in input samples
  const auto out_len = static_cast<std::size_t>(std::ceil(static_cast<double>(x.size()) / step - 1e-9));
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  TimeSeries y;
  y.sample_rate_hz = target_rate;
  y.samples.resize(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto first = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    const auto last = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    double acc = 0.0;
    double weight = 0.0;
    for (std::ptrdiff_t j = first; j <= last; ++j) {
      const double u = t - static_cast<double>(j);
      const double h = cutoff * sinc(cutoff * u) * kaiser(u / half_width);
      // Edge samples are renormalized by the in-range kernel weight.
      if (j < 0 || j >= n) continue;
      acc += h * x.samples[static_cast<std::size_t>(j)];
      weight += h;
    }
    y.samples[m] = weight != 0.0 ? acc / weight : 0.0;
  }
  return y;
}

TimeSeries preprocess_audio(const TimeSeries& x, const PreprocessConfig& cfg) {
  validate(x);
  if (!(cfg.target_rate > 0.0) || cfg.target_length == 0) throw InvalidArgument("invalid preprocessing config");
  if (x.sample_rate_hz < cfg.target_rate)
    throw InvalidArgument("input rate " + std::to_string(x.sample_rate_hz) + " Hz is below the target rate");
  TimeSeries y = resample(x, cfg.target_rate);
  if (y.size() > cfg.target_length)
    throw TooLong("resampled signal has " + std::to_string(y.size()) + " samples, limit is " +
                  std::to_string(cfg.target_length));
  y.samples.resize(cfg.target_length, 0.0);
  if (cfg.peak_normalize) {
    double peak = 0.0;
    for (double v : y.samples) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
      for (double& v : y.samples) v /= peak;
  }
  return y;
}

}  // namespace freqrise
