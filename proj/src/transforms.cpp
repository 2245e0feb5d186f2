#include "freqrise/transforms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "freqrise/error.hpp"

namespace freqrise {
namespace {

constexpr double kNormFloorRatio = 1e-8;

std::size_t parse_size(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InvalidArgument("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

// Reciprocal of the window-square sum, zero where the sum is below the floor.
std::vector<double> reciprocal_norm(std::size_t length, const WindowSpec& w) {
  auto sum = window_square_sum(length, w);
  const double peak = sum.empty() ? 0.0 : *std::max_element(sum.begin(), sum.end());
  if (!(peak > 0.0)) throw InvalidWindow("window-square sum vanishes everywhere; signal cannot be reconstructed");
  const double floor = kNormFloorRatio * peak;
  for (double& v : sum) v = v > floor ? 1.0 / v : 0.0;
  return sum;
}

void check_view(const SpectralView& s, Domain expected) {
  if (s.domain != expected) throw ShapeError("spectral view has the wrong domain for this inverse");
  if (s.coeffs.size() != s.shape.size()) throw ShapeError("coefficient count does not match view shape");
}

}  // namespace

void validate(const TimeSeries& x) {
  if (x.samples.size() < 2) throw InvalidSignal("signal must have at least 2 samples");
  if (!(x.sample_rate_hz > 0.0) || !std::isfinite(x.sample_rate_hz))
    throw InvalidSignal("sample rate must be positive");
  for (std::size_t i = 0; i < x.samples.size(); ++i)
    if (!std::isfinite(x.samples[i])) throw InvalidSignal("non-finite sample at index " + std::to_string(i));
}

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::Time: return "time";
    case Domain::Frequency: return "frequency";
    case Domain::TimeFrequency: return "timefreq";
  }
  return "unknown";
}

Domain parse_domain(std::string_view text) {
  if (text == "time") return Domain::Time;
  if (text == "frequency" || text == "freq") return Domain::Frequency;
  if (text == "timefreq" || text == "time-frequency" || text == "stdft") return Domain::TimeFrequency;
  throw InvalidArgument("unknown domain '" + std::string(text) + "'");
}

void validate(const WindowSpec& w) {
  if (w.length == 0) throw InvalidWindow("window length must be positive");
  if (w.hop == 0 || w.hop > w.length) throw InvalidWindow("window hop must be in [1, length]");
}

std::vector<double> window_samples(const WindowSpec& w) {
  validate(w);
  std::vector<double> out(w.length, 1.0);
  if (w.kind == WindowKind::Hann) {
    const double n = static_cast<double>(w.length);
    for (std::size_t i = 0; i < w.length; ++i)
      out[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  return out;
}

std::string to_string(const WindowSpec& w) {
  std::string kind = w.kind == WindowKind::Hann ? "hann" : "rect";
  return kind + ":" + std::to_string(w.length) + ":" + std::to_string(w.length - w.hop);
}

WindowSpec parse_window(std::string_view text) {
  auto first = text.find(':');
  auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos)
    throw InvalidArgument("window must look like kind:length:overlap, got '" + std::string(text) + "'");
  auto kind = text.substr(0, first);
  WindowSpec w;
  if (kind == "hann" || kind == "hanning") {
    w.kind = WindowKind::Hann;
  } else if (kind == "rect" || kind == "rectangular") {
    w.kind = WindowKind::Rectangular;
  } else {
    throw InvalidArgument("unknown window kind '" + std::string(kind) + "'");
  }
  w.length = parse_size(text.substr(first + 1, second - first - 1), "window length");
  const std::size_t overlap = parse_size(text.substr(second + 1), "window overlap");
  if (overlap >= w.length) throw InvalidWindow("window overlap must be smaller than its length");
  w.hop = w.length - overlap;
  validate(w);
  return w;
}

std::size_t onesided_bins(std::size_t length) { return length / 2 + 1; }

std::size_t stdft_frames(std::size_t length, const WindowSpec& w) {
  validate(w);
  if (length < w.length) throw InvalidWindow("window longer than signal");
  return 1 + (length - w.length) / w.hop;
}

SpectralView dft_onesided(const TimeSeries& x) {
  validate(x);
  const std::size_t n = x.size();
  SpectralView s;
  s.domain = Domain::Frequency;
  s.shape = {1, onesided_bins(n)};
  s.coeffs.resize(s.shape.size());
  s.origin_length = n;
  s.sample_rate_hz = x.sample_rate_hz;
  real_fft(n)->forward(x.samples, s.coeffs);
  return s;
}

TimeSeries idft_onesided(const SpectralView& s) {
  check_view(s, Domain::Frequency);
  if (s.origin_length < 2 || s.shape != DomainShape{1, onesided_bins(s.origin_length)})
    throw ShapeError("frequency view does not hold floor(T/2)+1 bins for its origin length");
  TimeSeries x;
  x.sample_rate_hz = s.sample_rate_hz;
  x.samples.resize(s.origin_length);
  real_fft(s.origin_length)->inverse(s.coeffs, x.samples);
  return x;
}

SpectralView stdft(const TimeSeries& x, const WindowSpec& w) {
  validate(x);
  const std::size_t frames = stdft_frames(x.size(), w);
  const std::size_t bins = onesided_bins(w.length);
  const auto window = window_samples(w);
  const auto fft = real_fft(w.length);

  SpectralView s;
  s.domain = Domain::TimeFrequency;
  s.shape = {frames, bins};
  s.coeffs.resize(s.shape.size());
  s.origin_length = x.size();
  s.window = w;
  s.sample_rate_hz = x.sample_rate_hz;

  std::vector<double> frame(w.length);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * w.hop;
    for (std::size_t i = 0; i < w.length; ++i) frame[i] = x.samples[start + i] * window[i];
    fft->forward(frame, std::span(s.coeffs).subspan(f * bins, bins));
  }
  return s;
}

std::vector<double> window_square_sum(std::size_t length, const WindowSpec& w) {
  const std::size_t frames = stdft_frames(length, w);
  const auto window = window_samples(w);
  std::vector<double> sum(length, 0.0);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t i = 0; i < w.length; ++i) sum[f * w.hop + i] += window[i] * window[i];
  return sum;
}

TimeSeries istdft(const SpectralView& s) {
  if (!s.window) throw InvalidWindow("time-frequency view carries no window");
  MaskedInverse inverse(s);
  TimeSeries x;
  x.sample_rate_hz = s.sample_rate_hz;
  x.samples.resize(s.origin_length);
  std::vector<double> ones(s.shape.size(), 1.0);
  inverse.apply(ones, x.samples);
  return x;
}

SpectralView forward_transform(const TimeSeries& x, Domain domain, const std::optional<WindowSpec>& window) {
  switch (domain) {
    case Domain::Time: {
      validate(x);
      SpectralView s;
      s.domain = Domain::Time;
      s.shape = {1, x.size()};
      s.coeffs.assign(x.samples.begin(), x.samples.end());
      s.origin_length = x.size();
      s.sample_rate_hz = x.sample_rate_hz;
      return s;
    }
    case Domain::Frequency: return dft_onesided(x);
    case Domain::TimeFrequency:
      if (!window) throw InvalidWindow("time-frequency domain requires a window");
      return stdft(x, *window);
  }
  throw InvalidArgument("unknown domain");
}

TimeSeries inverse_transform(const SpectralView& s) {
  switch (s.domain) {
    case Domain::Time: {
      check_view(s, Domain::Time);
      TimeSeries x;
      x.sample_rate_hz = s.sample_rate_hz;
      x.samples.reserve(s.coeffs.size());
      for (const auto& c : s.coeffs) x.samples.push_back(c.real());
      return x;
    }
    case Domain::Frequency: return idft_onesided(s);
    case Domain::TimeFrequency: return istdft(s);
  }
  throw InvalidArgument("unknown domain");
}

DomainShape domain_shape(std::size_t length, Domain domain, const std::optional<WindowSpec>& window) {
  switch (domain) {
    case Domain::Time: return {1, length};
    case Domain::Frequency: return {1, onesided_bins(length)};
    case Domain::TimeFrequency:
      if (!window) throw InvalidWindow("time-frequency domain requires a window");
      return {stdft_frames(length, *window), onesided_bins(window->length)};
  }
  throw InvalidArgument("unknown domain");
}

MaskedInverse::MaskedInverse(const SpectralView& view) : view_(view) {
  switch (view_.domain) {
    case Domain::Time:
      check_view(view_, Domain::Time);
      if (view_.origin_length != view_.coeffs.size()) throw ShapeError("time view length mismatch");
      break;
    case Domain::Frequency:
      check_view(view_, Domain::Frequency);
      if (view_.shape != DomainShape{1, onesided_bins(view_.origin_length)})
        throw ShapeError("frequency view does not hold floor(T/2)+1 bins for its origin length");
      fft_ = real_fft(view_.origin_length);
      break;
    case Domain::TimeFrequency: {
      check_view(view_, Domain::TimeFrequency);
      if (!view_.window) throw InvalidWindow("time-frequency view carries no window");
      const auto& w = *view_.window;
      if (view_.shape != DomainShape{stdft_frames(view_.origin_length, w), onesided_bins(w.length)})
        throw ShapeError("time-frequency view shape does not match its window and origin length");
      fft_ = real_fft(w.length);
      window_ = window_samples(w);
      norm_ = reciprocal_norm(view_.origin_length, w);
      break;
    }
  }
}

void MaskedInverse::apply(std::span<const double> mask, std::span<double> out) const {
  if (mask.size() != view_.coeffs.size()) throw ShapeError("mask size does not match view shape");
  if (out.size() != view_.origin_length) throw ShapeError("output length does not match origin length");

  switch (view_.domain) {
    case Domain::Time:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = view_.coeffs[i].real() * mask[i];
      return;
    case Domain::Frequency: {
      std::vector<Complex> masked(view_.coeffs.size());
      for (std::size_t k = 0; k < masked.size(); ++k) masked[k] = view_.coeffs[k] * mask[k];
      fft_->inverse(masked, out);
      return;
    }
    case Domain::TimeFrequency: {
      const auto& w = *view_.window;
      const std::size_t bins = view_.shape.cols;
      std::vector<Complex> masked(bins);
      std::vector<double> frame(w.length);
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t f = 0; f < view_.shape.rows; ++f) {
        const std::size_t offset = f * bins;
        for (std::size_t k = 0; k < bins; ++k) masked[k] = view_.coeffs[offset + k] * mask[offset + k];
        fft_->inverse(masked, frame);
        const std::size_t start = f * w.hop;
        for (std::size_t i = 0; i < w.length; ++i) out[start + i] += frame[i] * window_[i];
      }
      for (std::size_t t = 0; t < out.size(); ++t) out[t] *= norm_[t];
      return;
    }
  }
}

}  // namespace freqrise
