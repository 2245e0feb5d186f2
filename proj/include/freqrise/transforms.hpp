#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqrise/fft.hpp"

namespace freqrise {

// Univariate, real-valued signal.
struct TimeSeries {
  std::vector<double> samples;
  double sample_rate_hz = 1.0;

  std::size_t size() const noexcept { return samples.size(); }
};

// Throws InvalidSignal unless T >= 2, all samples finite and the rate positive.
void validate(const TimeSeries& x);

enum class Domain { Time, Frequency, TimeFrequency };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view text);  // "time" | "frequency" | "timefreq"

enum class WindowKind { Hann, Rectangular };

struct WindowSpec {
  WindowKind kind = WindowKind::Hann;
  std::size_t length = 455;
  std::size_t hop = 35;

  bool operator==(const WindowSpec&) const = default;
};

void validate(const WindowSpec& w);
std::vector<double> window_samples(const WindowSpec& w);
std::string to_string(const WindowSpec& w);  // "hann:455:420" (kind:length:overlap)
WindowSpec parse_window(std::string_view text);

// Row-major shape of an explanation domain: 1 x T (time), 1 x F (frequency)
// or frames x bins (time-frequency).
struct DomainShape {
  std::size_t rows = 1;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const DomainShape&) const = default;
};

std::size_t onesided_bins(std::size_t length);
std::size_t stdft_frames(std::size_t length, const WindowSpec& w);

// Coefficients of a signal in an explanation domain. Time views carry the
// samples as real-valued coefficients.
struct SpectralView {
  Domain domain = Domain::Frequency;
  DomainShape shape;
  std::vector<Complex> coeffs;  // row-major, shape.size() entries
  std::size_t origin_length = 0;
  std::optional<WindowSpec> window;
  double sample_rate_hz = 1.0;
};

SpectralView dft_onesided(const TimeSeries& x);
TimeSeries idft_onesided(const SpectralView& s);

SpectralView stdft(const TimeSeries& x, const WindowSpec& w);
TimeSeries istdft(const SpectralView& s);

// Window-square sum sum_i w^2(t - i*hop) over the frames of a length-T signal.
std::vector<double> window_square_sum(std::size_t length, const WindowSpec& w);

// Dispatch on domain: identity view for Time, DFT, or STDFT (window required).
SpectralView forward_transform(const TimeSeries& x, Domain domain,
                               const std::optional<WindowSpec>& window = std::nullopt);
TimeSeries inverse_transform(const SpectralView& s);

// Shape of `domain` for a length-T signal without computing coefficients.
DomainShape domain_shape(std::size_t length, Domain domain,
                         const std::optional<WindowSpec>& window = std::nullopt);

// Reusable inverse for masked views of one fixed SpectralView: writes
// g^-1(view .* mask) into `out` (length origin_length). Thread-safe.
class MaskedInverse {
 public:
  explicit MaskedInverse(const SpectralView& view);

  void apply(std::span<const double> mask, std::span<double> out) const;

  const SpectralView& view() const noexcept { return view_; }

 private:
  SpectralView view_;
  std::shared_ptr<const RealFft> fft_;
  std::vector<double> window_;
  std::vector<double> norm_;  // reciprocal window-square sum, 0 outside support
};

}  // namespace freqrise
