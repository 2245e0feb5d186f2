#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace freqrise {

using Complex = std::complex<double>;

// Complex DFT of a fixed length. Plans are immutable once built, so one plan
// may be shared by any number of threads.
//
// Composite lengths run a Stockham autosort transform over the factorization
// (radix 4, 2, 3, 5 and generic small primes); lengths with a prime factor
// above kMaxDirectRadix fall back to Bluestein's chirp-z algorithm.
class FftPlan {
 public:
  static constexpr std::size_t kMaxDirectRadix = 31;

  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // Unnormalized transforms: forward uses exp(-2*pi*i*j*k/n), inverse
  // exp(+2*pi*i*j*k/n). `in` and `out` may alias.
  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

 private:
  struct Stage {
    std::size_t radix;
    std::size_t span;        // sub-transform length at this stage
    std::size_t stride;
    std::vector<Complex> twiddles;  // (span / radix) x radix
  };

  void transform(std::span<const Complex> in, std::span<Complex> out, bool inverse) const;
  void stockham(std::vector<Complex>& data, std::vector<Complex>& work, bool inverse) const;
  void bluestein(std::span<const Complex> in, std::span<Complex> out, bool inverse) const;

  std::size_t n_;
  std::vector<Stage> stages_;
  // Bluestein state.
  std::shared_ptr<const FftPlan> conv_plan_;
  std::vector<Complex> chirp_;
  std::vector<Complex> chirp_spectrum_;
};

// Shared plan for length n, built on first request.
std::shared_ptr<const FftPlan> fft_plan(std::size_t n);

// One-sided transforms of real sequences (n/2 + 1 bins). Even lengths use a
// half-length complex transform.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // Unnormalized forward transform into bins() coefficients.
  void forward(std::span<const double> in, std::span<Complex> out) const;

  // Inverse with 1/n scaling. The spectrum is read as one side of a Hermitian
  // spectrum: imaginary parts of the DC and (even n) Nyquist bins are ignored.
  void inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  std::size_t n_;
  std::shared_ptr<const FftPlan> plan_;  // length n/2 (even) or n (odd)
  std::vector<Complex> rotation_;        // exp(-2*pi*i*k/n), k < n/2 (even n)
};

std::shared_ptr<const RealFft> real_fft(std::size_t n);

}  // namespace freqrise
