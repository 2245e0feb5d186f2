// Reference computations for tests, written independently of the library's
// FFT, transforms and estimator.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// Full DFT by direct summation, X_k = sum_t x_t exp(-2 pi i k t / n).
inline std::vector<cplx> dft(const std::vector<cplx>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  const long double sign = inverse ? 1.0L : -1.0L;
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double a = sign * 2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) /
                            static_cast<long double>(n);
      const long double c = std::cos(a), s = std::sin(a);
      re += x[t].real() * c - x[t].imag() * s;
      im += x[t].real() * s + x[t].imag() * c;
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

inline std::vector<cplx> dft_onesided(const std::vector<double>& x) {
  std::vector<cplx> full(x.begin(), x.end());
  auto spec = dft(full);
  spec.resize(x.size() / 2 + 1);
  return spec;
}

// Real inverse of a one-sided spectrum with Hermitian mirror, 1/n scaling.
inline std::vector<double> idft_onesided(const std::vector<cplx>& half, std::size_t n) {
  std::vector<cplx> full(n);
  for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
  for (std::size_t k = 1; k < n - n / 2; ++k) full[n - k] = std::conj(half[k]);
  if (n % 2 == 0) full[n / 2] = half[n / 2].real();
  full[0] = half[0].real();
  const auto time = dft(full, true);
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = time[t].real() / static_cast<double>(n);
  return out;
}

// Periodic Hann window.
inline std::vector<double> hann(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length));
  return w;
}

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  return x;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0;
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s += out[i] = std::exp(z[i] - m);
  for (double& v : out) v /= s;
  return out;
}

// Area under (0, y0), (xs[i], ys[i]) by the trapezoid rule, divided by xs.back().
inline double mean_height(double y0, const std::vector<double>& xs, const std::vector<double>& ys) {
  double area = 0, px = 0, py = y0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    area += (xs[i] - px) * (ys[i] + py) / 2;
    px = xs[i];
    py = ys[i];
  }
  return area / xs.back();
}

}  // namespace oracle
