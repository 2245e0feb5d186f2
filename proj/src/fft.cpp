#include "freqrise/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "freqrise/error.hpp"

namespace freqrise {
namespace {

Complex unit_root(std::size_t k, std::size_t n) {
  // exp(-2*pi*i*k/n), with k reduced to keep the angle small.
  k %= n;
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> factors;
  while (n % 4 == 0) {
    factors.push_back(4);
    n /= 4;
  }
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      factors.push_back(p);
      n /= p;
    }
  }
  if (n > 1) factors.push_back(n);
  return factors;
}

template <typename Cache, typename Make>
auto cached(Cache& cache, std::mutex& mutex, std::size_t n, Make make) {
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = make(n);
  cache.emplace(n, plan);
  return plan;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("FFT length must be positive");
  if (n == 1) return;

  auto factors = factorize(n);
  for (std::size_t f : factors) {
    if (f > kMaxDirectRadix) {
      std::size_t m = 1;
      while (m < 2 * n - 1) m <<= 1;
      conv_plan_ = fft_plan(m);
      chirp_.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        // exp(-i*pi*k^2/n); k^2 reduced mod 2n to keep precision.
        const std::size_t kk = (k * k) % (2 * n);
        const double angle = -std::numbers::pi * static_cast<double>(kk) / static_cast<double>(n);
        chirp_[k] = {std::cos(angle), std::sin(angle)};
      }
      std::vector<Complex> kernel(m, Complex{});
      kernel[0] = std::conj(chirp_[0]);
      for (std::size_t k = 1; k < n; ++k) {
        kernel[k] = std::conj(chirp_[k]);
        kernel[m - k] = std::conj(chirp_[k]);
      }
      chirp_spectrum_.resize(m);
      conv_plan_->forward(kernel, chirp_spectrum_);
      return;
    }
  }

  std::size_t span = n;
  std::size_t stride = 1;
  for (std::size_t radix : factors) {
    Stage stage{radix, span, stride, {}};
    const std::size_t m = span / radix;
    stage.twiddles.resize(m * radix);
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t k = 0; k < radix; ++k) stage.twiddles[p * radix + k] = unit_root(p * k, span);
    stages_.push_back(std::move(stage));
    span = m;
    stride *= radix;
  }
}

void FftPlan::forward(std::span<const Complex> in, std::span<Complex> out) const {
  transform(in, out, false);
}

void FftPlan::inverse(std::span<const Complex> in, std::span<Complex> out) const {
  transform(in, out, true);
}

void FftPlan::transform(std::span<const Complex> in, std::span<Complex> out, bool inverse) const {
  if (in.size() != n_ || out.size() != n_) throw ShapeError("FFT buffer length does not match plan length");
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  if (conv_plan_) {
    bluestein(in, out, inverse);
    return;
  }
  std::vector<Complex> data(in.begin(), in.end());
  std::vector<Complex> work(n_);
  stockham(data, work, inverse);
  std::copy(data.begin(), data.end(), out.begin());
}

// Decimation in frequency, autosorting. At a stage with sub-length `span`,
// radix r and stride s, each of the s interleaved sequences x[q + s*i] is
// split into r sequences whose DFTs land, in natural order, at stride s*r.
void FftPlan::stockham(std::vector<Complex>& data, std::vector<Complex>& work, bool inverse) const {
  std::vector<Complex> butterfly;
  std::vector<Complex> roots;
  for (const Stage& st : stages_) {
    const std::size_t r = st.radix;
    const std::size_t m = st.span / r;
    const std::size_t s = st.stride;
    const Complex* x = data.data();
    Complex* y = work.data();
    auto twiddle = [&](std::size_t p, std::size_t k) {
      const Complex w = st.twiddles[p * r + k];
      return inverse ? std::conj(w) : w;
    };

    if (r == 2) {
      for (std::size_t p = 0; p < m; ++p) {
        const Complex w1 = twiddle(p, 1);
        for (std::size_t q = 0; q < s; ++q) {
          const Complex a = x[q + s * p];
          const Complex b = x[q + s * (p + m)];
          y[q + s * (2 * p)] = a + b;
          y[q + s * (2 * p + 1)] = (a - b) * w1;
        }
      }
    } else if (r == 4) {
      // -i for forward, +i for inverse.
      const double sign = inverse ? 1.0 : -1.0;
      for (std::size_t p = 0; p < m; ++p) {
        const Complex w1 = twiddle(p, 1);
        const Complex w2 = twiddle(p, 2);
        const Complex w3 = twiddle(p, 3);
        for (std::size_t q = 0; q < s; ++q) {
          const Complex a0 = x[q + s * p];
          const Complex a1 = x[q + s * (p + m)];
          const Complex a2 = x[q + s * (p + 2 * m)];
          const Complex a3 = x[q + s * (p + 3 * m)];
          const Complex t0 = a0 + a2;
          const Complex t1 = a0 - a2;
          const Complex t2 = a1 + a3;
          const Complex d = a1 - a3;
          const Complex t3{-sign * d.imag(), sign * d.real()};  // d * (sign * i)
          y[q + s * (4 * p)] = t0 + t2;
          y[q + s * (4 * p + 1)] = (t1 + t3) * w1;
          y[q + s * (4 * p + 2)] = (t0 - t2) * w2;
          y[q + s * (4 * p + 3)] = (t1 - t3) * w3;
        }
      }
    } else {
      butterfly.resize(r);
      roots.resize(r);
      for (std::size_t k = 0; k < r; ++k) roots[k] = inverse ? std::conj(unit_root(k, r)) : unit_root(k, r);
      for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < s; ++q) {
          for (std::size_t k = 0; k < r; ++k) {
            Complex acc{};
            for (std::size_t j = 0; j < r; ++j) acc += x[q + s * (p + j * m)] * roots[(j * k) % r];
            butterfly[k] = acc;
          }
          for (std::size_t k = 0; k < r; ++k) y[q + s * (r * p + k)] = butterfly[k] * twiddle(p, k);
        }
      }
    }
    data.swap(work);
  }
}

void FftPlan::bluestein(std::span<const Complex> in, std::span<Complex> out, bool inverse) const {
  const std::size_t m = conv_plan_->size();
  auto chirp = [&](std::size_t k) { return inverse ? std::conj(chirp_[k]) : chirp_[k]; };
  std::vector<Complex> a(m, Complex{});
  for (std::size_t k = 0; k < n_; ++k) a[k] = in[k] * chirp(k);
  conv_plan_->forward(a, a);
  for (std::size_t k = 0; k < m; ++k) {
    const Complex b = inverse ? std::conj(chirp_spectrum_[(m - k) % m]) : chirp_spectrum_[k];
    a[k] *= b;
  }
  conv_plan_->inverse(a, a);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * scale * chirp(k);
}

std::shared_ptr<const FftPlan> fft_plan(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  static std::mutex mutex;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  // Built outside the lock: Bluestein plans request their own sub-plan.
  auto plan = std::make_shared<const FftPlan>(n);
  std::lock_guard lock(mutex);
  return cache.emplace(n, std::move(plan)).first->second;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw InvalidArgument("real FFT length must be at least 2");
  if (n % 2 == 0) {
    const std::size_t h = n / 2;
    plan_ = fft_plan(h);
    rotation_.resize(h);
    for (std::size_t k = 0; k < h; ++k) rotation_[k] = unit_root(k, n);
  } else {
    plan_ = fft_plan(n);
  }
}

void RealFft::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != n_ || out.size() != bins()) throw ShapeError("real FFT buffer length mismatch");
  if (n_ % 2 == 1) {
    std::vector<Complex> buf(in.begin(), in.end());
    plan_->forward(buf, buf);
    std::copy_n(buf.begin(), bins(), out.begin());
    return;
  }
  const std::size_t h = n_ / 2;
  std::vector<Complex> z(h);
  for (std::size_t j = 0; j < h; ++j) z[j] = {in[2 * j], in[2 * j + 1]};
  plan_->forward(z, z);
  // X[k] = E[k] + w^k O[k] with E = (Z[k] + conj Z[h-k]) / 2, O = (Z[k] - conj Z[h-k]) / 2i.
  for (std::size_t k = 0; k <= h; ++k) {
    const Complex zk = z[k % h];
    const Complex zc = std::conj(z[(h - k) % h]);
    const Complex even = 0.5 * (zk + zc);
    const Complex diff = 0.5 * (zk - zc);
    const Complex odd{diff.imag(), -diff.real()};  // diff / i
    const Complex w = k < h ? rotation_[k] : Complex{-1.0, 0.0};
    out[k] = even + w * odd;
  }
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) throw ShapeError("real FFT buffer length mismatch");
  const double scale = 1.0 / static_cast<double>(n_);
  if (n_ % 2 == 1) {
    std::vector<Complex> full(n_);
    full[0] = {in[0].real(), 0.0};
    for (std::size_t k = 1; k < bins(); ++k) {
      full[k] = in[k];
      full[n_ - k] = std::conj(in[k]);
    }
    plan_->inverse(full, full);
    for (std::size_t j = 0; j < n_; ++j) out[j] = full[j].real() * scale;
    return;
  }
  const std::size_t h = n_ / 2;
  std::vector<Complex> z(h);
  for (std::size_t k = 0; k < h; ++k) {
    Complex xk = in[k];
    Complex xm = in[h - k];
    if (k == 0) {
      xk = {xk.real(), 0.0};
      xm = {xm.real(), 0.0};
    }
    const Complex xc = std::conj(xm);
    const Complex even = 0.5 * (xk + xc);
    const Complex odd = 0.5 * (xk - xc) * std::conj(rotation_[k]);
    z[k] = even + Complex{-odd.imag(), odd.real()};  // even + i * odd
  }
  plan_->inverse(z, z);
  // The unnormalized half-length inverse returns h * z.
  const double sub_scale = 2.0 * scale;
  for (std::size_t j = 0; j < h; ++j) {
    out[2 * j] = z[j].real() * sub_scale;
    out[2 * j + 1] = z[j].imag() * sub_scale;
  }
}

std::shared_ptr<const RealFft> real_fft(std::size_t n) {
  static std::map<std::size_t, std::shared_ptr<const RealFft>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, n, [](std::size_t len) { return std::make_shared<const RealFft>(len); });
}

}  // namespace freqrise
