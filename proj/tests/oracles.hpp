#pragma once

// Test-only reference computations. Deliberately naive and independent of the
// library's code paths.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

inline std::vector<double> tone(double freq_hz, double fs, double seconds, double amp = 1.0,
                                double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

// Plain Pearson over the whole range.
inline double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Pearson of x[n] against y[n + k] over the overlap, for every k in [-L, L];
// returns the k with the largest value (first found on ties, scanning by |k|).
struct LagPeak {
  int lag = 0;
  double corr = -2.0;
};

inline double overlap_corr(const std::vector<double>& x, const std::vector<double>& y, int k) {
  const int n = static_cast<int>(x.size());
  const int lo = std::max(0, -k);
  const int hi = std::min(n, n - k);
  std::vector<double> a, b;
  for (int i = lo; i < hi; ++i) {
    a.push_back(x[static_cast<std::size_t>(i)]);
    b.push_back(y[static_cast<std::size_t>(i + k)]);
  }
  return corr(a, b);
}

inline LagPeak brute_force_lag(const std::vector<double>& x, const std::vector<double>& y,
                               int max_lag) {
  LagPeak best;
  for (int m = 0; m <= max_lag; ++m) {
    for (int k : {-m, m}) {
      if (m == 0 && k < 0) continue;
      const double c = overlap_corr(x, y, k);
      if (c > best.corr) best = {k, c};
    }
  }
  return best;
}

// |H(e^{jw})| of a rational transfer function given as numerator/denominator
// polynomials in z^-1 (Horner on the full expanded polynomials).
inline double poly_magnitude(const std::vector<double>& b, const std::vector<double>& a,
                             double freq_hz, double fs) {
  const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / fs);
  auto eval = [&](const std::vector<double>& p) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * zinv + p[i];
    return acc;
  };
  return std::abs(eval(b) / eval(a));
}

inline std::vector<double> poly_mul(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

// Direct (O(N^2)) DFT power at bin k for an N-point zero-padded transform.
inline double dft_power(const std::vector<double>& x, std::size_t nfft, std::size_t k) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % nfft) /
                                      static_cast<double>(nfft));
  }
  return std::norm(acc);
}

inline double rms(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  double s = 0;
  for (std::size_t i = lo; i < hi; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(hi - lo));
}

}  // namespace oracle
