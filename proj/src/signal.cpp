#include "bodypulse/signal.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace bodypulse {

void WindowPlan::validate() const {
  if (!(length_s > 0.0) || !(stride_s > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "window plan: length and stride must be positive");
  }
}

std::size_t WindowPlan::length_samples(double sample_rate_hz) const {
  return static_cast<std::size_t>(std::llround(length_s * sample_rate_hz));
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "pearson: need two equal-length series of >= 2");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Waveform z_normalize(const Waveform& w) {
  const auto x = w.samples();
  const double m = mean(x);
  const double s = stddev(x);
  // Relative threshold: a constant signal leaves only rounding residue.
  const double scale = std::max(std::abs(m), 1.0);
  if (x.size() < 2 || !(s > 1e-12 * scale)) {
    throw Error(ErrorKind::ZeroVariance, "z-normalize: signal has zero variance");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / s;
  return w.with_samples(std::move(out));
}

Waveform hilbert_envelope(const Waveform& w) {
  const std::size_t n = w.size();
  if (n < 8) {
    throw Error(ErrorKind::SignalTooShort, "hilbert envelope: need at least 8 samples");
  }
  // Exact-length transform: a zero-padded one rings near the edges.
  std::vector<std::complex<double>> spec(w.values().begin(), w.values().end());
  dft_inplace(spec);
  // Analytic signal: keep DC (and Nyquist for even n), double positive, zero negative bins.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t k = 1; k < half; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
  dft_inplace(spec, true);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(spec[i]) / static_cast<double>(n);
  return w.with_samples(std::move(env));
}

Waveform normalize_by_envelope(const Waveform& w) {
  const Waveform env = hilbert_envelope(w);
  std::vector<double> sorted = env.values();
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                   sorted.end());
  const double floor_value = 1e-6 * sorted[sorted.size() / 2];
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double e = std::max(env[i], floor_value);
    out[i] = e > 0.0 ? w[i] / e : 0.0;
  }
  return w.with_samples(std::move(out));
}

Waveform resample_linear(const Waveform& w, double new_rate_hz) {
  if (!(new_rate_hz > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "resample: target rate must be positive");
  }
  const double old_rate = w.sample_rate_hz();
  if (new_rate_hz == old_rate) return w;
  const auto x = w.samples();
  const std::size_t n_out = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * new_rate_hz / old_rate)));
  std::vector<double> out(n_out);
  const double last = static_cast<double>(x.size() - 1);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = std::min(static_cast<double>(i) * old_rate / new_rate_hz, last);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out[i] = x[lo] + frac * (x[hi] - x[lo]);
  }
  return Waveform(std::move(out), new_rate_hz, w.start_time_s());
}

std::vector<std::size_t> window_starts(std::size_t n_samples, double sample_rate_hz,
                                       const WindowPlan& plan) {
  plan.validate();
  const std::size_t len = plan.length_samples(sample_rate_hz);
  std::vector<std::size_t> starts;
  if (len == 0 || len > n_samples) return starts;
  const double stride = plan.stride_s * sample_rate_hz;
  for (std::size_t k = 0;; ++k) {
    const auto s = static_cast<std::size_t>(std::llround(static_cast<double>(k) * stride));
    if (s + len > n_samples) break;
    if (!starts.empty() && s == starts.back()) continue;
    starts.push_back(s);
  }
  return starts;
}

std::vector<WindowSlice> windows(const Waveform& w, const WindowPlan& plan) {
  const std::size_t len = plan.length_samples(w.sample_rate_hz());
  std::vector<WindowSlice> out;
  for (std::size_t s : window_starts(w.size(), w.sample_rate_hz(), plan)) {
    out.push_back({s, w.slice(s, len)});
  }
  return out;
}

}  // namespace bodypulse
