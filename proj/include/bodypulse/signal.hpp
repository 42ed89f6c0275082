#pragma once

#include "bodypulse/waveform.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace bodypulse {

// Sliding-window layout in seconds. Windows past the end of the signal are
// dropped, never truncated. length < stride (gaps) is allowed.
struct WindowPlan {
  double length_s = 10.0;
  double stride_s = 1.0;

  void validate() const;
  // round(length_s * fs)
  std::size_t length_samples(double sample_rate_hz) const;
};

struct WindowSlice {
  std::size_t start_index = 0;
  Waveform wave;
};

double mean(std::span<const double> x);
// Population standard deviation.
double stddev(std::span<const double> x);
// Pearson product-moment correlation; NaN if either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Throws ErrorKind::ZeroVariance for constant input (or fewer than 2 samples).
Waveform z_normalize(const Waveform& w);

// Magnitude of the analytic signal, from an exact-length DFT of w.
// Requires at least 8 samples.
Waveform hilbert_envelope(const Waveform& w);

// Divides w by its Hilbert envelope, with the envelope floored at
// 1e-6 * median(envelope) so quiet stretches do not blow up.
Waveform normalize_by_envelope(const Waveform& w);

// Linear interpolation onto a new uniform grid with the same start time and
// the same covered span (size * new_rate / old_rate samples, rounded).
Waveform resample_linear(const Waveform& w, double new_rate_hz);

// Start indices of every full window; index k starts at round(k * stride * fs).
std::vector<std::size_t> window_starts(std::size_t n_samples, double sample_rate_hz,
                                       const WindowPlan& plan);

std::vector<WindowSlice> windows(const Waveform& w, const WindowPlan& plan);

}  // namespace bodypulse
