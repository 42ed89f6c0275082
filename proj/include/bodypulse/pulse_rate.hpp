#pragma once

#include "bodypulse/signal.hpp"
#include "bodypulse/waveform.hpp"

#include <optional>
#include <span>
#include <vector>

namespace bodypulse {

struct RateBand {
  double low_bpm = 40.0;
  double high_bpm = 180.0;
};

struct RateEntry {
  double time_s = 0.0;
  // Empty when the window carried no signal (all-zero); excluded from metrics.
  std::optional<double> bpm;
};

struct PulseRateSeries {
  std::vector<RateEntry> entries;
  double window_length_s = 10.0;
  double stride_s = 1.0;
  RateBand band;

  std::size_t missing_count() const;
};

// Default STFT plans: global analysis strides 1 s, grid analysis uses
// non-overlapping windows.
inline constexpr WindowPlan kGlobalRatePlan{10.0, 1.0};
inline constexpr WindowPlan kGridRatePlan{10.0, 10.0};

// FFT length giving bin spacing <= 0.5 bpm: next power of two >= 120 * fs,
// and never shorter than the window itself.
std::size_t rate_fft_length(double sample_rate_hz, std::size_t window_samples);

// Hann taper (symmetric) of length n.
std::vector<double> hann(std::size_t n);

// Magnitude (or power) spectrum of a mean-removed, Hann-tapered, zero-padded
// window; returns bins 0..nfft/2.
std::vector<double> tapered_spectrum(std::span<const double> window, std::size_t nfft,
                                     bool power = false);

// bpm of the largest in-band bin; ties go to the lower frequency.
double spectral_peak(std::span<const double> spectrum, double bin_spacing_bpm, RateBand band);

PulseRateSeries stft_pulse_rate(const Waveform& w, const WindowPlan& plan = kGlobalRatePlan,
                                RateBand band = {});

}  // namespace bodypulse
