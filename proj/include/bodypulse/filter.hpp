#pragma once

#include "bodypulse/waveform.hpp"

#include <array>
#include <complex>
#include <vector>

namespace bodypulse {

// Butterworth band-pass request. Cutoffs are in beats per minute; Hz = bpm / 60.
// `order` is the one-pass design order (the cascade has 2 * order poles).
struct BandpassSpec {
  int order = 4;
  double low_bpm = 40.0;
  double high_bpm = 180.0;

  double low_hz() const noexcept { return low_bpm / 60.0; }
  double high_hz() const noexcept { return high_bpm / 60.0; }

  // Throws ErrorKind::InvalidSpec unless 0 < low < high < Nyquist and order > 0.
  void validate(double sample_rate_hz) const;
};

// Pulse band used for every rPPG waveform.
inline constexpr BandpassSpec kRppgBand{4, 40.0, 180.0};

// Direct-form-II-transposed biquad, a0 normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

// Digital IIR filter as a cascade of second-order sections.
struct FilterCoefficients {
  std::vector<Biquad> sections;
  double sample_rate_hz = 0.0;
  int design_order = 0;

  // Complex response H(e^{j 2 pi f / fs}) of the full cascade.
  std::complex<double> response(double freq_hz) const;
  double magnitude_db(double freq_hz) const;
  // All 2 * design_order poles in the z-plane.
  std::vector<std::complex<double>> poles() const;
};

// Butterworth band-pass via the analog low-pass prototype, low-pass to
// band-pass mapping, and the bilinear transform with pre-warped cutoffs.
// Unity gain at the geometric centre of the band.
FilterCoefficients design_bandpass(const BandpassSpec& spec, double sample_rate_hz);

// Single causal pass through the cascade, starting from rest.
std::vector<double> filter_causal(const FilterCoefficients& f, std::span<const double> x);

// Forward-backward filtering with odd reflection padding of 3 * order samples
// per end and steady-state initial conditions. Zero net phase.
Waveform bandpass_zero_phase(const Waveform& w, const FilterCoefficients& f);

// Convenience: design for w's rate, then filter.
Waveform bandpass_zero_phase(const Waveform& w, const BandpassSpec& spec);

}  // namespace bodypulse
