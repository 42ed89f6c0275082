#include "bodypulse/pulse_rate.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bodypulse {

std::size_t PulseRateSeries::missing_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const RateEntry& e) { return !e.bpm; }));
}

std::size_t rate_fft_length(double sample_rate_hz, std::size_t window_samples) {
  const auto min_points = static_cast<std::size_t>(std::ceil(60.0 * sample_rate_hz / 0.5));
  return next_pow2(std::max(min_points, window_samples));
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  }
  return w;
}

std::vector<double> tapered_spectrum(std::span<const double> window, std::size_t nfft, bool power) {
  const double m = mean(window);
  const std::vector<double> taper = hann(window.size());
  std::vector<double> x(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) x[i] = (window[i] - m) * taper[i];
  const auto spec = fft_real(x, nfft);
  std::vector<double> out(nfft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = power ? std::norm(spec[k]) : std::abs(spec[k]);
  }
  return out;
}

double spectral_peak(std::span<const double> spectrum, double bin_spacing_bpm, RateBand band) {
  if (!(bin_spacing_bpm > 0.0) || spectrum.empty()) {
    throw Error(ErrorKind::InvalidArgument, "spectral peak: empty spectrum or bad bin spacing");
  }
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(band.low_bpm / bin_spacing_bpm - 1e-9)));
  const double last_d = std::floor(band.high_bpm / bin_spacing_bpm + 1e-9);
  if (last_d < 0.0 || first >= spectrum.size()) {
    throw Error(ErrorKind::InvalidArgument, "spectral peak: band lies outside the spectrum");
  }
  const std::size_t last = std::min(static_cast<std::size_t>(last_d), spectrum.size() - 1);
  if (last < first + 1) {
    std::ostringstream msg;
    msg << "spectral peak: band [" << band.low_bpm << ", " << band.high_bpm
        << "] bpm covers fewer than 2 bins";
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  std::size_t best = first;
  for (std::size_t k = first + 1; k <= last; ++k) {
    if (spectrum[k] > spectrum[best]) best = k;
  }
  return static_cast<double>(best) * bin_spacing_bpm;
}

PulseRateSeries stft_pulse_rate(const Waveform& w, const WindowPlan& plan, RateBand band) {
  const double fs = w.sample_rate_hz();
  if (!(band.low_bpm > 0.0) || !(band.high_bpm > band.low_bpm) || band.high_bpm >= 30.0 * fs) {
    throw Error(ErrorKind::InvalidArgument, "stft: band must lie within (0, Nyquist)");
  }
  PulseRateSeries series;
  series.window_length_s = plan.length_s;
  series.stride_s = plan.stride_s;
  series.band = band;
  const std::size_t len = plan.length_samples(fs);
  const auto starts = window_starts(w.size(), fs, plan);
  if (starts.empty()) return series;
  const std::size_t nfft = rate_fft_length(fs, len);
  const double spacing = 60.0 * fs / static_cast<double>(nfft);
  const auto x = w.samples();
  for (std::size_t s : starts) {
    const auto win = x.subspan(s, len);
    RateEntry e;
    e.time_s = w.time_at(s) + 0.5 * static_cast<double>(len) / fs;
    // All-zero or constant windows carry no rate.
    const bool silent = !(stddev(win) > 1e-12 * std::max(1.0, std::abs(mean(win))));
    if (!silent) e.bpm = spectral_peak(tapered_spectrum(win, nfft), spacing, band);
    series.entries.push_back(e);
  }
  return series;
}

}  // namespace bodypulse
