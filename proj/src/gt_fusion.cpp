#include "bodypulse/gt_fusion.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bodypulse {

void SensorBank::validate() const {
  if (channels.empty()) throw Error(ErrorKind::InvalidArgument, "fusion: sensor bank is empty");
  const double fs = channels.front().wave.sample_rate_hz();
  for (const SiteWave& c : channels) {
    if (c.wave.sample_rate_hz() != fs) {
      throw Error(ErrorKind::InvalidArgument,
                  "fusion: channel '" + c.site + "' has a different sample rate");
    }
  }
  for (double v : oximeter_bpm.values()) {
    if (v < 30.0 || v > 240.0) {
      std::ostringstream msg;
      msg << "fusion: oximeter rate " << v << " bpm outside [30, 240]";
      throw Error(ErrorKind::InvalidArgument, msg.str());
    }
  }
  if (!(delta_y_bpm > 0.0)) throw Error(ErrorKind::InvalidArgument, "fusion: delta Y must be positive");
}

FusionResult fuse_ground_truth(const SensorBank& bank, const FusionConfig& cfg) {
  bank.validate();
  const double fs = bank.channels.front().wave.sample_rate_hz();

  // Common span of all channels on the shared sample grid.
  double t0 = -1e300;
  double t1 = 1e300;
  for (const SiteWave& c : bank.channels) {
    t0 = std::max(t0, c.wave.start_time_s());
    t1 = std::min(t1, c.wave.start_time_s() + c.wave.duration_s());
  }
  const auto n = static_cast<std::size_t>(std::max(0.0, std::floor((t1 - t0) * fs + 1e-6)));
  const std::size_t len = cfg.plan.length_samples(fs);
  const auto starts = window_starts(n, fs, cfg.plan);
  if (starts.empty()) {
    std::ostringstream msg;
    msg << "fusion: common span of " << static_cast<double>(n) / fs << " s is shorter than the "
        << cfg.plan.length_s << " s window";
    throw Error(ErrorKind::SignalTooShort, msg.str());
  }

  std::vector<std::span<const double>> aligned;
  for (const SiteWave& c : bank.channels) {
    const auto offset = static_cast<std::size_t>(std::llround((t0 - c.wave.start_time_s()) * fs));
    aligned.push_back(c.wave.samples().subspan(offset, n));
  }

  const Waveform oxi = resample_linear(bank.oximeter_bpm, fs);
  auto oximeter_at = [&](double t) {
    const double pos = std::round((t - oxi.start_time_s()) * fs);
    const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(oxi.size() - 1)));
    return oxi[idx];
  };

  const double nyquist_bpm = 30.0 * fs;
  FusionDiagnostics diag;
  diag.windows = starts.size();
  std::vector<double> acc(n, 0.0);
  std::vector<std::size_t> hits(n, 0);
  std::vector<double> window_sum(len);
  for (std::size_t s : starts) {
    const double centre = t0 + (static_cast<double>(s) + 0.5 * static_cast<double>(len)) / fs;
    const double y = oximeter_at(centre);
    BandpassSpec band{cfg.filter_order, std::max(y - bank.delta_y_bpm, cfg.min_low_bpm),
                      std::min(y + bank.delta_y_bpm, 0.99 * nyquist_bpm)};
    const FilterCoefficients f = design_bandpass(band, fs);

    std::fill(window_sum.begin(), window_sum.end(), 0.0);
    std::size_t used = 0;
    for (const auto& ch : aligned) {
      const Waveform win(std::vector<double>(ch.begin() + static_cast<std::ptrdiff_t>(s),
                                             ch.begin() + static_cast<std::ptrdiff_t>(s + len)),
                         fs);
      Waveform z = win;
      try {
        z = z_normalize(win);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ZeroVariance) throw;
        ++diag.skipped_channel_windows;
        continue;
      }
      const Waveform filtered = bandpass_zero_phase(z, f);
      for (std::size_t i = 0; i < len; ++i) window_sum[i] += filtered[i];
      ++used;
    }
    if (used == 0) diag.empty_window_times_s.push_back(t0 + static_cast<double>(s) / fs);
    for (std::size_t i = 0; i < len; ++i) {
      acc[s + i] += window_sum[i];
      ++hits[s + i];
    }
  }
  // Samples past the last full window are not covered; trim them.
  std::size_t covered = n;
  while (covered > 0 && hits[covered - 1] == 0) --covered;
  acc.resize(covered);
  for (std::size_t i = 0; i < covered; ++i) {
    if (hits[i] > 0) acc[i] /= static_cast<double>(hits[i]);
  }

  Waveform combined(std::move(acc), fs, t0);
  return {normalize_by_envelope(combined), std::move(diag)};
}

PulseRateSeries reference_pulse_rate(const Waveform& fused, const WindowPlan& plan, RateBand band) {
  return stft_pulse_rate(fused, plan, band);
}

}  // namespace bodypulse
