#pragma once

#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/signal.hpp"
#include "bodypulse/waveform.hpp"

#include <string>
#include <vector>

namespace bodypulse {

// Contact sensors plus the fingertip oximeter's pulse-rate trace (bpm samples,
// typically 60 Hz).
struct SensorBank {
  std::vector<SiteWave> channels;
  Waveform oximeter_bpm;
  double delta_y_bpm = 30.0;

  void validate() const;
};

struct FusionConfig {
  // A one-sample stride is the reference behaviour. At 0.1 s the interior of
  // the fused waveform differs from it by < 1e-3 RMS; the first and last
  // window lengths differ more because fewer windows cover them.
  WindowPlan plan{10.0, 0.1};
  int filter_order = 2;
  double min_low_bpm = 20.0;
};

struct FusionDiagnostics {
  std::size_t windows = 0;
  // (window, channel) pairs excluded for zero variance.
  std::size_t skipped_channel_windows = 0;
  // Start times of windows where every channel was skipped (emitted as zeros).
  std::vector<double> empty_window_times_s;
};

struct FusionResult {
  Waveform fused;
  FusionDiagnostics diagnostics;
};

// Sliding-window fusion: per window, z-normalize every channel, band-pass it
// around the oximeter rate Y at the window centre (order-2 Butterworth,
// [Y - dY, Y + dY]), and sum. Overlapping window sums are averaged per sample;
// the result is divided by its Hilbert envelope.
FusionResult fuse_ground_truth(const SensorBank& bank, const FusionConfig& cfg = {});

// The STFT estimator with the exact configuration used for predictions.
PulseRateSeries reference_pulse_rate(const Waveform& fused, const WindowPlan& plan = kGlobalRatePlan,
                                     RateBand band = {});

}  // namespace bodypulse
