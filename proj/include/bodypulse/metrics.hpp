#pragma once

#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/waveform.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bodypulse {

// Rate pairs matched by window-centre time.
struct MatchedRates {
  std::vector<double> time_s;
  std::vector<double> pred_bpm;
  std::vector<double> ref_bpm;
  // Windows on either side with no partner (or a missing rate); dropped, never zero-filled.
  std::size_t unmatched = 0;
};

// Nearest-neighbour matching within half the finer stride. Both series must
// come from the same STFT configuration (identical window length).
MatchedRates match_rates(const PulseRateSeries& pred, const PulseRateSeries& ref);

double mae(const MatchedRates& m);
double mae(const PulseRateSeries& pred, const PulseRateSeries& ref);
// Throws ErrorKind::ZeroVariance when either side is constant (undefined, not 0).
double pearson_r(const MatchedRates& m);
double pearson_r(const PulseRateSeries& pred, const PulseRateSeries& ref);

struct SnrConfig {
  double half_band_bpm = 6.0;
  double noise_low_bpm = 24.0;
  double noise_high_bpm = 240.0;
  double cap_db = 60.0;
};

// SNR of one window: power within +/- half_band of the rate and of twice the
// rate over the remaining power in [noise_low, noise_high], clamped to
// +/- cap_db.
double window_snr_db(std::span<const double> window, double fs_hz, double rate_bpm,
                     const SnrConfig& cfg = {});

// Mean window SNR over the reference series' windows.
double snr_harmonics(const Waveform& w, const PulseRateSeries& ref_rate, const SnrConfig& cfg = {});

struct ScoreReport {
  double mae_bpm = 0.0;
  // Empty when undefined (fewer than 2 pairs or a constant side).
  std::optional<double> pearson_r;
  std::size_t n_windows = 0;
  std::size_t n_unmatched = 0;
  std::optional<double> snr_db;
};

ScoreReport score(const PulseRateSeries& pred, const PulseRateSeries& ref);

struct SessionScores {
  std::vector<std::string> labels;
  std::vector<ScoreReport> per_session;
  // All matched pairs from every session pooled together.
  ScoreReport pooled;
  // Mean of the defined per-session correlations.
  std::optional<double> mean_session_r;
};

struct LabelledPair {
  std::string label;
  PulseRateSeries pred;
  PulseRateSeries ref;
};

SessionScores score_sessions(const std::vector<LabelledPair>& sessions);

}  // namespace bodypulse
