#pragma once

#include "bodypulse/signal.hpp"
#include "bodypulse/waveform.hpp"

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

namespace bodypulse {

// Positive lag_s means the first signal leads (the pulse reaches it earlier).
struct LagEstimate {
  double lag_s = 0.0;
  int lag_samples = 0;
  double peak_corr = 0.0;
  double window_center_time_s = 0.0;
};

// Pearson correlation of x[n] against y[n + k] over their overlap for every
// integer k in [-L, L], L = round(max_lag_s * fs); the best k wins, ties go to
// the smaller |k|. With `subsample`, the peak is refined by a parabola through
// its neighbours (lag_samples stays the integer peak).
LagEstimate xcorr_lag(const Waveform& x, const Waveform& y, double max_lag_s, bool subsample = false);

struct PttConfig {
  WindowPlan plan{5.0, 0.01};
  double max_lag_s = 0.3;
  // Windows whose peak correlation falls below this are left out of the mean.
  double min_corr = 0.5;
  bool subsample = false;

  // Contact defaults; for video-rate signals (< 100 Hz) the stride is one frame.
  static PttConfig defaults_for(double sample_rate_hz);
};

struct PTTMatrix {
  std::vector<std::string> sites;
  // Seconds; NaN where a pair had no accepted window.
  Eigen::MatrixXd mean_lag_s;
  Eigen::MatrixXd peak_corr;
  // One matrix per window; NaN entries were excluded.
  std::vector<Eigen::MatrixXd> per_window;
  std::vector<double> window_center_times_s;
  // Per pair (i < j, mirrored): accepted, below-gate and failed window counts.
  Eigen::MatrixXi accepted;
  Eigen::MatrixXi excluded_low_corr;
  Eigen::MatrixXi failed;

  std::size_t index_of(const std::string& site) const;
};

// Sliding-window lags for every unordered pair of sites, mirrored into
// skew-symmetric matrices.
PTTMatrix ptt_matrix(const std::vector<SiteWave>& waves, const PttConfig& cfg);

// 180 * lag * rate / 60, the scale behind the published 27.66 degrees for a
// 51.23 ms lag at 180 bpm. One full pulse period therefore reads 180.
double phase_angle_deg(double lag_s, double rate_bpm);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double lower_whisker = 0.0;
  double upper_whisker = 0.0;
  std::vector<double> outliers;
  std::size_t count = 0;
};

// Tukey box-plot summary (whiskers at 1.5 IQR) of values; quartiles by linear
// interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

// Box-plot summary of the accepted per-window lags (seconds) for one pair.
// Requires at least 5 windows.
BoxStats lag_distribution_stats(const PTTMatrix& m, const std::pair<std::string, std::string>& pair);

}  // namespace bodypulse
