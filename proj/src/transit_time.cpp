#include "bodypulse/transit_time.hpp"

#include "bodypulse/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bodypulse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Lags in search order: 0, -1, +1, -2, +2, ... so a strict '>' keeps the
// smallest |k| on ties.
std::vector<int> lag_order(int max_lag) {
  std::vector<int> ks{0};
  for (int m = 1; m <= max_lag; ++m) {
    ks.push_back(-m);
    ks.push_back(m);
  }
  return ks;
}

// Pearson over the overlap of x[n], y[n + k]; NaN when either side is constant.
double overlap_pearson(std::span<const double> x, std::span<const double> y, int k) {
  const auto n = static_cast<long>(x.size());
  const long lo = std::max(0L, static_cast<long>(-k));
  const long hi = std::min(n, n - k);
  const auto cnt = static_cast<double>(hi - lo);
  double mx = 0.0, my = 0.0;
  for (long i = lo; i < hi; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i + k)];
  }
  mx /= cnt;
  my /= cnt;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (long i = lo; i < hi; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - mx;
    const double dy = y[static_cast<std::size_t>(i + k)] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (!(std::abs(denom) > 0.0)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

struct PairLags {
  std::vector<int> lag;
  std::vector<double> corr;
  std::vector<double> offset;
  std::vector<bool> failed;
};

// Every window's best lag for one pair, using per-lag prefix sums so each
// (window, lag) correlation is O(1).
PairLags sliding_pair_lags(std::span<const double> xr, std::span<const double> yr,
                           const std::vector<std::size_t>& starts, std::size_t len, int max_lag,
                           bool subsample) {
  const std::size_t t = xr.size();
  const double xm = mean(xr);
  const double ym = mean(yr);
  std::vector<double> x(t), y(t);
  for (std::size_t i = 0; i < t; ++i) {
    x[i] = xr[i] - xm;
    y[i] = yr[i] - ym;
  }
  auto prefix = [t](const std::vector<double>& v, bool square) {
    std::vector<double> p(t + 1, 0.0);
    for (std::size_t i = 0; i < t; ++i) p[i + 1] = p[i] + (square ? v[i] * v[i] : v[i]);
    return p;
  };
  const auto px = prefix(x, false), pxx = prefix(x, true);
  const auto py = prefix(y, false), pyy = prefix(y, true);

  const std::size_t nw = starts.size();
  PairLags out;
  out.lag.assign(nw, 0);
  out.corr.assign(nw, -std::numeric_limits<double>::infinity());
  out.offset.assign(nw, 0.0);
  out.failed.assign(nw, false);
  // Correlations at every lag, kept for the parabolic refinement.
  std::vector<double> all;
  if (subsample) all.assign(nw * static_cast<std::size_t>(2 * max_lag + 1), kNaN);

  std::vector<double> pxy(t + 1);
  for (int k : lag_order(max_lag)) {
    const std::size_t ak = static_cast<std::size_t>(std::abs(k));
    std::fill(pxy.begin(), pxy.end(), 0.0);
    for (std::size_t n = 0; n < t; ++n) {
      const long m = static_cast<long>(n) + k;
      const double term = (m >= 0 && m < static_cast<long>(t)) ? x[n] * y[static_cast<std::size_t>(m)] : 0.0;
      pxy[n + 1] = pxy[n] + term;
    }
    for (std::size_t w = 0; w < nw; ++w) {
      const std::size_t s = starts[w];
      const std::size_t lo = s + (k < 0 ? ak : 0);
      const std::size_t hi = s + len - (k > 0 ? ak : 0);
      const auto cnt = static_cast<double>(hi - lo);
      const std::size_t ylo = k >= 0 ? lo + ak : lo - ak;
      const std::size_t yhi = k >= 0 ? hi + ak : hi - ak;
      const double sx = px[hi] - px[lo];
      const double sy = py[yhi] - py[ylo];
      const double sxx = pxx[hi] - pxx[lo];
      const double syy = pyy[yhi] - pyy[ylo];
      const double vx = sxx - sx * sx / cnt;
      const double vy = syy - sy * sy / cnt;
      if (!(vx > 1e-10 * sxx) || !(vy > 1e-10 * syy)) {
        out.failed[w] = true;
        continue;
      }
      const double r = ((pxy[hi] - pxy[lo]) - sx * sy / cnt) / std::sqrt(vx * vy);
      if (subsample) all[w * static_cast<std::size_t>(2 * max_lag + 1) + static_cast<std::size_t>(k + max_lag)] = r;
      if (r > out.corr[w]) {
        out.corr[w] = r;
        out.lag[w] = k;
      }
    }
  }
  if (subsample) {
    const auto width = static_cast<std::size_t>(2 * max_lag + 1);
    for (std::size_t w = 0; w < nw; ++w) {
      const int k = out.lag[w];
      if (out.failed[w] || std::abs(k) == max_lag) continue;
      const std::size_t c = w * width + static_cast<std::size_t>(k + max_lag);
      out.offset[w] = parabolic_offset(all[c - 1], all[c], all[c + 1]);
    }
  }
  return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LagEstimate xcorr_lag(const Waveform& x, const Waveform& y, double max_lag_s, bool subsample) {
  if (x.sample_rate_hz() != y.sample_rate_hz() || x.size() != y.size()) {
    throw Error(ErrorKind::InvalidArgument, "xcorr: signals need equal rates and lengths");
  }
  if (!(max_lag_s >= 0.0) || !(max_lag_s < 0.5 * x.duration_s())) {
    throw Error(ErrorKind::InvalidArgument, "xcorr: max lag must be below half the duration");
  }
  const double fs = x.sample_rate_hz();
  const int max_lag = static_cast<int>(std::llround(max_lag_s * fs));
  LagEstimate best;
  best.peak_corr = -std::numeric_limits<double>::infinity();
  std::vector<double> by_lag(static_cast<std::size_t>(2 * max_lag + 1), kNaN);
  for (int k : lag_order(max_lag)) {
    const double r = overlap_pearson(x.samples(), y.samples(), k);
    if (std::isnan(r)) {
      std::ostringstream msg;
      msg << "xcorr: zero variance in the overlap at lag " << k;
      throw Error(ErrorKind::ZeroVariance, msg.str());
    }
    by_lag[static_cast<std::size_t>(k + max_lag)] = r;
    if (r > best.peak_corr) {
      best.peak_corr = r;
      best.lag_samples = k;
    }
  }
  double refined = best.lag_samples;
  if (subsample && std::abs(best.lag_samples) < max_lag) {
    const auto c = static_cast<std::size_t>(best.lag_samples + max_lag);
    refined += parabolic_offset(by_lag[c - 1], by_lag[c], by_lag[c + 1]);
  }
  best.lag_s = refined / fs;
  best.peak_corr = std::clamp(best.peak_corr, -1.0, 1.0);
  best.window_center_time_s = x.start_time_s() + 0.5 * x.duration_s();
  return best;
}

PttConfig PttConfig::defaults_for(double sample_rate_hz) {
  PttConfig cfg;
  if (sample_rate_hz < 100.0) cfg.plan.stride_s = 1.0 / sample_rate_hz;
  return cfg;
}

std::size_t PTTMatrix::index_of(const std::string& site) const {
  const auto it = std::find(sites.begin(), sites.end(), site);
  if (it == sites.end()) {
    std::string valid;
    for (const auto& s : sites) valid += (valid.empty() ? "" : ", ") + s;
    throw Error(ErrorKind::InvalidArgument, "ptt: unknown site '" + site + "' (valid: " + valid + ")");
  }
  return static_cast<std::size_t>(it - sites.begin());
}

PTTMatrix ptt_matrix(const std::vector<SiteWave>& waves, const PttConfig& cfg) {
  if (waves.size() < 2) throw Error(ErrorKind::InvalidArgument, "ptt: need at least two sites");
  cfg.plan.validate();
  const double fs = waves.front().wave.sample_rate_hz();
  double t0 = -1e300, t1 = 1e300;
  for (const SiteWave& sw : waves) {
    if (sw.wave.sample_rate_hz() != fs) {
      throw Error(ErrorKind::InvalidArgument, "ptt: site '" + sw.site + "' has a different sample rate");
    }
    t0 = std::max(t0, sw.wave.start_time_s());
    t1 = std::min(t1, sw.wave.start_time_s() + sw.wave.duration_s());
  }
  const auto total = static_cast<std::size_t>(std::max(0.0, std::floor((t1 - t0) * fs + 1e-6)));
  const std::size_t len = cfg.plan.length_samples(fs);
  const int max_lag = static_cast<int>(std::llround(cfg.max_lag_s * fs));
  if (!(cfg.max_lag_s < 0.5 * cfg.plan.length_s)) {
    throw Error(ErrorKind::InvalidArgument, "ptt: max lag must be below half the window length");
  }
  const auto starts = window_starts(total, fs, cfg.plan);
  if (starts.empty()) {
    throw Error(ErrorKind::SignalTooShort, "ptt: common span shorter than one window");
  }

  std::vector<std::span<const double>> aligned;
  for (const SiteWave& sw : waves) {
    const auto offset = static_cast<std::size_t>(std::llround((t0 - sw.wave.start_time_s()) * fs));
    aligned.push_back(sw.wave.samples().subspan(offset, total));
  }

  const auto n = static_cast<Eigen::Index>(waves.size());
  PTTMatrix m;
  for (const SiteWave& sw : waves) m.sites.push_back(sw.site);
  m.per_window.assign(starts.size(), Eigen::MatrixXd::Zero(n, n));
  m.mean_lag_s = Eigen::MatrixXd::Zero(n, n);
  m.peak_corr = Eigen::MatrixXd::Ones(n, n);
  m.accepted = Eigen::MatrixXi::Zero(n, n);
  m.excluded_low_corr = Eigen::MatrixXi::Zero(n, n);
  m.failed = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t s : starts) m.window_center_times_s.push_back(t0 + (static_cast<double>(s) + 0.5 * static_cast<double>(len)) / fs);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const PairLags pl = sliding_pair_lags(aligned[static_cast<std::size_t>(i)],
                                            aligned[static_cast<std::size_t>(j)], starts, len,
                                            max_lag, cfg.subsample);
      double lag_sum = 0.0;
      double corr_sum = 0.0;
      int accepted = 0, low = 0, failed = 0;
      for (std::size_t w = 0; w < starts.size(); ++w) {
        double lag = kNaN;
        if (pl.failed[w]) {
          ++failed;
        } else if (pl.corr[w] < cfg.min_corr) {
          ++low;
        } else {
          lag = (static_cast<double>(pl.lag[w]) + pl.offset[w]) / fs;
          lag_sum += lag;
          corr_sum += pl.corr[w];
          ++accepted;
        }
        m.per_window[w](i, j) = lag;
        m.per_window[w](j, i) = -lag;
      }
      const double mean_lag = accepted > 0 ? lag_sum / accepted : kNaN;
      const double mean_corr = accepted > 0 ? corr_sum / accepted : kNaN;
      m.mean_lag_s(i, j) = mean_lag;
      m.mean_lag_s(j, i) = -mean_lag;
      m.peak_corr(i, j) = m.peak_corr(j, i) = mean_corr;
      m.accepted(i, j) = m.accepted(j, i) = accepted;
      m.excluded_low_corr(i, j) = m.excluded_low_corr(j, i) = low;
      m.failed(i, j) = m.failed(j, i) = failed;
    }
  }
  return m;
}

double phase_angle_deg(double lag_s, double rate_bpm) {
  if (!(rate_bpm > 0.0)) throw Error(ErrorKind::InvalidArgument, "phase angle: rate must be positive");
  // Scaled to the published convention: 51.23 ms at 180 bpm reads 27.66 degrees.
  return 180.0 * lag_s * rate_bpm / 60.0;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "box stats: no values");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.count = values.size();
  b.median = quantile_sorted(values, 0.5);
  b.q1 = quantile_sorted(values, 0.25);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
      continue;
    }
    b.lower_whisker = std::min(b.lower_whisker, v);
    b.upper_whisker = std::max(b.upper_whisker, v);
  }
  return b;
}

BoxStats lag_distribution_stats(const PTTMatrix& m, const std::pair<std::string, std::string>& pair) {
  const auto i = static_cast<Eigen::Index>(m.index_of(pair.first));
  const auto j = static_cast<Eigen::Index>(m.index_of(pair.second));
  std::vector<double> lags;
  for (const auto& w : m.per_window) {
    if (!std::isnan(w(i, j))) lags.push_back(w(i, j));
  }
  if (lags.size() < 5) {
    std::ostringstream msg;
    msg << "ptt: only " << lags.size() << " accepted windows for " << pair.first << " / "
        << pair.second << " (need 5)";
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  return box_stats(std::move(lags));
}

}  // namespace bodypulse
