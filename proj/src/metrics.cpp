#include "bodypulse/metrics.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bodypulse {

MatchedRates match_rates(const PulseRateSeries& pred, const PulseRateSeries& ref) {
  if (std::abs(pred.window_length_s - ref.window_length_s) > 1e-9) {
    std::ostringstream msg;
    msg << "score: prediction and reference use different STFT windows (" << pred.window_length_s
        << " s vs " << ref.window_length_s << " s)";
    throw Error(ErrorKind::InvalidArgument, msg.str());
  }
  const double tol = 0.5 * std::min(pred.stride_s, ref.stride_s) + 1e-9;
  MatchedRates out;
  std::vector<bool> ref_used(ref.entries.size(), false);
  std::size_t j = 0;
  for (const RateEntry& p : pred.entries) {
    while (j + 1 < ref.entries.size() &&
           std::abs(ref.entries[j + 1].time_s - p.time_s) <= std::abs(ref.entries[j].time_s - p.time_s)) {
      ++j;
    }
    if (ref.entries.empty() || std::abs(ref.entries[j].time_s - p.time_s) > tol || ref_used[j] ||
        !p.bpm || !ref.entries[j].bpm) {
      ++out.unmatched;
      continue;
    }
    ref_used[j] = true;
    out.time_s.push_back(p.time_s);
    out.pred_bpm.push_back(*p.bpm);
    out.ref_bpm.push_back(*ref.entries[j].bpm);
  }
  out.unmatched += static_cast<std::size_t>(std::count(ref_used.begin(), ref_used.end(), false));
  return out;
}

double mae(const MatchedRates& m) {
  if (m.pred_bpm.empty()) throw Error(ErrorKind::InvalidArgument, "mae: no matched windows");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.pred_bpm.size(); ++i) acc += std::abs(m.pred_bpm[i] - m.ref_bpm[i]);
  return acc / static_cast<double>(m.pred_bpm.size());
}

double mae(const PulseRateSeries& pred, const PulseRateSeries& ref) {
  return mae(match_rates(pred, ref));
}

double pearson_r(const MatchedRates& m) {
  if (m.pred_bpm.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "pearson: need at least 2 matched windows");
  }
  const double r = pearson(m.pred_bpm, m.ref_bpm);
  if (std::isnan(r)) {
    throw Error(ErrorKind::ZeroVariance, "pearson: undefined for a constant rate series");
  }
  return r;
}

double pearson_r(const PulseRateSeries& pred, const PulseRateSeries& ref) {
  return pearson_r(match_rates(pred, ref));
}

double window_snr_db(std::span<const double> window, double fs_hz, double rate_bpm,
                     const SnrConfig& cfg) {
  const std::size_t nfft = rate_fft_length(fs_hz, window.size());
  const auto power = tapered_spectrum(window, nfft, true);
  const double spacing = 60.0 * fs_hz / static_cast<double>(nfft);
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * spacing;
    const bool in_signal = std::abs(f - rate_bpm) <= cfg.half_band_bpm ||
                           std::abs(f - 2.0 * rate_bpm) <= cfg.half_band_bpm;
    if (in_signal) {
      signal += power[k];
    } else if (f >= cfg.noise_low_bpm && f <= cfg.noise_high_bpm) {
      noise += power[k];
    }
  }
  if (!(signal > 0.0)) return -cfg.cap_db;
  if (!(noise > 0.0)) return cfg.cap_db;
  return std::clamp(10.0 * std::log10(signal / noise), -cfg.cap_db, cfg.cap_db);
}

double snr_harmonics(const Waveform& w, const PulseRateSeries& ref_rate, const SnrConfig& cfg) {
  const double fs = w.sample_rate_hz();
  const auto len = static_cast<std::size_t>(std::llround(ref_rate.window_length_s * fs));
  double acc = 0.0;
  std::size_t count = 0;
  for (const RateEntry& e : ref_rate.entries) {
    if (!e.bpm) continue;
    const double start_s = e.time_s - 0.5 * static_cast<double>(len) / fs - w.start_time_s();
    const auto first = static_cast<long long>(std::llround(start_s * fs));
    if (first < 0 || static_cast<std::size_t>(first) + len > w.size()) continue;
    acc += window_snr_db(w.samples().subspan(static_cast<std::size_t>(first), len), fs, *e.bpm, cfg);
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorKind::InvalidArgument, "snr: no reference window lies inside the waveform");
  }
  return acc / static_cast<double>(count);
}

namespace {

ScoreReport report_from(const MatchedRates& m) {
  ScoreReport r;
  r.mae_bpm = mae(m);
  r.n_windows = m.pred_bpm.size();
  r.n_unmatched = m.unmatched;
  if (m.pred_bpm.size() >= 2) {
    const double pr = pearson(m.pred_bpm, m.ref_bpm);
    if (!std::isnan(pr)) r.pearson_r = pr;
  }
  return r;
}

}  // namespace

ScoreReport score(const PulseRateSeries& pred, const PulseRateSeries& ref) {
  return report_from(match_rates(pred, ref));
}

SessionScores score_sessions(const std::vector<LabelledPair>& sessions) {
  if (sessions.empty()) throw Error(ErrorKind::InvalidArgument, "score: no sessions");
  SessionScores out;
  MatchedRates pooled;
  double r_acc = 0.0;
  std::size_t r_count = 0;
  for (const LabelledPair& s : sessions) {
    const MatchedRates m = match_rates(s.pred, s.ref);
    out.labels.push_back(s.label);
    out.per_session.push_back(report_from(m));
    if (out.per_session.back().pearson_r) {
      r_acc += *out.per_session.back().pearson_r;
      ++r_count;
    }
    pooled.time_s.insert(pooled.time_s.end(), m.time_s.begin(), m.time_s.end());
    pooled.pred_bpm.insert(pooled.pred_bpm.end(), m.pred_bpm.begin(), m.pred_bpm.end());
    pooled.ref_bpm.insert(pooled.ref_bpm.end(), m.ref_bpm.begin(), m.ref_bpm.end());
    pooled.unmatched += m.unmatched;
  }
  out.pooled = report_from(pooled);
  if (r_count > 0) out.mean_session_r = r_acc / static_cast<double>(r_count);
  return out;
}

}  // namespace bodypulse
