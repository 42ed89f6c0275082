#include "bodypulse/rppg.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bodypulse {

namespace {

void check_same_clock(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size() || a.sample_rate_hz() != b.sample_rate_hz() ||
      a.start_time_s() != b.start_time_s()) {
    throw Error(ErrorKind::InvalidArgument, "rgb trace: channels must share length, rate and start");
  }
}

// One segment's pulse contribution from the normalized channels. Returns
// zeros when the tuning ratio is undefined.
using Projection = void (*)(std::span<const double>, std::span<const double>, std::span<const double>,
                            std::span<double>);

void chrom_segment(std::span<const double> rn, std::span<const double> gn,
                   std::span<const double> bn, std::span<double> out) {
  const std::size_t n = rn.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 3.0 * rn[i] - 2.0 * gn[i];
    y[i] = 1.5 * rn[i] + gn[i] - 1.5 * bn[i];
  }
  const double sy = stddev(y);
  if (!(sy > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double alpha = stddev(x) / sy;
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - alpha * y[i];
  // Segments are z-normalized before overlap-add.
  const double m = mean(out);
  const double s = stddev(out);
  if (!(s > 1e-9 * stddev(x))) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (double& v : out) v = (v - m) / s;
}

void pos_segment(std::span<const double> rn, std::span<const double> gn,
                 std::span<const double> bn, std::span<double> out) {
  const std::size_t n = rn.size();
  std::vector<double> s1(n), s2(n);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i] = gn[i] - bn[i];
    s2[i] = gn[i] + bn[i] - 2.0 * rn[i];
  }
  const double sd2 = stddev(s2);
  if (!(sd2 > 1e-12)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double alpha = stddev(s1) / sd2;
  for (std::size_t i = 0; i < n; ++i) out[i] = s1[i] + alpha * s2[i];
  const double m = mean(out);
  for (double& v : out) v -= m;
}

// Values this close to zero (relative to the segment's channel scale) are
// treated as rounding residue of an achromatic or constant input.
void squash_residue(std::span<double> seg) {
  double peak = 0.0;
  for (double v : seg) peak = std::max(peak, std::abs(v));
  if (peak < 1e-12) std::fill(seg.begin(), seg.end(), 0.0);
}

Waveform run_method(const RGBTrace& trace, const MethodConfig& cfg, Projection project,
                    bool z_segments) {
  cfg.validate();
  const double fs = trace.sample_rate_hz();
  const std::size_t n = trace.size();
  const auto seg_len_req = static_cast<std::size_t>(std::llround(cfg.internal_window_s * fs));
  if (seg_len_req > n + 1) {
    std::ostringstream msg;
    msg << "rppg: trace of " << trace.r.duration_s() << " s shorter than segment of "
        << cfg.internal_window_s << " s";
    throw Error(ErrorKind::SignalTooShort, msg.str());
  }
  const std::size_t seg_len = std::clamp<std::size_t>(seg_len_req, 2, n);
  const bool single = seg_len >= n;
  const std::size_t hop = std::max<std::size_t>(1, seg_len / 2);

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + seg_len <= n; s += hop) starts.push_back(s);
  if (starts.empty() || starts.back() + seg_len < n) starts.push_back(n - seg_len);

  std::vector<double> weight(seg_len, 1.0);
  if (!single) {
    // Periodic Hann: sums to a constant at 50% overlap.
    for (std::size_t i = 0; i < seg_len; ++i) {
      weight[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(seg_len));
    }
  }

  std::vector<double> acc(n, 0.0);
  std::vector<double> wsum(n, 0.0);
  std::vector<double> rn(seg_len), gn(seg_len), bn(seg_len), seg(seg_len);
  const auto r = trace.r.samples();
  const auto g = trace.g.samples();
  const auto b = trace.b.samples();
  for (std::size_t si = 0; si < starts.size(); ++si) {
    const std::size_t s = starts[si];
    const double mr = mean(r.subspan(s, seg_len));
    const double mg = mean(g.subspan(s, seg_len));
    const double mb = mean(b.subspan(s, seg_len));
    if (!(mr > 0.0) || !(mg > 0.0) || !(mb > 0.0)) {
      std::ostringstream msg;
      msg << "rppg: zero channel mean in segment " << si << " (samples " << s << ".."
          << s + seg_len - 1 << ")";
      throw Error(ErrorKind::InvalidArgument, msg.str());
    }
    for (std::size_t i = 0; i < seg_len; ++i) {
      rn[i] = r[s + i] / mr;
      gn[i] = g[s + i] / mg;
      bn[i] = b[s + i] / mb;
    }
    project(rn, gn, bn, seg);
    if (!z_segments) squash_residue(seg);
    for (std::size_t i = 0; i < seg_len; ++i) {
      acc[s + i] += weight[i] * seg[i];
      wsum[s + i] += weight[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) acc[i] = wsum[i] > 1e-9 ? acc[i] / wsum[i] : 0.0;

  Waveform raw = trace.r.with_samples(std::move(acc));
  const Waveform filtered = bandpass_zero_phase(raw, design_bandpass(cfg.post_filter, fs));
  try {
    return z_normalize(filtered);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroVariance) throw;
    return filtered.with_samples(std::vector<double>(n, 0.0));
  }
}

}  // namespace

RGBTrace::RGBTrace(Waveform r_, Waveform g_, Waveform b_, std::string label)
    : r(std::move(r_)), g(std::move(g_)), b(std::move(b_)), roi_label(std::move(label)) {
  check_same_clock(r, g);
  check_same_clock(r, b);
}

RGBTrace RGBTrace::slice(std::size_t first, std::size_t count) const {
  return RGBTrace(r.slice(first, count), g.slice(first, count), b.slice(first, count), roi_label);
}

RGBTrace RGBTrace::scaled(double c) const {
  auto mul = [c](const Waveform& w) {
    std::vector<double> v = w.values();
    for (double& x : v) x *= c;
    return w.with_samples(std::move(v));
  };
  return RGBTrace(mul(r), mul(g), mul(b), roi_label);
}

RppgMethod parse_method(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "chrom") return RppgMethod::Chrom;
  if (lower == "pos") return RppgMethod::Pos;
  throw Error(ErrorKind::InvalidArgument, "unknown rppg method '" + name + "' (valid: chrom, pos)");
}

std::string to_string(RppgMethod m) { return m == RppgMethod::Chrom ? "chrom" : "pos"; }

void MethodConfig::validate() const {
  if (!(internal_window_s >= 0.5)) {
    throw Error(ErrorKind::InvalidArgument, "rppg: internal window must be >= 0.5 s");
  }
}

Waveform chrom(const RGBTrace& trace, const MethodConfig& cfg) {
  return run_method(trace, cfg, &chrom_segment, true);
}

Waveform pos(const RGBTrace& trace, const MethodConfig& cfg) {
  return run_method(trace, cfg, &pos_segment, false);
}

Waveform extract_pulse(const RGBTrace& trace, const MethodConfig& cfg) {
  return cfg.method == RppgMethod::Chrom ? chrom(trace, cfg) : pos(trace, cfg);
}

}  // namespace bodypulse
