#include "bodypulse/synth.hpp"

#include "bodypulse/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bodypulse {

RateProfile::RateProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw Error(ErrorKind::InvalidArgument, "rate profile: no knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!(knots_[i].bpm >= 40.0 && knots_[i].bpm <= 180.0)) {
      throw Error(ErrorKind::InvalidArgument, "rate profile: rates must lie in [40, 180] bpm");
    }
    if (i > 0 && !(knots_[i].time_s > knots_[i - 1].time_s)) {
      throw Error(ErrorKind::InvalidArgument, "rate profile: knot times must increase");
    }
  }
}

RateProfile RateProfile::constant(double bpm) { return RateProfile({{0.0, bpm}}); }

RateProfile RateProfile::ramp(double from_bpm, double to_bpm, double duration_s) {
  return RateProfile({{0.0, from_bpm}, {duration_s, to_bpm}});
}

RateProfile RateProfile::piecewise(std::vector<Knot> knots) { return RateProfile(std::move(knots)); }

double RateProfile::bpm_at(double t) const {
  if (t <= knots_.front().time_s) return knots_.front().bpm;
  if (t >= knots_.back().time_s) return knots_.back().bpm;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const Knot& k) { return v < k.time_s; });
  const auto lo = hi - 1;
  const double frac = (t - lo->time_s) / (hi->time_s - lo->time_s);
  return lo->bpm + frac * (hi->bpm - lo->bpm);
}

double RateProfile::cycles_at(double t) const {
  // Integral of bpm/60 from 0 to t over the piecewise-linear profile.
  auto integral_from_first = [this](double x) {
    const Knot& first = knots_.front();
    if (x <= first.time_s) return (x - first.time_s) * first.bpm / 60.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
      const Knot& a = knots_[i];
      const Knot& b = knots_[i + 1];
      if (x <= a.time_s) break;
      const double end = std::min(x, b.time_s);
      const double rate_end = a.bpm + (end - a.time_s) / (b.time_s - a.time_s) * (b.bpm - a.bpm);
      acc += 0.5 * (a.bpm + rate_end) * (end - a.time_s) / 60.0;
    }
    const Knot& last = knots_.back();
    if (x > last.time_s) acc += (x - last.time_s) * last.bpm / 60.0;
    return acc;
  };
  return integral_from_first(t) - integral_from_first(0.0);
}

double RateProfile::mean_bpm(double t0, double t1) const {
  if (t1 <= t0) return bpm_at(t0);
  return 60.0 * (cycles_at(t1) - cycles_at(t0)) / (t1 - t0);
}

void PulseModel::validate() const {
  if (harmonics.empty() || !(harmonics.front().amplitude > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "pulse model: fundamental amplitude must be positive");
  }
  if (!(fs_hz > 0.0) || !(duration_s > 0.0) || delay_s < 0.0 || noise_std < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "pulse model: invalid rate, duration, delay or noise");
  }
}

Waveform synth_pulse(const PulseModel& m) {
  m.validate();
  const auto n = static_cast<std::size_t>(std::llround(m.duration_s * m.fs_hz));
  std::vector<double> out(std::max<std::size_t>(n, 1));
  std::mt19937_64 rng(m.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = m.start_time_s + static_cast<double>(i) / m.fs_hz;
    const double phase = 2.0 * std::numbers::pi * m.rate.cycles_at(t - m.delay_s);
    double v = 0.0;
    for (const Harmonic& h : m.harmonics) v += h.amplitude * std::sin(h.multiple * phase + h.phase_rad);
    if (m.noise_std > 0.0) v += m.noise_std * noise(rng);
    out[i] = v;
  }
  return Waveform(std::move(out), m.fs_hz, m.start_time_s);
}

std::vector<double> motion_signal(std::size_t n, double fs_hz, double start_time_s,
                                  const std::vector<MotionBurst>& bursts, std::uint64_t seed) {
  std::vector<double> out(n, 0.0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> freq(0.3, 4.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  constexpr int kTones = 24;
  for (const MotionBurst& burst : bursts) {
    if (!(burst.end_s > burst.start_s)) continue;
    std::array<double, kTones> f{};
    std::array<double, kTones> ph{};
    for (int k = 0; k < kTones; ++k) {
      f[static_cast<std::size_t>(k)] = freq(rng);
      ph[static_cast<std::size_t>(k)] = phase(rng);
    }
    // sum of kTones unit sines has RMS sqrt(kTones / 2); scale peak to ~amplitude.
    const double norm = burst.amplitude / std::sqrt(kTones / 2.0) / 2.0;
    const double span = burst.end_s - burst.start_s;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = start_time_s + static_cast<double>(i) / fs_hz;
      if (t < burst.start_s || t > burst.end_s) continue;
      const double taper = std::sin(std::numbers::pi * (t - burst.start_s) / span);
      double v = 0.0;
      for (std::size_t k = 0; k < kTones; ++k) v += std::sin(2.0 * std::numbers::pi * f[k] * t + ph[k]);
      out[i] += norm * taper * v;
    }
  }
  return out;
}

Waveform add_motion(const Waveform& w, const std::vector<MotionBurst>& bursts, std::uint64_t seed) {
  const auto motion = motion_signal(w.size(), w.sample_rate_hz(), w.start_time_s(), bursts, seed);
  std::vector<double> v = w.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += motion[i];
  return w.with_samples(std::move(v));
}

RGBTrace synth_rgb_trace(const Waveform& pulse, const RgbSynthOptions& opt, const std::string& label) {
  for (double b : opt.baseline) {
    if (!(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "rgb synth: baseline must be positive");
  }
  const std::size_t n = pulse.size();
  const auto motion = motion_signal(n, pulse.sample_rate_hz(), pulse.start_time_s(),
                                    opt.motion_bursts, opt.seed);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::array<std::vector<double>, 3> ch;
  for (std::size_t c = 0; c < 3; ++c) ch[c].resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      double v = opt.scale * opt.baseline[c] * (1.0 + opt.modulation[c] * pulse[i] + motion[i]);
      if (opt.noise_std > 0.0) v += opt.noise_std * noise(rng);
      ch[c][i] = v;
    }
  }
  return RGBTrace(pulse.with_samples(std::move(ch[0])), pulse.with_samples(std::move(ch[1])),
                  pulse.with_samples(std::move(ch[2])), label);
}

std::vector<ContactSite> default_contact_sites() {
  return {{"neck", 0.000},        {"left-tricep", 0.020}, {"right-tricep", 0.018},
          {"left-wrist", 0.045},  {"right-wrist", 0.042}, {"left-thigh", 0.050},
          {"right-thigh", 0.047}, {"left-ankle", 0.071},  {"right-ankle", 0.068}};
}

std::vector<SiteWave> synth_contact_bank(const RateProfile& rate, const std::vector<ContactSite>& sites,
                                         const ContactBankOptions& opt,
                                         const std::vector<std::vector<MotionBurst>>& bursts) {
  std::vector<SiteWave> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    PulseModel m;
    m.rate = rate;
    m.harmonics = opt.harmonics;
    m.fs_hz = opt.fs_hz;
    m.duration_s = opt.duration_s;
    m.delay_s = sites[i].delay_s;
    m.noise_std = opt.noise_std;
    m.seed = opt.seed + i;
    Waveform w = synth_pulse(m);
    if (i < bursts.size() && !bursts[i].empty()) w = add_motion(w, bursts[i], m.seed);
    out.push_back({sites[i].name, std::move(w)});
  }
  return out;
}

Waveform synth_oximeter(const RateProfile& rate, double duration_s, double fs_hz) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
  std::vector<double> v(std::max<std::size_t>(n, 1));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rate.bpm_at(static_cast<double>(i) / fs_hz);
  return Waveform(std::move(v), fs_hz, 0.0);
}

}  // namespace bodypulse
