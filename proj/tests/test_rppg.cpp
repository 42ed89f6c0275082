#include "doctest.h"
#include "oracles.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/rppg.hpp"
#include "bodypulse/signal.hpp"
#include "bodypulse/synth.hpp"

#include <cmath>

using namespace bodypulse;

namespace {

Waveform pulse_72(double seconds = 30.0) {
  PulseModel m;
  m.duration_s = seconds;
  return synth_pulse(m);
}

// Baseline (0.6, 0.5, 0.4) plus the pulse along (0.3, 0.8, 0.5), scaled small.
RGBTrace chromatic_trace(const Waveform& p, double depth = 0.01) {
  std::vector<double> r(p.size()), g(p.size()), b(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] = 0.6 + 0.3 * depth * p[i];
    g[i] = 0.5 + 0.8 * depth * p[i];
    b[i] = 0.4 + 0.5 * depth * p[i];
  }
  return RGBTrace(p.with_samples(r), p.with_samples(g), p.with_samples(b), "face");
}

RGBTrace achromatic_trace(const Waveform& p) {
  std::vector<double> r(p.size()), g(p.size()), b(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 1.0 + 0.02 * p[i];
    r[i] = 0.6 * m;
    g[i] = 0.5 * m;
    b[i] = 0.4 * m;
  }
  return RGBTrace(p.with_samples(r), p.with_samples(g), p.with_samples(b));
}

double trimmed_corr(const Waveform& a, const Waveform& b, std::size_t edge) {
  std::vector<double> x(a.values().begin() + edge, a.values().end() - edge);
  std::vector<double> y(b.values().begin() + edge, b.values().end() - edge);
  return oracle::corr(x, y);
}

MethodConfig cfg(RppgMethod m) {
  MethodConfig c;
  c.method = m;
  return c;
}

}  // namespace

TEST_CASE("rppg: default configuration") {
  const MethodConfig c;
  CHECK(c.internal_window_s == 1.6);
  CHECK(c.post_filter.order == 4);
  CHECK(c.post_filter.low_bpm == 40.0);
  CHECK(c.post_filter.high_bpm == 180.0);
  CHECK(parse_method("CHROM") == RppgMethod::Chrom);
  CHECK_THROWS_AS(parse_method("ica"), Error);
}

TEST_CASE("rppg: chromatic pulse is recovered") {
  const Waveform p = pulse_72();
  const Waveform ref = bandpass_zero_phase(p, kRppgBand);
  const RGBTrace tr = chromatic_trace(p);
  const std::size_t edge = 90;

  const double r_pos = trimmed_corr(pos(tr, cfg(RppgMethod::Pos)), ref, edge);
  CHECK(r_pos >= 0.99);

  // For this direction X and Y are anti-correlated, so S = X - aY = 2X tracks -p.
  const double r_chrom = trimmed_corr(chrom(tr, cfg(RppgMethod::Chrom)), ref, edge);
  CHECK(std::abs(r_chrom) >= 0.99);
  CHECK(r_chrom < 0.0);
}

TEST_CASE("rppg: achromatic intensity changes are rejected") {
  const Waveform p = pulse_72();
  const RGBTrace tr = achromatic_trace(p);
  for (RppgMethod m : {RppgMethod::Chrom, RppgMethod::Pos}) {
    const Waveform out = extract_pulse(tr, cfg(m));
    for (double v : out.values()) CHECK(std::abs(v) < 1e-9);
  }
}

TEST_CASE("rppg: constant trace gives zeros") {
  const Waveform c(std::vector<double>(900, 100.0), 90.0);
  const RGBTrace tr(c, c, c);
  for (RppgMethod m : {RppgMethod::Chrom, RppgMethod::Pos}) {
    for (double v : extract_pulse(tr, cfg(m)).values()) CHECK(v == 0.0);
  }
}

TEST_CASE("rppg: gain invariance") {
  PulseModel pm;
  pm.duration_s = 20.0;
  RgbSynthOptions opt;
  opt.noise_std = 0.001;
  opt.seed = 3;
  const RGBTrace tr = synth_rgb_trace(synth_pulse(pm), opt);
  for (RppgMethod m : {RppgMethod::Chrom, RppgMethod::Pos}) {
    const auto a = extract_pulse(tr, cfg(m));
    const auto b = extract_pulse(tr.scaled(37.5), cfg(m));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
    CHECK(a.size() == tr.size());
    CHECK(a.sample_rate_hz() == tr.sample_rate_hz());
  }
}

TEST_CASE("rppg: swapping R and G changes the output") {
  const RGBTrace tr = chromatic_trace(pulse_72(20.0));
  const RGBTrace swapped(tr.g, tr.r, tr.b);
  for (RppgMethod m : {RppgMethod::Chrom, RppgMethod::Pos}) {
    const auto a = extract_pulse(tr, cfg(m));
    const auto b = extract_pulse(swapped, cfg(m));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    CHECK(diff > 0.1);
  }
}

TEST_CASE("rppg: POS at 72 bpm yields 72 bpm in every STFT window") {
  PulseModel pm;
  RgbSynthOptions opt;
  opt.noise_std = 0.0005;
  opt.seed = 12;
  const RGBTrace tr = synth_rgb_trace(synth_pulse(pm), opt);
  const auto series = stft_pulse_rate(pos(tr, cfg(RppgMethod::Pos)));
  REQUIRE(series.entries.size() == 51);
  for (const auto& e : series.entries) CHECK(std::abs(*e.bpm - 72.0) <= 0.5);
}

TEST_CASE("rppg: bursts of pure intensity motion are rejected by POS") {
  PulseModel pm;
  pm.noise_std = 0.0;
  const Waveform p = synth_pulse(pm);
  RgbSynthOptions opt;
  opt.motion_bursts = {{10.0, 14.0, 0.05}, {30.0, 33.0, 0.08}};
  opt.seed = 21;
  const auto out = pos(synth_rgb_trace(p, opt), cfg(RppgMethod::Pos));
  CHECK(trimmed_corr(out, bandpass_zero_phase(p, kRppgBand), 90) >= 0.95);
}

TEST_CASE("rppg: single-segment mode") {
  const RGBTrace tr = chromatic_trace(pulse_72(10.0));
  MethodConfig c = cfg(RppgMethod::Pos);
  c.internal_window_s = 10.0;
  const auto out = pos(tr, c);
  CHECK(trimmed_corr(out, bandpass_zero_phase(tr.g, kRppgBand), 90) > 0.99);
}

TEST_CASE("rppg: error paths") {
  const Waveform p = pulse_72(1.0);
  const RGBTrace tr = chromatic_trace(p);
  MethodConfig c = cfg(RppgMethod::Pos);
  c.internal_window_s = 2.0;
  CHECK_THROWS_AS(pos(tr, c), Error);
  c.internal_window_s = 0.25;
  CHECK_THROWS_AS(pos(tr, c), Error);

  const Waveform zero(std::vector<double>(450, 0.0), 90.0);
  const Waveform g = pulse_72(5.0);
  std::vector<double> pos_g = g.values();
  for (double& v : pos_g) v += 5.0;
  const RGBTrace dark(zero, g.with_samples(pos_g), g.with_samples(pos_g));
  try {
    chrom(dark, cfg(RppgMethod::Chrom));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("segment 0") != std::string::npos);
  }
  CHECK_THROWS_AS(RGBTrace(zero, zero.slice(0, 10), zero), Error);
}
