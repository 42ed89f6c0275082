#include "doctest.h"
#include "oracles.hpp"

#include "bodypulse/synth.hpp"

#include <cmath>

using namespace bodypulse;

TEST_CASE("rate profile integrates piecewise-linear rates") {
  const auto ramp = RateProfile::ramp(60.0, 120.0, 60.0);
  CHECK(ramp.bpm_at(30.0) == doctest::Approx(90.0));
  CHECK(ramp.cycles_at(60.0) == doctest::Approx(90.0));   // mean 90 bpm for 1 min
  CHECK(ramp.cycles_at(70.0) == doctest::Approx(110.0));  // then 120 bpm
  CHECK(ramp.cycles_at(-1.0) == doctest::Approx(-1.0));
  CHECK(ramp.mean_bpm(0.0, 60.0) == doctest::Approx(90.0));
  CHECK_THROWS(RateProfile::constant(20.0));
}

TEST_CASE("synth_pulse: constant 60 bpm is periodic at one second") {
  PulseModel m;
  m.rate = RateProfile::constant(60.0);
  m.harmonics = {{1.0, 1.0, 0.0}};
  m.duration_s = 10.0;
  const auto w = synth_pulse(m);
  REQUIRE(w.size() == 900);
  for (std::size_t i = 0; i + 90 < w.size(); ++i) CHECK(std::abs(w[i + 90] - w[i]) < 1e-9);
  // Autocorrelation over lags 45..135 peaks at 90.
  const auto& x = w.values();
  int best = 0;
  double best_c = -2.0;
  for (int k = 45; k <= 135; ++k) {
    const double c = oracle::overlap_corr(x, x, k);
    if (c > best_c) {
      best_c = c;
      best = k;
    }
  }
  CHECK(best == 90);
}

TEST_CASE("synth_pulse: determinism and delay") {
  PulseModel m;
  m.noise_std = 0.3;
  m.seed = 99;
  const auto a = synth_pulse(m);
  const auto b = synth_pulse(m);
  CHECK(a.values() == b.values());
  m.seed = 100;
  CHECK(synth_pulse(m).values() != a.values());

  PulseModel d;
  d.fs_hz = 400.0;
  d.duration_s = 10.0;
  const auto base = synth_pulse(d);
  d.delay_s = 0.05;
  const auto delayed = synth_pulse(d);
  for (std::size_t i = 20; i < base.size(); ++i) CHECK(std::abs(delayed[i] - base[i - 20]) < 1e-9);
}

TEST_CASE("motion bursts are confined to their intervals") {
  const auto m = motion_signal(4000, 400.0, 0.0, {{2.0, 5.0, 10.0}}, 4);
  double peak = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double t = static_cast<double>(i) / 400.0;
    if (t < 2.0 || t > 5.0) CHECK(m[i] == 0.0);
    peak = std::max(peak, std::abs(m[i]));
  }
  CHECK(peak > 2.0);
  CHECK(peak < 30.0);
}

TEST_CASE("synth_rgb_trace: channel structure") {
  PulseModel pm;
  pm.duration_s = 5.0;
  const auto p = synth_pulse(pm);
  RgbSynthOptions opt;
  opt.scale = 255.0;
  const auto tr = synth_rgb_trace(p, opt, "face");
  CHECK(tr.roi_label == "face");
  CHECK(tr.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(tr.g[i] == doctest::Approx(255.0 * 0.5 * (1.0 + 0.006 * p[i])));
  }
  opt.baseline = {0.0, 1.0, 1.0};
  CHECK_THROWS(synth_rgb_trace(p, opt));
}
