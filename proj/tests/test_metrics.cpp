#include "doctest.h"
#include "oracles.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/metrics.hpp"
#include "bodypulse/pulse_rate.hpp"

#include <cmath>
#include <random>

using namespace bodypulse;

namespace {

PulseRateSeries series(const std::vector<double>& bpm, double t0 = 5.0, double stride = 1.0) {
  PulseRateSeries s;
  s.stride_s = stride;
  for (std::size_t i = 0; i < bpm.size(); ++i) s.entries.push_back({t0 + stride * static_cast<double>(i), bpm[i]});
  return s;
}

// Independent SNR: direct DFT of the tapered window, summed per band.
double oracle_snr(const std::vector<double>& win, double fs, double rate) {
  const std::size_t n = win.size();
  double m = 0;
  for (double v : win) m += v;
  m /= static_cast<double>(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    x[i] = (win[i] - m) * w;
  }
  std::size_t nfft = 1;
  while (nfft < static_cast<std::size_t>(std::ceil(120.0 * fs))) nfft *= 2;
  double sig = 0, noise = 0;
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    const double f = 60.0 * fs * static_cast<double>(k) / static_cast<double>(nfft);
    const bool s = std::abs(f - rate) <= 6.0 || std::abs(f - 2 * rate) <= 6.0;
    const bool nb = f >= 24.0 && f <= 240.0;
    if (!s && !nb) continue;
    const double p = oracle::dft_power(x, nfft, k);
    (s ? sig : noise) += p;
  }
  return 10.0 * std::log10(sig / noise);
}

}  // namespace

TEST_CASE("mae and pearson on matched series") {
  const auto ref = series({70, 72, 75, 71, 69});
  CHECK(mae(ref, ref) == 0.0);
  CHECK(pearson_r(ref, ref) == doctest::Approx(1.0));

  const auto plus2 = series({72, 74, 77, 73, 71});
  CHECK(mae(plus2, ref) == doctest::Approx(2.0));
  CHECK(pearson_r(plus2, ref) == doctest::Approx(1.0));

  const auto neg = series({-70 + 200, -72 + 200, -75 + 200, -71 + 200, -69 + 200});
  CHECK(pearson_r(neg, ref) == doctest::Approx(-1.0));

  const auto scaled = series({3 * 70 + 5, 3 * 72 + 5, 3 * 75 + 5, 3 * 71 + 5, 3 * 69 + 5});
  CHECK(pearson_r(scaled, ref) == doctest::Approx(1.0));
}

TEST_CASE("matching drops unmatched and missing windows") {
  auto pred = series({70, 72, 75, 71, 69}, 5.2);
  auto ref = series({70, 72, 75}, 5.0);
  pred.entries[1].bpm.reset();
  const auto m = match_rates(pred, ref);
  CHECK(m.pred_bpm.size() == 2);
  CHECK(m.unmatched == 4);  // pred[1] missing, pred[3..4] beyond ref, ref[1] unused

  const auto far = series({70, 72}, 50.0);
  CHECK_THROWS_AS(mae(far, ref), Error);

  auto other_window = ref;
  other_window.window_length_s = 5.0;
  CHECK_THROWS_AS(mae(ref, other_window), Error);
}

TEST_CASE("pearson undefined for constant series") {
  const auto c = series({72, 72, 72});
  const auto v = series({70, 72, 74});
  try {
    pearson_r(c, v);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroVariance);
  }
  const auto rep = score(c, v);
  CHECK_FALSE(rep.pearson_r.has_value());
  CHECK(rep.mae_bpm == doctest::Approx(4.0 / 3.0));
  CHECK(rep.n_windows == 3);
}

TEST_CASE("mae is zero only for identical matched series") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(50, 120);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = u(rng);
    b = a;
    CHECK(mae(series(a), series(b)) == 0.0);
    b[static_cast<std::size_t>(t % 20)] += 0.1;
    CHECK(mae(series(a), series(b)) > 0.0);
  }
}

TEST_CASE("snr: pure tone at the reference rate") {
  // Hann leakage beyond +/-6 bpm bounds a clean tone's SNR near 10 dB.
  const auto x = oracle::tone(1.2, 90.0, 10.0);
  const double expected = oracle_snr(x, 90.0, 72.0);
  CHECK(window_snr_db(x, 90.0, 72.0) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected > 10.0);
}

TEST_CASE("snr: cap and floor") {
  const auto x = oracle::tone(1.2, 90.0, 10.0);
  SnrConfig no_noise_band;
  no_noise_band.noise_low_bpm = 300.0;
  no_noise_band.noise_high_bpm = 200.0;
  CHECK(window_snr_db(x, 90.0, 72.0, no_noise_band) == 60.0);
  const std::vector<double> silent(900, 0.0);
  CHECK(window_snr_db(silent, 90.0, 72.0) == -60.0);
}

TEST_CASE("snr: equal-power interferer 20 bpm away is about 0 dB") {
  auto x = oracle::tone(72.0 / 60.0, 90.0, 10.0);
  const auto y = oracle::tone(92.0 / 60.0, 90.0, 10.0, 1.0, 0.4);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  const double expected = oracle_snr(x, 90.0, 72.0);
  CHECK(std::abs(expected) <= 1.0);
  CHECK(window_snr_db(x, 90.0, 72.0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("snr: white noise is negative") {
  std::mt19937 rng(42);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> rate(45.0, 170.0);
  int negative = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(900);
    for (double& v : x) v = nd(rng);
    if (window_snr_db(x, 90.0, rate(rng)) < 0.0) ++negative;
  }
  CHECK(negative == 100);
}

TEST_CASE("snr_harmonics: averages windows and ignores amplitude") {
  auto x = oracle::tone(1.2, 90.0, 30.0);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (double& v : x) v += nd(rng);
  const Waveform w(x, 90.0);
  const auto ref = stft_pulse_rate(w, {10.0, 10.0});
  REQUIRE(ref.entries.size() == 3);
  double manual = 0.0;
  for (std::size_t k = 0; k < 3; ++k) manual += window_snr_db(w.samples().subspan(900 * k, 900), 90.0, *ref.entries[k].bpm);
  CHECK(snr_harmonics(w, ref) == doctest::Approx(manual / 3.0));
  std::vector<double> scaled = x;
  for (double& v : scaled) v *= 0.01;
  CHECK(snr_harmonics(w.with_samples(scaled), ref) == doctest::Approx(snr_harmonics(w, ref)).epsilon(1e-9));
  CHECK_THROWS_AS(snr_harmonics(w.slice(0, 500), ref), Error);
}

TEST_CASE("score_sessions reports per-session and pooled") {
  std::vector<LabelledPair> sessions{
      {"a", series({70, 72, 74}), series({71, 72, 73})},
      {"b", series({80, 90, 100}), series({82, 88, 101})},
  };
  const auto s = score_sessions(sessions);
  REQUIRE(s.per_session.size() == 2);
  CHECK(s.pooled.n_windows == 6);
  CHECK(s.pooled.mae_bpm == doctest::Approx((1 + 0 + 1 + 2 + 2 + 1) / 6.0));
  REQUIRE(s.mean_session_r.has_value());
  CHECK(*s.mean_session_r == doctest::Approx((*s.per_session[0].pearson_r + *s.per_session[1].pearson_r) / 2));
}
