#pragma once

#include "bodypulse/rppg.hpp"
#include "bodypulse/waveform.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace bodypulse {

// Piecewise-linear instantaneous pulse rate, held constant outside the knots.
class RateProfile {
 public:
  struct Knot {
    double time_s;
    double bpm;
  };

  static RateProfile constant(double bpm);
  static RateProfile ramp(double from_bpm, double to_bpm, double duration_s);
  static RateProfile piecewise(std::vector<Knot> knots);

  double bpm_at(double t) const;
  // Integrated rate in cycles from t = 0 (negative for t < 0).
  double cycles_at(double t) const;
  // Mean rate over [t0, t1].
  double mean_bpm(double t0, double t1) const;
  const std::vector<Knot>& knots() const noexcept { return knots_; }

 private:
  explicit RateProfile(std::vector<Knot> knots);
  std::vector<Knot> knots_;
};

struct Harmonic {
  double multiple = 1.0;
  double amplitude = 1.0;
  double phase_rad = 0.0;
};

struct PulseModel {
  RateProfile rate = RateProfile::constant(72.0);
  std::vector<Harmonic> harmonics{{1.0, 1.0, 0.0}, {2.0, 0.35, -0.8}};
  double fs_hz = 90.0;
  double duration_s = 60.0;
  double start_time_s = 0.0;
  double delay_s = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// w(t) = sum_h a_h sin(2 pi m_h cycles(t - delay) + theta_h) + white noise.
Waveform synth_pulse(const PulseModel& m);

struct MotionBurst {
  double start_s = 0.0;
  double end_s = 0.0;
  double amplitude = 1.0;
};

// Band-limited (0.3-4 Hz) random motion over each burst interval, Hann-tapered
// at the interval edges, with peak magnitude near `amplitude`. Zero elsewhere.
std::vector<double> motion_signal(std::size_t n, double fs_hz, double start_time_s,
                                  const std::vector<MotionBurst>& bursts, std::uint64_t seed);

// Adds motion_signal(...) to w.
Waveform add_motion(const Waveform& w, const std::vector<MotionBurst>& bursts, std::uint64_t seed);

struct RgbSynthOptions {
  std::array<double, 3> baseline{0.6, 0.5, 0.4};
  std::array<double, 3> modulation{0.002, 0.006, 0.004};
  double noise_std = 0.0;
  std::vector<MotionBurst> motion_bursts;
  std::uint64_t seed = 0;
  // Intensity scale applied to the baseline (e.g. 255 for 8-bit pixel means).
  double scale = 1.0;
};

// c(t) = scale * baseline_c * (1 + mod_c * pulse(t) + motion(t)) + noise.
// Motion enters every channel in proportion to its baseline, i.e. as a pure
// intensity change.
RGBTrace synth_rgb_trace(const Waveform& pulse, const RgbSynthOptions& opt,
                         const std::string& label = {});

struct ContactSite {
  std::string name;
  double delay_s = 0.0;
};

// The nine contact sites (two per limb plus the neck) with plausible arrival
// delays relative to the neck.
std::vector<ContactSite> default_contact_sites();

struct ContactBankOptions {
  double fs_hz = 400.0;
  double duration_s = 60.0;
  double noise_std = 0.1;
  std::vector<Harmonic> harmonics{{1.0, 1.0, 0.0}, {2.0, 0.35, -0.8}};
  std::uint64_t seed = 0;
};

// One synthetic contact-PPG channel per site; channel i uses seed + i.
// bursts[i] (if present) is added to channel i.
std::vector<SiteWave> synth_contact_bank(const RateProfile& rate, const std::vector<ContactSite>& sites,
                                         const ContactBankOptions& opt,
                                         const std::vector<std::vector<MotionBurst>>& bursts = {});

// Oximeter pulse-rate trace sampled from the rate profile.
Waveform synth_oximeter(const RateProfile& rate, double duration_s, double fs_hz = 60.0);

}  // namespace bodypulse
