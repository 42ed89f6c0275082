#pragma once

#include "bodypulse/filter.hpp"
#include "bodypulse/waveform.hpp"

#include <string>

namespace bodypulse {

// Spatially averaged skin-pixel colour for one region of interest.
struct RGBTrace {
  Waveform r;
  Waveform g;
  Waveform b;
  std::string roi_label;

  RGBTrace(Waveform r_, Waveform g_, Waveform b_, std::string label = {});

  std::size_t size() const noexcept { return r.size(); }
  double sample_rate_hz() const noexcept { return r.sample_rate_hz(); }
  // Samples [first, first + count) of all three channels.
  RGBTrace slice(std::size_t first, std::size_t count) const;
  RGBTrace scaled(double c) const;
};

enum class RppgMethod { Chrom, Pos };

RppgMethod parse_method(const std::string& name);
std::string to_string(RppgMethod m);

struct MethodConfig {
  RppgMethod method = RppgMethod::Pos;
  // Overlap-add segment length; 50% overlap, Hann weighting. A value >= the
  // trace duration runs a single unweighted segment.
  double internal_window_s = 1.6;
  BandpassSpec post_filter = kRppgBand;

  void validate() const;
};

// Chrominance method: X = 3R - 2G, Y = 1.5R + G - 1.5B on mean-normalized
// channels, S = X - (sd(X)/sd(Y)) Y. Output is band-passed and z-normalized
// (all zeros if no pulse survives).
Waveform chrom(const RGBTrace& trace, const MethodConfig& cfg);

// Plane-orthogonal-to-skin: S1 = G - B, S2 = G + B - 2R on mean-normalized
// channels, h = S1 + (sd(S1)/sd(S2)) S2. Band-passed and z-normalized.
Waveform pos(const RGBTrace& trace, const MethodConfig& cfg);

// Dispatches on cfg.method.
Waveform extract_pulse(const RGBTrace& trace, const MethodConfig& cfg);

}  // namespace bodypulse
