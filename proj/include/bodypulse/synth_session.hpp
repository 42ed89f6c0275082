#pragma once

#include "bodypulse/manifest.hpp"
#include "bodypulse/synth.hpp"

#include <cstdint>
#include <filesystem>

namespace bodypulse {

struct SynthSessionOptions {
  double duration_s = 60.0;
  std::uint64_t seed = 0;
  double rate_from_bpm = 60.0;
  double rate_to_bpm = 90.0;
  double fps = 90.0;
  double sensor_fs_hz = 400.0;
  double oximeter_fs_hz = 60.0;
  // Motion bursts over [2, 5] s on three of the nine sensors.
  bool corrupt_sensors = true;
  // Also render a raw frame dump (160x120, dithered 8-bit).
  bool write_frames = false;
};

// Rate profile used by a synthetic session: linear ramp over the session.
RateProfile session_rate(const SynthSessionOptions& opt);

// Writes sensors, oximeter, ROI traces and masks, palm grid cell means, pose
// keypoints and manifest.json under dir; returns the manifest.
SessionManifest write_synthetic_session(const std::filesystem::path& dir, const SynthSessionOptions& opt);

}  // namespace bodypulse
