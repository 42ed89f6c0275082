#include "bodypulse/waveform.hpp"

#include "bodypulse/error.hpp"

#include <cmath>
#include <string>

namespace bodypulse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::SignalTooShort: return "signal-too-short";
    case ErrorKind::ZeroVariance: return "zero-variance";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::DataFormat: return "data-format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Waveform::Waveform(std::vector<double> samples, double sample_rate_hz, double start_time_s)
    : samples_(std::move(samples)), rate_(sample_rate_hz), start_(start_time_s) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw Error(ErrorKind::InvalidArgument, "waveform: sample rate must be positive and finite");
  }
  if (!std::isfinite(start_)) {
    throw Error(ErrorKind::InvalidArgument, "waveform: start time must be finite");
  }
  if (samples_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "waveform: at least one sample required");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw Error(ErrorKind::InvalidArgument,
                  "waveform: non-finite sample at index " + std::to_string(i));
    }
  }
}

Waveform Waveform::slice(std::size_t first, std::size_t count) const {
  if (first + count > samples_.size() || count == 0) {
    throw Error(ErrorKind::InvalidArgument, "waveform: slice out of range");
  }
  std::vector<double> out(samples_.begin() + static_cast<std::ptrdiff_t>(first),
                          samples_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return Waveform(std::move(out), rate_, time_at(first));
}

}  // namespace bodypulse
