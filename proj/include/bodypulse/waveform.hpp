#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bodypulse {

// Uniformly sampled 1-D signal on the session clock.
//
// Sample i sits at start_time_s + i / sample_rate_hz. Construction validates
// that the rate is positive, that there is at least one sample, and that every
// sample is finite.
class Waveform {
 public:
  Waveform(std::vector<double> samples, double sample_rate_hz, double start_time_s = 0.0);

  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<double>& values() const noexcept { return samples_; }
  double sample_rate_hz() const noexcept { return rate_; }
  double start_time_s() const noexcept { return start_; }
  std::size_t size() const noexcept { return samples_.size(); }

  double operator[](std::size_t i) const noexcept { return samples_[i]; }
  double time_at(std::size_t i) const noexcept {
    return start_ + static_cast<double>(i) / rate_;
  }
  // Span covered by the samples: size / rate.
  double duration_s() const noexcept { return static_cast<double>(samples_.size()) / rate_; }

  // Samples [first, first + count) as a new waveform with the matching start time.
  Waveform slice(std::size_t first, std::size_t count) const;

  // Same clock, new samples (length may differ).
  Waveform with_samples(std::vector<double> samples) const {
    return Waveform(std::move(samples), rate_, start_);
  }

 private:
  std::vector<double> samples_;
  double rate_;
  double start_;
};

// A waveform tagged with the body site it was measured at.
struct SiteWave {
  std::string site;
  Waveform wave;
};

}  // namespace bodypulse
