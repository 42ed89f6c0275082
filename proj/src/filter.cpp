#include "bodypulse/filter.hpp"

#include "bodypulse/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bodypulse {

namespace {

using cplx = std::complex<double>;

constexpr double kRealPoleTol = 1e-12;

std::vector<double> run_cascade(const FilterCoefficients& f, std::span<const double> x,
                                const std::vector<std::array<double, 2>>* init) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < f.sections.size(); ++s) {
    const Biquad& q = f.sections[s];
    double z1 = 0.0;
    double z2 = 0.0;
    if (init != nullptr) {
      z1 = (*init)[s][0];
      z2 = (*init)[s][1];
    }
    for (double& v : y) {
      const double in = v;
      const double out = q.b[0] * in + z1;
      z1 = q.b[1] * in - q.a[1] * out + z2;
      z2 = q.b[2] * in - q.a[2] * out;
      v = out;
    }
  }
  return y;
}

// Initial states that make the cascade sit in steady state for a constant
// input of value x0 (the scipy sosfilt_zi construction).
std::vector<std::array<double, 2>> steady_state(const FilterCoefficients& f, double x0) {
  std::vector<std::array<double, 2>> zi(f.sections.size());
  double level = x0;
  for (std::size_t s = 0; s < f.sections.size(); ++s) {
    const Biquad& q = f.sections[s];
    const double gain = (q.b[0] + q.b[1] + q.b[2]) / (q.a[0] + q.a[1] + q.a[2]);
    const double out = gain * level;
    const double z2 = q.b[2] * level - q.a[2] * out;
    const double z1 = q.b[1] * level - q.a[1] * out + z2;
    zi[s] = {z1, z2};
    level = out;
  }
  return zi;
}

}  // namespace

void BandpassSpec::validate(double sample_rate_hz) const {
  std::ostringstream msg;
  if (order <= 0) {
    msg << "band-pass: order must be positive (got " << order << ")";
    throw Error(ErrorKind::InvalidSpec, msg.str());
  }
  if (!(low_bpm > 0.0) || !(high_bpm > low_bpm)) {
    msg << "band-pass: need 0 < low < high (got " << low_bpm << ", " << high_bpm << " bpm)";
    throw Error(ErrorKind::InvalidSpec, msg.str());
  }
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorKind::InvalidSpec, "band-pass: sample rate must be positive");
  }
  if (high_hz() >= 0.5 * sample_rate_hz) {
    msg << "band-pass: cutoff " << high_hz() << " Hz >= Nyquist " << 0.5 * sample_rate_hz
        << " Hz";
    throw Error(ErrorKind::InvalidSpec, msg.str());
  }
}

std::complex<double> FilterCoefficients::response(double freq_hz) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const cplx zinv = std::polar(1.0, -omega);
  cplx h{1.0, 0.0};
  for (const Biquad& q : sections) {
    const cplx num = q.b[0] + zinv * (q.b[1] + zinv * q.b[2]);
    const cplx den = q.a[0] + zinv * (q.a[1] + zinv * q.a[2]);
    h *= num / den;
  }
  return h;
}

double FilterCoefficients::magnitude_db(double freq_hz) const {
  return 20.0 * std::log10(std::abs(response(freq_hz)));
}

std::vector<std::complex<double>> FilterCoefficients::poles() const {
  std::vector<cplx> out;
  for (const Biquad& q : sections) {
    const cplx disc = std::sqrt(cplx(q.a[1] * q.a[1] - 4.0 * q.a[2], 0.0));
    out.push_back((-q.a[1] + disc) / 2.0);
    out.push_back((-q.a[1] - disc) / 2.0);
  }
  return out;
}

FilterCoefficients design_bandpass(const BandpassSpec& spec, double sample_rate_hz) {
  spec.validate(sample_rate_hz);
  const int n = spec.order;
  const double fs2 = 2.0 * sample_rate_hz;
  const double w_lo = fs2 * std::tan(std::numbers::pi * spec.low_hz() / sample_rate_hz);
  const double w_hi = fs2 * std::tan(std::numbers::pi * spec.high_hz() / sample_rate_hz);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  std::vector<cplx> zpoles;
  zpoles.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n);
    const cplx proto = std::polar(1.0, theta);
    const cplx half = proto * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0_sq);
    for (const cplx s : {half + root, half - root}) {
      zpoles.push_back((fs2 + s) / (fs2 - s));
    }
  }

  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) <= kRealPoleTol) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::arg(a) < std::arg(b); });
  std::sort(reals.begin(), reals.end());

  FilterCoefficients f;
  f.sample_rate_hz = sample_rate_hz;
  f.design_order = n;
  // n zeros at z = 1 and n at z = -1: every section gets numerator 1 - z^-2.
  for (const cplx& p : upper) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a = {1.0, -2.0 * p.real(), std::norm(p)};
    f.sections.push_back(q);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a = {1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]};
    f.sections.push_back(q);
  }
  if (f.sections.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::InvalidSpec, "band-pass: pole pairing failed");
  }

  const double w0 = std::sqrt(w0_sq);
  const double f_centre = sample_rate_hz / std::numbers::pi * std::atan(w0 / fs2);
  const double g = std::abs(f.response(f_centre));
  for (double& c : f.sections.front().b) c /= g;
  return f;
}

std::vector<double> filter_causal(const FilterCoefficients& f, std::span<const double> x) {
  return run_cascade(f, x, nullptr);
}

Waveform bandpass_zero_phase(const Waveform& w, const FilterCoefficients& f) {
  if (f.sample_rate_hz != w.sample_rate_hz()) {
    throw Error(ErrorKind::InvalidArgument, "band-pass: filter designed for a different rate");
  }
  const std::size_t pad = 3 * static_cast<std::size_t>(f.design_order);
  const std::size_t n = w.size();
  if (n <= pad) {
    std::ostringstream msg;
    msg << "band-pass: signal of " << n << " samples too short (need > " << pad << ")";
    throw Error(ErrorKind::SignalTooShort, msg.str());
  }
  const auto x = w.samples();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto zi = steady_state(f, ext.front());
  std::vector<double> fwd = run_cascade(f, ext, &zi);
  std::reverse(fwd.begin(), fwd.end());
  zi = steady_state(f, fwd.front());
  std::vector<double> back = run_cascade(f, fwd, &zi);
  std::reverse(back.begin(), back.end());

  std::vector<double> out(back.begin() + static_cast<std::ptrdiff_t>(pad),
                          back.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return w.with_samples(std::move(out));
}

Waveform bandpass_zero_phase(const Waveform& w, const BandpassSpec& spec) {
  return bandpass_zero_phase(w, design_bandpass(spec, w.sample_rate_hz()));
}

}  // namespace bodypulse
