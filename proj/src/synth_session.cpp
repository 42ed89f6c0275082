#include "bodypulse/synth_session.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/extract.hpp"
#include "bodypulse/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bodypulse {

namespace {

constexpr int kWidth = 160;
constexpr int kHeight = 120;
constexpr int kCell = 20;

struct RoiLayout {
  const char* label;
  BoundingBox box;
  double delay_s;
};

// The palm comes first; it carries the grid.
const std::array<RoiLayout, 6> kRois{{{"left-palm", {0, 0, 60, 60}, 0.045},
                                      {"face", {70, 2, 30, 30}, 0.0},
                                      {"left-arm", {62, 36, 14, 40}, 0.02},
                                      {"right-arm", {104, 36, 14, 40}, 0.018},
                                      {"left-leg", {70, 80, 14, 38}, 0.05},
                                      {"right-leg", {90, 80, 14, 38}, 0.047}}};

// Top-right palm cell keeps only its bottom 6 rows of skin (30%).
constexpr int kPartialCol = 2;
constexpr int kPartialSkinRows = 6;

struct BaseKeypoint {
  const char* name;
  double x;
  double y;
};

const std::array<BaseKeypoint, 8> kKeypoints{{{"left_wrist", 30, 58},
                                              {"left_thumb", 55, 35},
                                              {"left_index", 40, 4},
                                              {"left_pinky", 8, 10},
                                              {"left_elbow", 69, 75},
                                              {"left_shoulder", 69, 36},
                                              {"nose", 85, 17},
                                              {"left_hip", 77, 100}}};

io::Mask palm_mask() {
  const auto& b = kRois[0].box;
  io::Mask m = io::rect_mask(kWidth, kHeight, b.x, b.y, b.width, b.height);
  const int x0 = b.x + kPartialCol * kCell;
  for (int y = b.y; y < b.y + kCell - kPartialSkinRows; ++y) {
    for (int x = x0; x < x0 + kCell; ++x) m.data[static_cast<std::size_t>(y * kWidth + x)] = 0;
  }
  return m;
}

RGBTrace roi_trace(const RateProfile& rate, const SynthSessionOptions& opt, double delay_s, double noise,
                   std::uint64_t seed, const std::string& label) {
  PulseModel m;
  m.rate = rate;
  m.fs_hz = opt.fps;
  m.duration_s = opt.duration_s;
  m.delay_s = delay_s;
  m.seed = seed;
  RgbSynthOptions ro;
  ro.scale = 255.0;
  ro.noise_std = noise;
  ro.seed = seed ^ 0x5bd1e995u;
  return synth_rgb_trace(synth_pulse(m), ro, label);
}

std::vector<PoseKeypoints> synth_poses(const SynthSessionOptions& opt) {
  std::mt19937_64 rng(opt.seed ^ 0x2545f4914f6cdd1dull);
  std::normal_distribution<double> jitter(0.0, 0.3);
  std::vector<PoseKeypoints> poses;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k < static_cast<int>(std::floor(opt.duration_s)); ++k) {
    const double t = k + 0.5;
    const double dx = 2.0 * std::sin(two_pi * t / 23.0);
    const double dy = 1.5 * std::sin(two_pi * t / 31.0);
    const double s = 1.0 + 0.01 * std::sin(two_pi * t / 17.0);
    PoseKeypoints p;
    p.frame_time_s = t;
    for (const auto& b : kKeypoints) {
      const double vis = (k % 7 == 3 && std::string(b.name) == "left_pinky") ? 0.3 : 0.95;
      p.points.push_back({b.name, 30.0 + s * (b.x - 30.0) + dx + jitter(rng),
                          30.0 + s * (b.y - 30.0) + dy + jitter(rng), vis});
    }
    poses.push_back(std::move(p));
  }
  return poses;
}

std::string site_file(const std::string& site) { return "sensors/" + site + ".csv"; }

}  // namespace

RateProfile session_rate(const SynthSessionOptions& opt) {
  return RateProfile::ramp(opt.rate_from_bpm, opt.rate_to_bpm, opt.duration_s);
}

SessionManifest write_synthetic_session(const std::filesystem::path& dir, const SynthSessionOptions& opt) {
  if (!(opt.duration_s >= 12.0)) {
    throw Error(ErrorKind::InvalidArgument, "synth: duration must be at least 12 s");
  }
  const RateProfile rate = session_rate(opt);
  SessionManifest m;
  m.session_id = "synth-" + std::to_string(opt.seed);
  m.duration_s = opt.duration_s;
  m.video = {opt.fps, kWidth, kHeight, std::nullopt};
  m.base_dir = dir;

  // Contact sensors: IR carries the pulse; red is an independent, weaker copy.
  const auto sites = default_contact_sites();
  ContactBankOptions cb;
  cb.fs_hz = opt.sensor_fs_hz;
  cb.duration_s = opt.duration_s;
  cb.seed = opt.seed;
  std::vector<std::vector<MotionBurst>> bursts(sites.size());
  if (opt.corrupt_sensors) {
    for (std::size_t i : {3u, 5u, 7u}) bursts[i] = {{2.0, 5.0, 3.0}};
  }
  const auto ir = synth_contact_bank(rate, sites, cb, bursts);
  cb.seed = opt.seed + 1000;
  cb.noise_std = 0.2;
  const auto red = synth_contact_bank(rate, sites, cb, bursts);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    io::write_sensor_csv(dir / site_file(sites[i].name), red[i].wave, ir[i].wave);
    m.sensors.push_back({sites[i].name, site_file(sites[i].name), "ir", opt.sensor_fs_hz});
  }
  io::write_oximeter_csv(dir / "oximeter.csv", synth_oximeter(rate, opt.duration_s, opt.oximeter_fs_hz));
  m.oximeter = OximeterEntry{"oximeter.csv", opt.oximeter_fs_hz};

  // Palm grid: one trace per 20x20 cell, the bottom-right cell much noisier.
  const auto& palm = kRois[0];
  const GridGeometry geo = GridGeometry::from_bbox(palm.box.x, palm.box.y, palm.box.width, palm.box.height, kCell);
  const io::Mask pmask = palm_mask();
  std::vector<RGBTrace> cells;
  std::vector<double> skin;
  for (int c = 0; c < geo.cell_count(); ++c) {
    const double noise = c == geo.cell_count() - 1 ? 2.0 : 0.1;
    cells.push_back(roi_trace(rate, opt, palm.delay_s, noise, opt.seed * 97 + 11 + static_cast<std::uint64_t>(c),
                              "cell"));
    skin.push_back(c == kPartialCol ? static_cast<double>(kPartialSkinRows) / kCell : 1.0);
  }
  const std::size_t n = cells.front().size();
  std::vector<CellFrame> cell_frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    cell_frames[i].frame_index = static_cast<long>(i);
    for (const auto& c : cells) cell_frames[i].cells.push_back({c.r[i], c.g[i], c.b[i]});
  }
  io::write_cell_means(dir / "grid/left-palm_cells.csv", cell_frames, geo);
  io::write_skin_fraction(dir / "grid/left-palm_skin.csv", skin, geo);
  m.grids.push_back({"left-palm", kCell, {palm.box.x, palm.box.y, palm.box.width, palm.box.height},
                     "grid/left-palm_cells.csv", "grid/left-palm_skin.csv"});

  // ROI traces; the palm trace is the skin-weighted mean of its cells.
  std::vector<RGBTrace> traces;
  {
    std::array<std::vector<double>, 3> ch;
    for (auto& v : ch) v.assign(n, 0.0);
    double wsum = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) wsum += skin[c];
    for (std::size_t c = 0; c < cells.size(); ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        ch[0][i] += skin[c] * cells[c].r[i] / wsum;
        ch[1][i] += skin[c] * cells[c].g[i] / wsum;
        ch[2][i] += skin[c] * cells[c].b[i] / wsum;
      }
    }
    const Waveform& proto = cells.front().r;
    traces.emplace_back(proto.with_samples(ch[0]), proto.with_samples(ch[1]), proto.with_samples(ch[2]),
                        palm.label);
  }
  for (std::size_t k = 1; k < kRois.size(); ++k) {
    traces.push_back(roi_trace(rate, opt, kRois[k].delay_s, 0.1, opt.seed * 131 + 7 + k, kRois[k].label));
  }
  for (std::size_t k = 0; k < kRois.size(); ++k) {
    const std::string label = kRois[k].label;
    const auto& b = kRois[k].box;
    const io::Mask mask = k == 0 ? pmask : io::rect_mask(kWidth, kHeight, b.x, b.y, b.width, b.height);
    io::write_pgm(dir / ("masks/" + label + ".pgm"), mask);
    io::write_rgb_csv(dir / ("traces/" + label + ".csv"), traces[k]);
    m.rois.push_back({label, "masks/" + label + ".pgm", std::array<int, 4>{b.x, b.y, b.width, b.height},
                      "traces/" + label + ".csv"});
  }

  write_keypoints(dir / "keypoints.json", synth_poses(opt));
  m.keypoints = "keypoints.json";
  m.portions.push_back({"relaxed", 0.0, opt.duration_s});

  if (opt.write_frames) {
    // Dithered rendering: per-pixel uniform offsets before truncation keep
    // ROI means unbiased.
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> dither(0.0, 1.0);
    const std::size_t plane = static_cast<std::size_t>(kWidth * kHeight);
    std::vector<int> owner(plane, -1);
    for (std::size_t k = 0; k < kRois.size(); ++k) {
      const auto& b = kRois[k].box;
      for (int y = b.y; y < b.y + b.height; ++y) {
        for (int x = b.x; x < b.x + b.width; ++x) owner[static_cast<std::size_t>(y * kWidth + x)] = static_cast<int>(k);
      }
    }
    io::FrameDumpHeader h{kWidth, kHeight, static_cast<std::uint32_t>(n), opt.fps};
    std::vector<std::vector<std::uint8_t>> frames(n, std::vector<std::uint8_t>(h.frame_bytes()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < plane; ++p) {
        const int x = static_cast<int>(p) % kWidth;
        const int y = static_cast<int>(p) / kWidth;
        std::array<double, 3> v{40.0, 40.0, 40.0};
        if (owner[p] == 0) {
          const auto& c = cells[static_cast<std::size_t>((y / kCell) * geo.cols + x / kCell)];
          v = {c.r[i], c.g[i], c.b[i]};
        } else if (owner[p] > 0) {
          const auto& t = traces[static_cast<std::size_t>(owner[p])];
          v = {t.r[i], t.g[i], t.b[i]};
        }
        for (std::size_t k = 0; k < 3; ++k) {
          frames[i][k * plane + p] = static_cast<std::uint8_t>(std::clamp(std::floor(v[k] + dither(rng)), 0.0, 255.0));
        }
      }
    }
    io::write_frame_dump(dir / "frames.bpfd", h, frames);
    m.video.frames = "frames.bpfd";
  }

  m.save(dir / "manifest.json");
  return m;
}

}  // namespace bodypulse
