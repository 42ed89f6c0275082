#include "doctest.h"

#include "bodypulse/error.hpp"
#include "bodypulse/spatial_grid.hpp"
#include "bodypulse/synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace bodypulse;

namespace {

constexpr double kFps = 90.0;

RGBTrace clean_cell(double seconds, std::uint64_t seed) {
  PulseModel m;
  m.duration_s = seconds;
  m.fs_hz = kFps;
  m.seed = seed;
  RgbSynthOptions opt;
  opt.noise_std = 2e-4;
  opt.seed = seed;
  opt.scale = 255.0;
  return synth_rgb_trace(synth_pulse(m), opt);
}

RGBTrace noise_cell(double seconds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(seconds * kFps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> r(n), g(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = 150.0 + nd(rng);
    g[i] = 120.0 + nd(rng);
    b[i] = 100.0 + nd(rng);
  }
  return RGBTrace(Waveform(r, kFps), Waveform(g, kFps), Waveform(b, kFps));
}

std::vector<CellFrame> to_frames(const std::vector<RGBTrace>& cells) {
  std::vector<CellFrame> frames(cells.front().size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].frame_index = static_cast<long>(i);
    for (const auto& c : cells) frames[i].cells.push_back({c.r[i], c.g[i], c.b[i]});
  }
  return frames;
}

PulseRateSeries flat_reference(double seconds, double bpm = 72.0) {
  PulseRateSeries s;
  s.window_length_s = 10.0;
  s.stride_s = 1.0;
  for (double t = 5.0; t <= seconds - 5.0 + 1e-9; t += 1.0) s.entries.push_back({t, bpm});
  return s;
}

PoseKeypoints make_pose(const std::vector<Eigen::Vector2d>& pts) {
  PoseKeypoints p;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    p.points.push_back({"k" + std::to_string(i), pts[i].x(), pts[i].y(), 1.0});
  }
  return p;
}

PoseKeypoints apply(const Eigen::Matrix3d& h, const PoseKeypoints& p) {
  PoseKeypoints out = p;
  for (auto& k : out.points) {
    const Eigen::Vector3d q = h * Eigen::Vector3d(k.x, k.y, 1.0);
    k.x = q.x() / q.z();
    k.y = q.y() / q.z();
  }
  return out;
}

std::vector<Eigen::Vector2d> body_points() {
  return {{100, 50}, {140, 55}, {95, 120}, {150, 118}, {110, 200}, {140, 205},
          {80, 90},  {170, 92}, {120, 30}, {125, 160}, {60, 140}, {190, 145}};
}

double rel_fro(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("grid geometry drops partial cells") {
  const auto g = GridGeometry::from_bbox(0, 0, 100, 60, 20);
  CHECK(g.cols == 5);
  CHECK(g.rows == 3);
  const auto h = GridGeometry::from_bbox(3, 4, 39, 39, 20);
  CHECK(h.cols == 1);
  CHECK(h.rows == 1);
  CHECK(h.origin_x == 3);
  CHECK_THROWS_AS(GridGeometry::from_bbox(0, 0, 10, 10, 0), Error);
}

TEST_CASE("grid_traces assembles per-cell traces and reports gaps") {
  const auto geo = GridGeometry::from_bbox(0, 0, 40, 20, 20);
  std::vector<CellFrame> frames;
  for (long i = 0; i < 10; ++i) {
    frames.push_back({i, {{double(i), 1.0, 2.0}, {3.0, double(i) * 2, 4.0}}});
  }
  const auto grid = grid_traces(frames, geo, 30.0);
  REQUIRE(grid.traces.size() == 2);
  CHECK(grid.traces[0].r[7] == 7.0);
  CHECK(grid.traces[1].g[4] == 8.0);
  CHECK(grid.traces[1].roi_label == "cell-0-1");

  frames.erase(frames.begin() + 3, frames.begin() + 5);
  frames.erase(frames.begin() + 5);
  try {
    grid_traces(frames, geo, 30.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3..4") != std::string::npos);
    CHECK(msg.find("7..7") != std::string::npos);
  }

  std::vector<CellFrame> short_frame{{0, {{1, 1, 1}}}};
  CHECK_THROWS_AS(grid_traces(short_frame, geo, 30.0), Error);
}

TEST_CASE("score_grid: 90 s yields nine frames, clean cells score well") {
  const double dur = 90.0;
  const auto geo = GridGeometry::from_bbox(0, 0, 60, 60, 20);
  std::vector<RGBTrace> cells;
  for (int i = 0; i < geo.cell_count(); ++i) cells.push_back(clean_cell(dur, 11 + i));
  const auto grid = grid_traces(to_frames(cells), geo, kFps);
  const auto frames = score_grid(grid, flat_reference(dur));
  REQUIRE(frames.size() == 9);
  for (std::size_t w = 0; w < frames.size(); ++w) {
    CHECK(frames[w].window_index == static_cast<int>(w));
    CHECK(frames[w].window_start_s == doctest::Approx(10.0 * w));
    for (int r = 0; r < geo.rows; ++r) {
      for (int c = 0; c < geo.cols; ++c) {
        REQUIRE(frames[w].mae_map.defined(r, c));
        CHECK(frames[w].mae_map.at(r, c) < 0.5);
        CHECK(frames[w].snr_map.at(r, c) > 5.0);
      }
    }
  }
}

TEST_CASE("score_grid: noise cells do not leak into clean cells") {
  const double dur = 30.0;
  const auto geo = GridGeometry::from_bbox(0, 0, 40, 40, 20);
  std::vector<RGBTrace> cells;
  for (int i = 0; i < 4; ++i) cells.push_back(i % 2 ? noise_cell(dur, 100 + i) : clean_cell(dur, 5 + i));
  const auto ref = flat_reference(dur);
  const auto base = score_grid(grid_traces(to_frames(cells), geo, kFps), ref);
  REQUIRE(base.size() == 3);
  for (const auto& f : base) {
    for (int i = 0; i < 4; ++i) {
      const int r = i / 2, c = i % 2;
      if (i % 2) {
        CHECK(f.snr_map.at(r, c) < 0.0);
      } else {
        CHECK(f.mae_map.at(r, c) < 0.5);
      }
    }
  }
  std::size_t big_mae = 0;
  for (const auto& f : base) big_mae += (f.mae_map.at(0, 1) > 3.0) + (f.mae_map.at(1, 1) > 3.0);
  CHECK(big_mae >= 4);

  // Perturb one cell; every other cell must score bit-identically.
  auto perturbed = cells;
  perturbed[2] = noise_cell(dur, 999);
  const auto after = score_grid(grid_traces(to_frames(perturbed), geo, kFps), ref);
  REQUIRE(after.size() == base.size());
  bool changed = false;
  for (std::size_t w = 0; w < base.size(); ++w) {
    for (int i = 0; i < 4; ++i) {
      const int r = i / 2, c = i % 2;
      if (i == 2) {
        changed = changed || after[w].snr_map.at(r, c) != base[w].snr_map.at(r, c);
      } else {
        CHECK(after[w].mae_map.at(r, c) == base[w].mae_map.at(r, c));
        CHECK(after[w].snr_map.at(r, c) == base[w].snr_map.at(r, c));
      }
    }
  }
  CHECK(changed);
}

TEST_CASE("score_grid: undefined cells and short sessions") {
  const auto geo = GridGeometry::from_bbox(0, 0, 40, 20, 20);
  auto flat = noise_cell(20.0, 1);
  std::vector<double> zeros(flat.size(), 0.0);
  flat = RGBTrace(flat.r.with_samples(zeros), flat.g.with_samples(zeros), flat.b.with_samples(zeros));
  const std::vector<RGBTrace> cells{clean_cell(20.0, 2), flat};
  const auto frames = score_grid(grid_traces(to_frames(cells), geo, kFps), flat_reference(20.0));
  REQUIRE(frames.size() == 2);
  for (const auto& f : frames) {
    CHECK(f.mae_map.defined(0, 0));
    CHECK_FALSE(f.mae_map.defined(0, 1));
    CHECK_FALSE(f.snr_map.defined(0, 1));
  }

  const std::vector<RGBTrace> short_cells{clean_cell(9.0, 3), clean_cell(9.0, 4)};
  CHECK(score_grid(grid_traces(to_frames(short_cells), geo, kFps), flat_reference(20.0)).empty());
}

TEST_CASE("upsample_frame") {
  ErrorFrame f;
  f.mae_map = Map2D(2, 2);
  f.snr_map = Map2D(2, 2, 7.0);
  f.mae_map.values = {0, 1, 0, 1};
  f.skin_mask = {1, 1, 1, 1};

  const auto up = upsample_frame(f, 20);
  REQUIRE(up.mae.rows == 40);
  REQUIRE(up.mae.cols == 40);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      CHECK(up.mae.at(r, c) == doctest::Approx(c / 39.0));
      CHECK(up.snr.at(r, c) == doctest::Approx(7.0));
    }
  }

  const auto same = upsample_frame(f, 1);
  CHECK(same.mae.values == f.mae_map.values);

  f.skin_mask = {1, 0, 1, 1};
  const auto masked = upsample_frame(f, 4);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool skin = !(r < 4 && c >= 4);
      CHECK(static_cast<bool>(masked.mask[static_cast<std::size_t>(r * 8 + c)]) == skin);
      CHECK(masked.mae.defined(r, c) == skin);
    }
  }
  CHECK_THROWS_AS(upsample_frame(f, 0), Error);
}

TEST_CASE("average_pose") {
  const auto a = make_pose(body_points());
  const auto same = average_pose({a, a, a});
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(same.points[i].x == doctest::Approx(a.points[i].x));
    CHECK(same.points[i].y == doctest::Approx(a.points[i].y));
  }

  auto l = a, r = a;
  for (auto& k : l.points) k.x -= 10;
  for (auto& k : r.points) k.x += 10;
  const auto mid = average_pose({l, r});
  CHECK(mid.points[0].x == doctest::Approx(a.points[0].x));

  auto hidden = l;
  hidden.points[0].visibility = 0.2;
  const auto partial = average_pose({hidden, r});
  CHECK(partial.points[0].x == doctest::Approx(r.points[0].x));
  CHECK(partial.points[0].visibility == doctest::Approx(0.6));

  auto r_hidden = r;
  r_hidden.points[1].visibility = 0.0;
  hidden.points[1].visibility = 0.1;
  const auto dropped = average_pose({hidden, r_hidden});
  CHECK(dropped.points.size() == a.points.size() - 1);
  CHECK(dropped.find("k1") == nullptr);
}

TEST_CASE("homography recovery") {
  const auto src = make_pose(body_points());
  CHECK((homography_from_poses(src, src) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);

  const Eigen::Matrix3d t = translation(10, 5);
  CHECK(rel_fro(homography_from_poses(src, apply(t, src)), t) < 1e-9);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d h;
    h << 1 + 0.2 * u(rng), 0.2 * u(rng), 30 * u(rng), 0.2 * u(rng), 1 + 0.2 * u(rng), 30 * u(rng),
        5e-4 * u(rng), 5e-4 * u(rng), 1.0;
    CHECK(rel_fro(homography_from_poses(src, apply(h, src)), h) < 1e-6);
  }
}

TEST_CASE("homography composition") {
  const auto a = make_pose(body_points());
  Eigen::Matrix3d hab, hbc;
  hab << 1.05, 0.02, 12, -0.03, 0.97, -8, 2e-4, -1e-4, 1;
  hbc << 0.92, -0.05, -20, 0.04, 1.1, 15, -3e-4, 2e-4, 1;
  const auto b = apply(hab, a);
  const auto c = apply(hbc, b);
  const Eigen::Matrix3d direct = homography_from_poses(a, c);
  Eigen::Matrix3d composed = homography_from_poses(b, c) * homography_from_poses(a, b);
  composed /= composed(2, 2);
  CHECK(rel_fro(composed, direct) < 1e-4);
}

TEST_CASE("homography degeneracy") {
  auto few = make_pose({{0, 0}, {10, 0}, {0, 10}, {10, 10}, {5, 5}});
  for (std::size_t i = 2; i < few.points.size(); ++i) few.points[i].visibility = 0.3;
  CHECK_THROWS_AS(homography_from_poses(few, few), Error);

  const auto line = make_pose({{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}});
  CHECK_THROWS_AS(homography_from_poses(line, line), Error);

  auto missing = make_pose(body_points());
  PoseKeypoints other;
  other.points = {missing.points[0], missing.points[1], missing.points[2]};
  CHECK_THROWS_AS(homography_from_poses(missing, other), Error);
}

TEST_CASE("warp_error_frame") {
  Map2D m(30, 40);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = std::sin(0.2 * c) + 0.5 * std::cos(0.15 * r) + 0.01 * r * c;
  }
  const auto same = warp_error_frame(m, Eigen::Matrix3d::Identity(), 40, 30);
  for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(same.values[i] == doctest::Approx(m.values[i]));

  const auto shifted = warp_error_frame(m, translation(5, 2), 40, 30);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 40; ++c) {
      if (c < 5 || r < 2) {
        CHECK_FALSE(shifted.defined(r, c));
      } else {
        CHECK(shifted.at(r, c) == doctest::Approx(m.at(r - 2, c - 5)));
      }
    }
  }

  Eigen::Matrix3d h;
  h << 1.04, 0.03, 1.5, -0.02, 0.98, 0.8, 2e-4, -1e-4, 1;
  const auto fwd = warp_error_frame(m, h, 40, 30);
  const auto back = warp_error_frame(fwd, h.inverse(), 40, 30);
  double lo = m.values[0], hi = lo, diff = 0.0;
  std::size_t n = 0;
  for (double v : m.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (std::isnan(back.values[i])) continue;
    diff += std::abs(back.values[i] - m.values[i]);
    ++n;
  }
  REQUIRE(n > m.values.size() / 2);
  CHECK(diff / n < 0.02 * (hi - lo));

  Map2D holes = m;
  holes.at(10, 10) = std::numeric_limits<double>::quiet_NaN();
  const auto w = warp_error_frame(holes, Eigen::Matrix3d::Identity(), 40, 30);
  CHECK_FALSE(w.defined(10, 10));
  CHECK(w.defined(10, 12));

  Eigen::Matrix3d singular = Eigen::Matrix3d::Zero();
  singular(0, 0) = 1;
  CHECK_THROWS_AS(warp_error_frame(m, singular, 40, 30), Error);
}

TEST_CASE("aggregate_heatmap") {
  PixelFrame a{Map2D(2, 2, 1.0), Map2D(2, 2, 10.0), {1, 1, 1, 1}};
  PixelFrame b{Map2D(2, 2, 3.0), Map2D(2, 2, 20.0), {1, 1, 1, 1}};
  b.mae.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  b.snr.at(0, 0) = std::numeric_limits<double>::quiet_NaN();

  const auto single = aggregate_heatmap({a});
  CHECK(single.mean_mae.values == a.mae.values);
  CHECK(single.count.values == std::vector<double>(4, 1.0));

  const auto two = aggregate_heatmap({a, b});
  CHECK(two.mean_mae.at(0, 0) == 1.0);
  CHECK(two.count.at(0, 0) == 1.0);
  CHECK(two.mean_mae.at(1, 1) == 2.0);
  CHECK(two.mean_snr.at(1, 1) == 15.0);
  CHECK(two.count.at(1, 1) == 2.0);

  const auto many = aggregate_heatmap({a, a, a, a});
  CHECK(many.mean_mae.values == a.mae.values);
  CHECK(many.count.at(1, 0) == 4.0);

  PixelFrame empty{Map2D(2, 2), Map2D(2, 2), {0, 0, 0, 0}};
  const auto none = aggregate_heatmap({empty, empty});
  CHECK_FALSE(none.mean_mae.defined(0, 0));
  CHECK(none.count.at(0, 0) == 0.0);
}

TEST_CASE("masked cells never reach the aggregate") {
  ErrorFrame f;
  f.mae_map = Map2D(2, 2, 1.0);
  f.snr_map = Map2D(2, 2, 3.0);
  f.skin_mask = {1, 1, 0, 1};
  const auto heat = aggregate_heatmap({upsample_frame(f, 5), upsample_frame(f, 5)});
  for (int r = 5; r < 10; ++r) {
    for (int c = 0; c < 5; ++c) {
      CHECK(heat.count.at(r, c) == 0.0);
      CHECK_FALSE(heat.mean_mae.defined(r, c));
    }
  }
  CHECK(heat.count.at(0, 0) == 2.0);
}
