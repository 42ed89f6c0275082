#include "bodypulse/spatial_grid.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace bodypulse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bilinear sample at fractional (row, col); NaN outside or next to an
// undefined value that carries weight.
double bilinear(const Map2D& m, double r, double c) {
  constexpr double eps = 1e-9;
  if (r < -eps || c < -eps || r > m.rows - 1 + eps || c > m.cols - 1 + eps) return kNaN;
  r = std::clamp(r, 0.0, static_cast<double>(m.rows - 1));
  c = std::clamp(c, 0.0, static_cast<double>(m.cols - 1));
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const int r1 = std::min(r0 + 1, m.rows - 1);
  const int c1 = std::min(c0 + 1, m.cols - 1);
  const double fr = r - r0;
  const double fc = c - c0;
  double acc = 0.0;
  const std::array<std::array<double, 3>, 4> taps{{{(1 - fr) * (1 - fc), double(r0), double(c0)},
                                                   {(1 - fr) * fc, double(r0), double(c1)},
                                                   {fr * (1 - fc), double(r1), double(c0)},
                                                   {fr * fc, double(r1), double(c1)}}};
  for (const auto& t : taps) {
    if (t[0] <= 0.0) continue;
    const double v = m.at(static_cast<int>(t[1]), static_cast<int>(t[2]));
    if (std::isnan(v)) return kNaN;
    acc += t[0] * v;
  }
  return acc;
}

double corner_aligned(int out_index, int out_size, int in_size) {
  if (in_size <= 1 || out_size <= 1) return 0.0;
  return static_cast<double>(out_index) * static_cast<double>(in_size - 1) /
         static_cast<double>(out_size - 1);
}

// Similarity transform taking points to zero mean and mean distance sqrt(2).
Eigen::Matrix3d hartley(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double d = 0.0;
  for (const auto& p : pts) d += (p - c).norm();
  d /= static_cast<double>(pts.size());
  if (!(d > 0.0)) throw Error(ErrorKind::Degenerate, "homography: coincident points");
  const double s = std::sqrt(2.0) / d;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool collinear(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  return es.eigenvalues()(0) <= 1e-10 * std::max(es.eigenvalues()(1), 1e-300);
}

}  // namespace

Map2D::Map2D(int rows_, int cols_, double fill)
    : rows(rows_), cols(cols_), values(static_cast<std::size_t>(rows_ * cols_), fill) {}

bool Map2D::defined(int r, int c) const { return !std::isnan(at(r, c)); }

std::size_t Map2D::defined_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return !std::isnan(v); }));
}

GridGeometry GridGeometry::from_bbox(int x, int y, int width, int height, int cell_px) {
  if (cell_px <= 0 || width < 0 || height < 0) {
    throw Error(ErrorKind::InvalidArgument, "grid: cell size must be positive");
  }
  return {x, y, cell_px, width / cell_px, height / cell_px};
}

SubregionGrid grid_traces(const std::vector<CellFrame>& frames, const GridGeometry& geometry,
                          double fps, double start_time_s, std::vector<double> skin_fraction) {
  const int cells = geometry.cell_count();
  if (cells <= 0) throw Error(ErrorKind::InvalidArgument, "grid: geometry has no cells");
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "grid: no frames");
  std::ostringstream gaps;
  std::size_t n_gaps = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const long expect = frames[i - 1].frame_index + 1;
    if (frames[i].frame_index != expect) {
      gaps << (n_gaps++ ? ", " : "") << expect << ".." << frames[i].frame_index - 1;
    }
  }
  if (n_gaps > 0) {
    throw Error(ErrorKind::DataFormat, "grid: missing frames " + gaps.str());
  }
  for (const CellFrame& f : frames) {
    if (static_cast<int>(f.cells.size()) != cells) {
      std::ostringstream msg;
      msg << "grid: frame " << f.frame_index << " has " << f.cells.size() << " cells, expected "
          << cells;
      throw Error(ErrorKind::DataFormat, msg.str());
    }
  }
  if (skin_fraction.empty()) skin_fraction.assign(static_cast<std::size_t>(cells), 1.0);
  if (static_cast<int>(skin_fraction.size()) != cells) {
    throw Error(ErrorKind::InvalidArgument, "grid: skin fraction size does not match the grid");
  }

  SubregionGrid grid{geometry, {}, std::move(skin_fraction)};
  const std::size_t n = frames.size();
  for (int c = 0; c < cells; ++c) {
    std::array<std::vector<double>, 3> ch;
    for (auto& v : ch) v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 3; ++k) ch[k][i] = frames[i].cells[static_cast<std::size_t>(c)][k];
    }
    const int row = c / geometry.cols;
    const int col = c % geometry.cols;
    grid.traces.emplace_back(Waveform(std::move(ch[0]), fps, start_time_s),
                             Waveform(std::move(ch[1]), fps, start_time_s),
                             Waveform(std::move(ch[2]), fps, start_time_s),
                             "cell-" + std::to_string(row) + "-" + std::to_string(col));
  }
  return grid;
}

std::vector<ErrorFrame> score_grid(const SubregionGrid& grid, const PulseRateSeries& ref_rate,
                                   const WindowPlan& plan) {
  const auto& geo = grid.geometry;
  std::vector<ErrorFrame> frames;
  if (grid.traces.empty()) return frames;
  const RGBTrace& first = grid.traces.front();
  const double fs = first.sample_rate_hz();
  const std::size_t len = plan.length_samples(fs);
  const auto starts = window_starts(first.size(), fs, plan);

  MethodConfig cfg;
  cfg.method = RppgMethod::Pos;
  cfg.internal_window_s = plan.length_s;
  const WindowPlan single{plan.length_s, plan.length_s};

  for (std::size_t w = 0; w < starts.size(); ++w) {
    const double t_start = first.r.time_at(starts[w]);
    const double centre = t_start + 0.5 * static_cast<double>(len) / fs;
    const RateEntry* ref = nullptr;
    for (const RateEntry& e : ref_rate.entries) {
      if (!e.bpm) continue;
      if (ref == nullptr || std::abs(e.time_s - centre) < std::abs(ref->time_s - centre)) ref = &e;
    }
    if (ref == nullptr || std::abs(ref->time_s - centre) > 0.5 * plan.length_s + 1e-9) {
      std::ostringstream msg;
      msg << "grid: no reference rate near window centre " << centre << " s";
      throw Error(ErrorKind::InvalidArgument, msg.str());
    }
    ErrorFrame ef;
    ef.window_index = static_cast<int>(w);
    ef.window_start_s = t_start;
    ef.mae_map = Map2D(geo.rows, geo.cols);
    ef.snr_map = Map2D(geo.rows, geo.cols);
    ef.skin_mask.resize(static_cast<std::size_t>(geo.cell_count()));
    for (int c = 0; c < geo.cell_count(); ++c) {
      const auto ci = static_cast<std::size_t>(c);
      ef.skin_mask[ci] = grid.skin_fraction[ci] >= 0.5 ? 1 : 0;
      const int row = c / geo.cols;
      const int col = c % geo.cols;
      Waveform pulse = first.r;
      try {
        pulse = pos(grid.traces[ci].slice(starts[w], len), cfg);
      } catch (const Error&) {
        continue;  // unusable cell window (e.g. black pixels): left undefined
      }
      const auto series = stft_pulse_rate(pulse, single);
      if (series.entries.empty() || !series.entries.front().bpm) continue;
      ef.mae_map.at(row, col) = std::abs(*series.entries.front().bpm - *ref->bpm);
      ef.snr_map.at(row, col) = window_snr_db(pulse.samples(), fs, *ref->bpm);
    }
    frames.push_back(std::move(ef));
  }
  return frames;
}

PixelFrame upsample_frame(const ErrorFrame& frame, int factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidArgument, "upsample: factor must be >= 1");
  const int rows = frame.mae_map.rows;
  const int cols = frame.mae_map.cols;
  const int out_r = rows * factor;
  const int out_c = cols * factor;
  PixelFrame out{Map2D(out_r, out_c), Map2D(out_r, out_c),
                 std::vector<std::uint8_t>(static_cast<std::size_t>(out_r * out_c), 0)};
  for (int r = 0; r < out_r; ++r) {
    const double sr = corner_aligned(r, out_r, rows);
    for (int c = 0; c < out_c; ++c) {
      const double sc = corner_aligned(c, out_c, cols);
      const int cell = (r / factor) * cols + c / factor;
      const bool skin = frame.skin_mask.empty() || frame.skin_mask[static_cast<std::size_t>(cell)] != 0;
      out.mask[static_cast<std::size_t>(r * out_c + c)] = skin ? 1 : 0;
      if (!skin) continue;
      out.mae.at(r, c) = bilinear(frame.mae_map, sr, sc);
      out.snr.at(r, c) = bilinear(frame.snr_map, sr, sc);
    }
  }
  return out;
}

const Keypoint* PoseKeypoints::find(const std::string& name) const {
  for (const Keypoint& k : points) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

PoseKeypoints average_pose(const std::vector<PoseKeypoints>& poses) {
  if (poses.empty()) throw Error(ErrorKind::InvalidArgument, "average pose: no poses");
  PoseKeypoints out;
  double t = 0.0;
  for (const auto& p : poses) t += p.frame_time_s;
  out.frame_time_s = t / static_cast<double>(poses.size());
  for (const Keypoint& proto : poses.front().points) {
    double sx = 0.0, sy = 0.0, vis = 0.0;
    int seen = 0;
    for (const auto& p : poses) {
      const Keypoint* k = p.find(proto.name);
      if (k == nullptr) {
        throw Error(ErrorKind::InvalidArgument, "average pose: keypoint '" + proto.name + "' missing from a pose");
      }
      vis += k->visibility;
      if (k->visibility >= kVisibleThreshold) {
        sx += k->x;
        sy += k->y;
        ++seen;
      }
    }
    if (seen == 0) continue;
    out.points.push_back({proto.name, sx / seen, sy / seen, vis / static_cast<double>(poses.size())});
  }
  return out;
}

Eigen::Matrix3d homography_dlt(const std::vector<Eigen::Vector2d>& src,
                               const std::vector<Eigen::Vector2d>& dst) {
  if (src.size() != dst.size() || src.size() < 4) {
    throw Error(ErrorKind::Degenerate, "homography: need at least 4 correspondences");
  }
  if (collinear(src) || collinear(dst)) {
    throw Error(ErrorKind::Degenerate, "homography: correspondences are collinear");
  }
  const Eigen::Matrix3d ts = hartley(src);
  const Eigen::Matrix3d td = hartley(dst);
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d q = td * dst[static_cast<std::size_t>(i)].homogeneous();
    const double x = p.x() / p.z(), y = p.y() / p.z();
    const double u = q.x() / q.z(), v = q.y() / q.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A unique solution needs a one-dimensional null space.
  if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0)) {
    throw Error(ErrorKind::Degenerate, "homography: rank-deficient correspondence set");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d out = td.inverse() * hn * ts;
  if (!(std::abs(out(2, 2)) > 1e-12 * out.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::Degenerate, "homography: H(2,2) vanishes");
  }
  return out / out(2, 2);
}

Eigen::Matrix3d homography_from_poses(const PoseKeypoints& src, const PoseKeypoints& dst) {
  std::vector<Eigen::Vector2d> a, b;
  for (const Keypoint& k : src.points) {
    if (k.visibility < kVisibleThreshold) continue;
    const Keypoint* m = dst.find(k.name);
    if (m == nullptr || m->visibility < kVisibleThreshold) continue;
    a.emplace_back(k.x, k.y);
    b.emplace_back(m->x, m->y);
  }
  if (a.size() < 4) {
    std::ostringstream msg;
    msg << "homography: only " << a.size() << " shared visible keypoints (need 4)";
    throw Error(ErrorKind::Degenerate, msg.str());
  }
  return homography_dlt(a, b);
}

Eigen::Matrix3d translation(double dx, double dy) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 2) = dx;
  t(1, 2) = dy;
  return t;
}

Map2D warp_error_frame(const Map2D& map, const Eigen::Matrix3d& h, int out_width, int out_height) {
  const double det = h.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(h.cwiseAbs().maxCoeff(), 3))) {
    throw Error(ErrorKind::Degenerate, "warp: homography is singular");
  }
  const Eigen::Matrix3d inv = h.inverse();
  Map2D out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Eigen::Vector3d p = inv * Eigen::Vector3d(x, y, 1.0);
      if (!(std::abs(p.z()) > 1e-12)) continue;
      out.at(y, x) = bilinear(map, p.y() / p.z(), p.x() / p.z());
    }
  }
  return out;
}

Heatmap aggregate_heatmap(const std::vector<PixelFrame>& frames) {
  if (frames.empty()) return {};
  const int rows = frames.front().mae.rows;
  const int cols = frames.front().mae.cols;
  for (const auto& f : frames) {
    if (f.mae.rows != rows || f.mae.cols != cols || f.snr.rows != rows || f.snr.cols != cols) {
      throw Error(ErrorKind::InvalidArgument, "aggregate: frames differ in size");
    }
  }
  Heatmap h{Map2D(rows, cols), Map2D(rows, cols), Map2D(rows, cols, 0.0)};
  Map2D snr_count(rows, cols, 0.0);
  Map2D mae_sum(rows, cols, 0.0), snr_sum(rows, cols, 0.0);
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < f.mae.values.size(); ++i) {
      if (!std::isnan(f.mae.values[i])) {
        mae_sum.values[i] += f.mae.values[i];
        h.count.values[i] += 1.0;
      }
      if (!std::isnan(f.snr.values[i])) {
        snr_sum.values[i] += f.snr.values[i];
        snr_count.values[i] += 1.0;
      }
    }
  }
  for (std::size_t i = 0; i < h.count.values.size(); ++i) {
    if (h.count.values[i] > 0) h.mean_mae.values[i] = mae_sum.values[i] / h.count.values[i];
    if (snr_count.values[i] > 0) h.mean_snr.values[i] = snr_sum.values[i] / snr_count.values[i];
  }
  return h;
}

}  // namespace bodypulse
