#pragma once

#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/rppg.hpp"
#include "bodypulse/signal.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace bodypulse {

// Dense row-major grid of doubles; NaN marks an undefined value.
struct Map2D {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Map2D() = default;
  Map2D(int rows_, int cols_, double fill = std::numeric_limits<double>::quiet_NaN());

  double& at(int r, int c) { return values[static_cast<std::size_t>(r * cols + c)]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
  bool defined(int r, int c) const;
  std::size_t defined_count() const;
};

struct GridGeometry {
  int origin_x = 0;
  int origin_y = 0;
  int cell_px = 20;
  int cols = 0;
  int rows = 0;

  // Whole cells only: cols = floor(w / cell), rows = floor(h / cell).
  static GridGeometry from_bbox(int x, int y, int width, int height, int cell_px = 20);
  int cell_count() const noexcept { return rows * cols; }
};

// Per-cell mean RGB for one video frame, cells in row-major order.
struct CellFrame {
  long frame_index = 0;
  std::vector<std::array<double, 3>> cells;
};

struct SubregionGrid {
  GridGeometry geometry;
  std::vector<RGBTrace> traces;
  // Fraction of skin pixels per cell; cells at >= 0.5 count as skin.
  std::vector<double> skin_fraction;
};

// Assembles per-cell traces from consecutive frames. Frames must be
// contiguous in frame_index and each must carry every cell.
SubregionGrid grid_traces(const std::vector<CellFrame>& frames, const GridGeometry& geometry,
                          double fps, double start_time_s = 0.0,
                          std::vector<double> skin_fraction = {});

struct ErrorFrame {
  int window_index = 0;
  double window_start_s = 0.0;
  Map2D mae_map;
  Map2D snr_map;
  std::vector<std::uint8_t> skin_mask;
};

// Per cell and window: POS over the window as one segment, band-pass, STFT
// rate, |rate - reference| and harmonic SNR. Cells that yield no pulse are
// left undefined.
std::vector<ErrorFrame> score_grid(const SubregionGrid& grid, const PulseRateSeries& ref_rate,
                                   const WindowPlan& plan = kGridRatePlan);

struct PixelFrame {
  Map2D mae;
  Map2D snr;
  std::vector<std::uint8_t> mask;
};

// Bilinear upsampling (corner-aligned) of both maps to rows*factor by
// cols*factor; the mask is upsampled by nearest neighbour and pixels outside
// it become undefined.
PixelFrame upsample_frame(const ErrorFrame& frame, int factor = 20);

struct Keypoint {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  double visibility = 1.0;
};

struct PoseKeypoints {
  std::vector<Keypoint> points;
  double frame_time_s = 0.0;

  const Keypoint* find(const std::string& name) const;
};

inline constexpr double kVisibleThreshold = 0.5;

// Mean location of every keypoint over the poses where it is visible.
PoseKeypoints average_pose(const std::vector<PoseKeypoints>& poses);

// Normalized DLT over all keypoints visible in both poses; H maps src to dst
// and is scaled so H(2, 2) = 1.
Eigen::Matrix3d homography_from_poses(const PoseKeypoints& src, const PoseKeypoints& dst);

// DLT on raw correspondences (x, y) -> (x', y').
Eigen::Matrix3d homography_dlt(const std::vector<Eigen::Vector2d>& src,
                               const std::vector<Eigen::Vector2d>& dst);

Eigen::Matrix3d translation(double dx, double dy);

// Output pixel (x, y) samples the source bilinearly at H^-1 (x, y). Pixels
// mapping outside the source or onto undefined source pixels stay undefined.
Map2D warp_error_frame(const Map2D& map, const Eigen::Matrix3d& h, int out_width, int out_height);

struct Heatmap {
  Map2D mean_mae;
  Map2D mean_snr;
  Map2D count;
};

// Per-pixel means over defined values only; count records frames whose MAE
// was defined at the pixel.
Heatmap aggregate_heatmap(const std::vector<PixelFrame>& frames);

}  // namespace bodypulse
