#include "bodypulse/extract.hpp"

#include "bodypulse/error.hpp"

#include <algorithm>
#include <array>

namespace bodypulse {

BoundingBox mask_bbox(const io::Mask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

Extraction extract_traces(io::FrameDumpReader& frames, const std::vector<RoiMask>& masks,
                          const std::optional<GridSpec>& grid) {
  const auto& h = frames.header();
  const int width = static_cast<int>(h.width);
  const int height = static_cast<int>(h.height);
  if (masks.empty()) throw Error(ErrorKind::InvalidArgument, "extract: no ROI masks");

  std::vector<std::vector<std::size_t>> pixels(masks.size());
  for (std::size_t m = 0; m < masks.size(); ++m) {
    const auto& mask = masks[m].mask;
    if (mask.width != width || mask.height != height) {
      throw Error(ErrorKind::InvalidArgument,
                  "extract: mask '" + masks[m].label + "' is " + std::to_string(mask.width) + "x" +
                      std::to_string(mask.height) + " but frames are " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
      if (mask.data[i]) pixels[m].push_back(i);
    }
    if (pixels[m].empty()) throw Error(ErrorKind::InvalidArgument, "extract: mask '" + masks[m].label + "' is empty");
  }

  const io::Mask* grid_mask = nullptr;
  GridExtraction gx;
  if (grid) {
    for (const auto& m : masks) {
      if (m.label == grid->roi) grid_mask = &m.mask;
    }
    if (grid_mask == nullptr) throw Error(ErrorKind::InvalidArgument, "extract: grid ROI '" + grid->roi + "' has no mask");
    const BoundingBox bb = mask_bbox(*grid_mask);
    gx.geometry = GridGeometry::from_bbox(bb.x, bb.y, bb.width, bb.height, grid->cell_px);
    if (gx.geometry.cell_count() == 0) {
      throw Error(ErrorKind::InvalidArgument, "extract: ROI '" + grid->roi + "' is smaller than one grid cell");
    }
    const int cell = gx.geometry.cell_px;
    for (int c = 0; c < gx.geometry.cell_count(); ++c) {
      const int x0 = gx.geometry.origin_x + (c % gx.geometry.cols) * cell;
      const int y0 = gx.geometry.origin_y + (c / gx.geometry.cols) * cell;
      std::size_t skin = 0;
      for (int y = y0; y < y0 + cell; ++y) {
        for (int x = x0; x < x0 + cell; ++x) skin += grid_mask->at(x, y) ? 1 : 0;
      }
      gx.skin_fraction.push_back(static_cast<double>(skin) / (cell * cell));
    }
  }

  const std::size_t plane = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::array<std::vector<double>, 3>> channels(masks.size());
  std::vector<std::uint8_t> buf;
  long index = 0;
  while (frames.next(buf)) {
    for (std::size_t m = 0; m < masks.size(); ++m) {
      std::array<double, 3> sum{};
      for (std::size_t p : pixels[m]) {
        for (std::size_t k = 0; k < 3; ++k) sum[k] += buf[k * plane + p];
      }
      for (std::size_t k = 0; k < 3; ++k) channels[m][k].push_back(sum[k] / static_cast<double>(pixels[m].size()));
    }
    if (grid) {
      CellFrame cf{index, {}};
      const int cell = gx.geometry.cell_px;
      for (int c = 0; c < gx.geometry.cell_count(); ++c) {
        const int x0 = gx.geometry.origin_x + (c % gx.geometry.cols) * cell;
        const int y0 = gx.geometry.origin_y + (c / gx.geometry.cols) * cell;
        std::array<double, 3> sum{};
        for (int y = y0; y < y0 + cell; ++y) {
          for (int x = x0; x < x0 + cell; ++x) {
            const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
            for (std::size_t k = 0; k < 3; ++k) sum[k] += buf[k * plane + p];
          }
        }
        for (auto& s : sum) s /= static_cast<double>(cell * cell);
        cf.cells.push_back(sum);
      }
      gx.frames.push_back(std::move(cf));
    }
    ++index;
  }
  if (index < 2) throw Error(ErrorKind::DataFormat, "extract: frame dump holds fewer than two frames");

  Extraction out;
  for (std::size_t m = 0; m < masks.size(); ++m) {
    out.traces.emplace_back(Waveform(std::move(channels[m][0]), h.fps), Waveform(std::move(channels[m][1]), h.fps),
                            Waveform(std::move(channels[m][2]), h.fps), masks[m].label);
  }
  if (grid) out.grid = std::move(gx);
  return out;
}

}  // namespace bodypulse
