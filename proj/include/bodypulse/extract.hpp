#pragma once

#include "bodypulse/io.hpp"
#include "bodypulse/rppg.hpp"
#include "bodypulse/spatial_grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bodypulse {

struct RoiMask {
  std::string label;
  io::Mask mask;
};

// Grid over the bounding box of one ROI's mask.
struct GridSpec {
  std::string roi;
  int cell_px = 20;
};

struct GridExtraction {
  GridGeometry geometry;
  std::vector<CellFrame> frames;
  std::vector<double> skin_fraction;
};

struct Extraction {
  std::vector<RGBTrace> traces;
  std::optional<GridExtraction> grid;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

BoundingBox mask_bbox(const io::Mask& m);

// Per frame: mean R, G, B over each mask's true pixels; with a grid spec,
// also the mean over every pixel of each cell of that ROI's bounding box.
Extraction extract_traces(io::FrameDumpReader& frames, const std::vector<RoiMask>& masks,
                          const std::optional<GridSpec>& grid = std::nullopt);

}  // namespace bodypulse
