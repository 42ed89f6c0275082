#pragma once

#include "bodypulse/spatial_grid.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bodypulse {

namespace fs = std::filesystem;

struct VideoInfo {
  double fps = 90.0;
  int width = 0;
  int height = 0;
  std::optional<std::string> frames;  // raw frame dump
};

struct SensorEntry {
  std::string site;
  std::string path;
  std::string channel = "ir";
  double fs_hz = 400.0;
};

struct OximeterEntry {
  std::string path;
  double fs_hz = 60.0;
};

struct RoiEntry {
  std::string label;
  std::optional<std::string> mask;             // PGM raster
  std::optional<std::array<int, 4>> bbox;      // x, y, w, h
  std::optional<std::string> trace;            // precomputed time_s,r,g,b
};

struct GridEntry {
  std::string roi;
  int cell_px = 20;
  std::array<int, 4> bbox{};
  std::string cell_means;
  std::optional<std::string> skin_fraction;
};

struct Portion {
  std::string name;
  double start_s = 0.0;
  double end_s = 0.0;
};

// Paths are stored as written and resolved against the manifest's directory.
struct SessionManifest {
  std::string session_id;
  double duration_s = 0.0;
  VideoInfo video;
  std::vector<SensorEntry> sensors;
  std::optional<OximeterEntry> oximeter;
  std::vector<RoiEntry> rois;
  std::vector<GridEntry> grids;
  std::optional<std::string> keypoints;
  std::vector<Portion> portions;
  fs::path base_dir;

  static SessionManifest load(const fs::path& path);
  void save(const fs::path& path) const;
  std::string to_json_text() const;

  fs::path resolve(const std::string& relative) const;
  // Throws InvalidArgument listing the valid labels.
  const RoiEntry& roi(const std::string& label) const;
  const GridEntry& grid(const std::string& roi_label) const;
  std::vector<std::string> roi_labels() const;
  // Referenced files exist; portions lie within the session.
  void validate() const;
};

std::vector<PoseKeypoints> read_keypoints(const fs::path& path);
void write_keypoints(const fs::path& path, const std::vector<PoseKeypoints>& poses);

}  // namespace bodypulse
