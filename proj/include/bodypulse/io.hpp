#pragma once

#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/rppg.hpp"
#include "bodypulse/spatial_grid.hpp"
#include "bodypulse/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bodypulse::io {

namespace fs = std::filesystem;

// Shortest round-trip decimal form; "nan" for undefined values.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  // Index of a named column; throws DataFormat naming the available columns.
  std::size_t column(const std::string& name) const;
  const std::vector<double>& operator[](const std::string& name) const { return columns[column(name)]; }
};

// Numeric CSV with a header row. Empty fields and "nan" read as NaN.
CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

// Uniformly sampled columns keyed by time_s. The rate is taken from the time
// column; a declared rate must agree within 0.1%.
Waveform waveform_from_columns(const CsvTable& t, const std::string& column,
                               std::optional<double> declared_rate_hz, const std::string& what);

// time_s,value
Waveform read_waveform_csv(const fs::path& path, std::optional<double> rate_hz = std::nullopt);
void write_waveform_csv(const fs::path& path, const Waveform& w);

// time_s,red,ir; channel is "red" or "ir".
Waveform read_sensor_csv(const fs::path& path, const std::string& channel,
                         std::optional<double> rate_hz = std::nullopt);
void write_sensor_csv(const fs::path& path, const Waveform& red, const Waveform& ir);

// time_s,bpm,spo2 (spo2 ignored)
Waveform read_oximeter_csv(const fs::path& path, std::optional<double> rate_hz = std::nullopt);
void write_oximeter_csv(const fs::path& path, const Waveform& bpm, double spo2 = 98.0);

// time_s,bpm with "nan" for missing windows.
PulseRateSeries read_rate_csv(const fs::path& path, double window_length_s = 10.0);
void write_rate_csv(const fs::path& path, const PulseRateSeries& s);

// time_s,r,g,b
RGBTrace read_rgb_csv(const fs::path& path, const std::string& label,
                      std::optional<double> rate_hz = std::nullopt);
void write_rgb_csv(const fs::path& path, const RGBTrace& t);

// frame,row,col,r,g,b
std::vector<CellFrame> read_cell_means(const fs::path& path, const GridGeometry& geometry);
void write_cell_means(const fs::path& path, const std::vector<CellFrame>& frames,
                      const GridGeometry& geometry);

// row,col,skin_fraction
std::vector<double> read_skin_fraction(const fs::path& path, const GridGeometry& geometry);
void write_skin_fraction(const fs::path& path, const std::vector<double>& fraction,
                         const GridGeometry& geometry);

// One CSV row per grid row, no header.
void write_map_csv(const fs::path& path, const Map2D& m);
Map2D read_map_csv(const fs::path& path);

// Binary PGM (P5); any nonzero pixel is inside the mask.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y * width + x)] != 0; }
  std::size_t count() const;
};
Mask read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const Mask& m);
Mask rect_mask(int width, int height, int x, int y, int w, int h);

// Raw frame dump: 24-byte little-endian header
//   "BPFD" | u32 width | u32 height | u32 frame_count | f64 fps
// followed by frame_count frames, each three planes (R, G, B) of width*height bytes.
struct FrameDumpHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t frame_count = 0;
  double fps = 0.0;

  std::size_t frame_bytes() const noexcept { return 3ull * width * height; }
};

class FrameDumpReader {
 public:
  explicit FrameDumpReader(const fs::path& path);
  const FrameDumpHeader& header() const noexcept { return header_; }
  // Reads the next frame's planes; false at end of file.
  bool next(std::vector<std::uint8_t>& planes);

 private:
  fs::path path_;
  FrameDumpHeader header_;
  std::uint32_t read_ = 0;
  std::ifstream in_;
};

void write_frame_dump(const fs::path& path, const FrameDumpHeader& header,
                      const std::vector<std::vector<std::uint8_t>>& frames);

// 64-bit FNV-1a of the file contents as 16 hex digits.
std::string fnv1a_file(const fs::path& path);
std::string fnv1a(std::string_view bytes);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace bodypulse::io
