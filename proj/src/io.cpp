#include "bodypulse/io.hpp"

#include "bodypulse/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

namespace bodypulse::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void format_error(const fs::path& path, const std::string& what) {
  throw Error(ErrorKind::DataFormat, path.string() + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty() || s == "nan" || s == "NaN" || s == "NAN") {
    v = kNaN;
    return true;
  }
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void check_cell(const fs::path& path, const GridGeometry& g, double row, double col) {
  if (!(row >= 0 && col >= 0 && row < g.rows && col < g.cols) || row != std::floor(row) ||
      col != std::floor(col)) {
    std::ostringstream msg;
    msg << "cell (" << row << ", " << col << ") outside the " << g.rows << "x" << g.cols << " grid";
    format_error(path, msg.str());
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  std::string have;
  for (const auto& h : header) have += (have.empty() ? "" : ", ") + h;
  throw Error(ErrorKind::DataFormat, "missing column '" + name + "' (have: " + have + ")");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) format_error(path, "empty file");
  for (auto h : split(line)) t.header.emplace_back(h);
  t.columns.resize(t.header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != t.header.size()) {
      format_error(path, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(t.header.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(fields[i], v)) {
        format_error(path, "line " + std::to_string(line_no) + ": not a number '" + std::string(fields[i]) + "'");
      }
      t.columns[i].push_back(v);
    }
  }
  return t;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) {
    throw Error(ErrorKind::InvalidArgument, "csv: header and column counts differ");
  }
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw Error(ErrorKind::InvalidArgument, "csv: ragged columns");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) text += ',';
      text += format_double(columns[i][r]);
    }
    text += '\n';
  }
  write_text(path, text);
}

Waveform waveform_from_columns(const CsvTable& t, const std::string& column,
                               std::optional<double> declared_rate_hz, const std::string& what) {
  const auto& time = t["time_s"];
  const auto& v = t[column];
  if (time.size() < 2) throw Error(ErrorKind::DataFormat, what + ": need at least two samples");
  const double span = time.back() - time.front();
  if (!(span > 0.0)) throw Error(ErrorKind::DataFormat, what + ": time column is not increasing");
  const double rate = static_cast<double>(time.size() - 1) / span;
  if (declared_rate_hz) {
    if (std::abs(rate - *declared_rate_hz) > 1e-3 * *declared_rate_hz) {
      std::ostringstream msg;
      msg << what << ": declared rate " << *declared_rate_hz << " Hz but the file samples at " << rate
          << " Hz";
      throw Error(ErrorKind::DataFormat, msg.str());
    }
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::DataFormat, what + ": non-finite sample in '" + column + "'");
  }
  return Waveform(v, declared_rate_hz.value_or(rate), time.front());
}

Waveform read_waveform_csv(const fs::path& path, std::optional<double> rate_hz) {
  return waveform_from_columns(read_csv(path), "value", rate_hz, path.string());
}

void write_waveform_csv(const fs::path& path, const Waveform& w) {
  std::vector<double> t(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) t[i] = w.time_at(i);
  write_csv(path, {"time_s", "value"}, {t, w.values()});
}

Waveform read_sensor_csv(const fs::path& path, const std::string& channel, std::optional<double> rate_hz) {
  if (channel != "red" && channel != "ir") {
    throw Error(ErrorKind::InvalidArgument, "sensor channel must be 'red' or 'ir', got '" + channel + "'");
  }
  return waveform_from_columns(read_csv(path), channel, rate_hz, path.string());
}

void write_sensor_csv(const fs::path& path, const Waveform& red, const Waveform& ir) {
  std::vector<double> t(ir.size());
  for (std::size_t i = 0; i < ir.size(); ++i) t[i] = ir.time_at(i);
  write_csv(path, {"time_s", "red", "ir"}, {t, red.values(), ir.values()});
}

Waveform read_oximeter_csv(const fs::path& path, std::optional<double> rate_hz) {
  return waveform_from_columns(read_csv(path), "bpm", rate_hz, path.string());
}

void write_oximeter_csv(const fs::path& path, const Waveform& bpm, double spo2) {
  std::vector<double> t(bpm.size());
  for (std::size_t i = 0; i < bpm.size(); ++i) t[i] = bpm.time_at(i);
  write_csv(path, {"time_s", "bpm", "spo2"}, {t, bpm.values(), std::vector<double>(bpm.size(), spo2)});
}

PulseRateSeries read_rate_csv(const fs::path& path, double window_length_s) {
  const CsvTable t = read_csv(path);
  const auto& time = t["time_s"];
  const auto& bpm = t["bpm"];
  PulseRateSeries s;
  s.window_length_s = window_length_s;
  for (std::size_t i = 0; i < time.size(); ++i) {
    RateEntry e{time[i], {}};
    if (!std::isnan(bpm[i])) e.bpm = bpm[i];
    s.entries.push_back(e);
  }
  if (time.size() >= 2) s.stride_s = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
  return s;
}

void write_rate_csv(const fs::path& path, const PulseRateSeries& s) {
  std::vector<double> t, b;
  for (const auto& e : s.entries) {
    t.push_back(e.time_s);
    b.push_back(e.bpm.value_or(kNaN));
  }
  write_csv(path, {"time_s", "bpm"}, {t, b});
}

RGBTrace read_rgb_csv(const fs::path& path, const std::string& label, std::optional<double> rate_hz) {
  const CsvTable t = read_csv(path);
  const std::string what = path.string();
  return RGBTrace(waveform_from_columns(t, "r", rate_hz, what), waveform_from_columns(t, "g", rate_hz, what),
                  waveform_from_columns(t, "b", rate_hz, what), label);
}

void write_rgb_csv(const fs::path& path, const RGBTrace& tr) {
  std::vector<double> t(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) t[i] = tr.r.time_at(i);
  write_csv(path, {"time_s", "r", "g", "b"}, {t, tr.r.values(), tr.g.values(), tr.b.values()});
}

std::vector<CellFrame> read_cell_means(const fs::path& path, const GridGeometry& geometry) {
  const CsvTable t = read_csv(path);
  const auto& frame = t["frame"];
  const auto& row = t["row"];
  const auto& col = t["col"];
  const auto& r = t["r"];
  const auto& g = t["g"];
  const auto& b = t["b"];
  const auto cells = static_cast<std::size_t>(geometry.cell_count());
  std::map<long, std::vector<std::array<double, 3>>> by_frame;
  std::map<long, std::size_t> filled;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    check_cell(path, geometry, row[i], col[i]);
    const auto f = static_cast<long>(frame[i]);
    auto& slot = by_frame[f];
    if (slot.empty()) slot.assign(cells, {kNaN, kNaN, kNaN});
    auto& c = slot[static_cast<std::size_t>(row[i]) * static_cast<std::size_t>(geometry.cols) +
                   static_cast<std::size_t>(col[i])];
    if (!std::isnan(c[0])) format_error(path, "duplicate cell in frame " + std::to_string(f));
    c = {r[i], g[i], b[i]};
    ++filled[f];
  }
  std::vector<CellFrame> out;
  for (auto& [f, slot] : by_frame) {
    if (filled[f] != cells) {
      format_error(path, "frame " + std::to_string(f) + " supplies " + std::to_string(filled[f]) + " of " +
                             std::to_string(cells) + " cells");
    }
    out.push_back({f, std::move(slot)});
  }
  return out;
}

void write_cell_means(const fs::path& path, const std::vector<CellFrame>& frames, const GridGeometry& geometry) {
  std::vector<std::vector<double>> cols(6);
  for (const auto& f : frames) {
    for (int c = 0; c < geometry.cell_count(); ++c) {
      const auto& px = f.cells[static_cast<std::size_t>(c)];
      cols[0].push_back(static_cast<double>(f.frame_index));
      cols[1].push_back(c / geometry.cols);
      cols[2].push_back(c % geometry.cols);
      for (std::size_t k = 0; k < 3; ++k) cols[3 + k].push_back(px[k]);
    }
  }
  write_csv(path, {"frame", "row", "col", "r", "g", "b"}, cols);
}

std::vector<double> read_skin_fraction(const fs::path& path, const GridGeometry& geometry) {
  const CsvTable t = read_csv(path);
  std::vector<double> out(static_cast<std::size_t>(geometry.cell_count()), kNaN);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    check_cell(path, geometry, t["row"][i], t["col"][i]);
    out[static_cast<std::size_t>(t["row"][i] * geometry.cols + t["col"][i])] = t["skin_fraction"][i];
  }
  for (double v : out) {
    if (std::isnan(v)) format_error(path, "skin fraction missing for some cells");
  }
  return out;
}

void write_skin_fraction(const fs::path& path, const std::vector<double>& fraction, const GridGeometry& geometry) {
  std::vector<std::vector<double>> cols(3);
  for (int c = 0; c < geometry.cell_count(); ++c) {
    cols[0].push_back(c / geometry.cols);
    cols[1].push_back(c % geometry.cols);
    cols[2].push_back(fraction[static_cast<std::size_t>(c)]);
  }
  write_csv(path, {"row", "col", "skin_fraction"}, cols);
}

void write_map_csv(const fs::path& path, const Map2D& m) {
  std::string text;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (c) text += ',';
      text += format_double(m.at(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

Map2D read_map_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (auto f : split(line)) {
      double v = 0.0;
      if (!parse_double(f, v)) format_error(path, "not a number '" + std::string(f) + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) format_error(path, "ragged grid");
    rows.push_back(std::move(row));
  }
  Map2D m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

Mask read_pgm(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") format_error(path, "not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    format_error(path, "malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) format_error(path, "unsupported PGM geometry or depth");
  ++pos;  // single whitespace byte before the raster
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < pos + n) format_error(path, "truncated PGM raster");
  Mask m{w, h, std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) m.data[i] = bytes[pos + i] != 0 ? 1 : 0;
  return m;
}

void write_pgm(const fs::path& path, const Mask& m) {
  std::string text = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  for (auto v : m.data) text += static_cast<char>(v ? 255 : 0);
  write_text(path, text);
}

Mask rect_mask(int width, int height, int x, int y, int w, int h) {
  Mask m{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width * height), 0)};
  for (int r = std::max(y, 0); r < std::min(y + h, height); ++r) {
    for (int c = std::max(x, 0); c < std::min(x + w, width); ++c) m.data[static_cast<std::size_t>(r * width + c)] = 1;
  }
  return m;
}

FrameDumpReader::FrameDumpReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::array<unsigned char, 24> h{};
  in_.read(reinterpret_cast<char*>(h.data()), h.size());
  if (in_.gcount() != 24 || std::memcmp(h.data(), "BPFD", 4) != 0) format_error(path, "not a frame dump");
  header_.width = get_u32(h.data() + 4);
  header_.height = get_u32(h.data() + 8);
  header_.frame_count = get_u32(h.data() + 12);
  std::memcpy(&header_.fps, h.data() + 16, 8);
  if (header_.width == 0 || header_.height == 0 || !(header_.fps > 0.0)) {
    format_error(path, "invalid frame dump header");
  }
  const auto expect = 24 + static_cast<std::uintmax_t>(header_.frame_count) * header_.frame_bytes();
  if (fs::file_size(path) != expect) {
    format_error(path, "size does not match " + std::to_string(header_.frame_count) + " frames");
  }
}

bool FrameDumpReader::next(std::vector<std::uint8_t>& planes) {
  if (read_ >= header_.frame_count) return false;
  planes.resize(header_.frame_bytes());
  in_.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
  if (static_cast<std::size_t>(in_.gcount()) != planes.size()) format_error(path_, "truncated frame");
  ++read_;
  return true;
}

void write_frame_dump(const fs::path& path, const FrameDumpHeader& header,
                      const std::vector<std::vector<std::uint8_t>>& frames) {
  if (frames.size() != header.frame_count) {
    throw Error(ErrorKind::InvalidArgument, "frame dump: frame count does not match the header");
  }
  auto out = open_out(path, true);
  out.write("BPFD", 4);
  put_u32(out, header.width);
  put_u32(out, header.height);
  put_u32(out, header.frame_count);
  std::array<char, 8> fps{};
  std::memcpy(fps.data(), &header.fps, 8);
  out.write(fps.data(), 8);
  for (const auto& f : frames) {
    if (f.size() != header.frame_bytes()) throw Error(ErrorKind::InvalidArgument, "frame dump: wrong frame size");
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size()));
  }
}

std::string fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

std::string fnv1a_file(const fs::path& path) { return fnv1a(read_text(path)); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace bodypulse::io
