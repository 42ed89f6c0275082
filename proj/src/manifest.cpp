#include "bodypulse/manifest.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/io.hpp"

#include <json.hpp>

namespace bodypulse {

using nlohmann::ordered_json;

namespace {

template <typename T>
T required(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorKind::DataFormat, where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::DataFormat, where + ": '" + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return required<T>(j, key, where);
}

template <typename T>
T field_or(const ordered_json& j, const char* key, T fallback, const std::string& where) {
  return optional_field<T>(j, key, where).value_or(fallback);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

SessionManifest SessionManifest::load(const fs::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::DataFormat, path.string() + ": " + e.what());
  }
  const std::string where = path.string();
  SessionManifest m;
  m.base_dir = path.parent_path();
  m.session_id = required<std::string>(j, "session_id", where);
  m.duration_s = required<double>(j, "duration_s", where);

  const auto& v = j.contains("video") ? j.at("video") : ordered_json::object();
  m.video.fps = field_or<double>(v, "fps", 90.0, where + " video");
  m.video.width = field_or<int>(v, "width", 0, where + " video");
  m.video.height = field_or<int>(v, "height", 0, where + " video");
  m.video.frames = optional_field<std::string>(v, "frames", where + " video");

  for (const auto& s : j.value("sensors", ordered_json::array())) {
    m.sensors.push_back({required<std::string>(s, "site", where + " sensor"),
                         required<std::string>(s, "path", where + " sensor"),
                         field_or<std::string>(s, "channel", "ir", where + " sensor"),
                         field_or<double>(s, "fs_hz", 400.0, where + " sensor")});
  }
  if (j.contains("oximeter") && !j.at("oximeter").is_null()) {
    const auto& o = j.at("oximeter");
    m.oximeter = OximeterEntry{required<std::string>(o, "path", where + " oximeter"),
                               field_or<double>(o, "fs_hz", 60.0, where + " oximeter")};
  }
  for (const auto& r : j.value("rois", ordered_json::array())) {
    m.rois.push_back({required<std::string>(r, "label", where + " roi"),
                      optional_field<std::string>(r, "mask", where + " roi"),
                      optional_field<std::array<int, 4>>(r, "bbox", where + " roi"),
                      optional_field<std::string>(r, "trace", where + " roi")});
  }
  for (const auto& g : j.value("grids", ordered_json::array())) {
    m.grids.push_back({required<std::string>(g, "roi", where + " grid"),
                       field_or<int>(g, "cell_px", 20, where + " grid"),
                       required<std::array<int, 4>>(g, "bbox", where + " grid"),
                       required<std::string>(g, "cell_means", where + " grid"),
                       optional_field<std::string>(g, "skin_fraction", where + " grid")});
  }
  m.keypoints = optional_field<std::string>(j, "keypoints", where);
  for (const auto& p : j.value("portions", ordered_json::array())) {
    m.portions.push_back({required<std::string>(p, "name", where + " portion"),
                          required<double>(p, "start_s", where + " portion"),
                          required<double>(p, "end_s", where + " portion")});
  }
  return m;
}

std::string SessionManifest::to_json_text() const {
  ordered_json j;
  j["session_id"] = session_id;
  j["duration_s"] = duration_s;
  ordered_json v{{"fps", video.fps}, {"width", video.width}, {"height", video.height}};
  if (video.frames) v["frames"] = *video.frames;
  j["video"] = v;
  j["sensors"] = ordered_json::array();
  for (const auto& s : sensors) {
    j["sensors"].push_back({{"site", s.site}, {"path", s.path}, {"channel", s.channel}, {"fs_hz", s.fs_hz}});
  }
  if (oximeter) j["oximeter"] = {{"path", oximeter->path}, {"fs_hz", oximeter->fs_hz}};
  j["rois"] = ordered_json::array();
  for (const auto& r : rois) {
    ordered_json o{{"label", r.label}};
    if (r.mask) o["mask"] = *r.mask;
    if (r.bbox) o["bbox"] = *r.bbox;
    if (r.trace) o["trace"] = *r.trace;
    j["rois"].push_back(o);
  }
  j["grids"] = ordered_json::array();
  for (const auto& g : grids) {
    ordered_json o{{"roi", g.roi}, {"cell_px", g.cell_px}, {"bbox", g.bbox}, {"cell_means", g.cell_means}};
    if (g.skin_fraction) o["skin_fraction"] = *g.skin_fraction;
    j["grids"].push_back(o);
  }
  if (keypoints) j["keypoints"] = *keypoints;
  j["portions"] = ordered_json::array();
  for (const auto& p : portions) j["portions"].push_back({{"name", p.name}, {"start_s", p.start_s}, {"end_s", p.end_s}});
  return j.dump(2) + "\n";
}

void SessionManifest::save(const fs::path& path) const { io::write_text(path, to_json_text()); }

fs::path SessionManifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<std::string> SessionManifest::roi_labels() const {
  std::vector<std::string> out;
  for (const auto& r : rois) out.push_back(r.label);
  return out;
}

const RoiEntry& SessionManifest::roi(const std::string& label) const {
  for (const auto& r : rois) {
    if (r.label == label) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown ROI '" + label + "'; valid labels: " + join(roi_labels()));
}

const GridEntry& SessionManifest::grid(const std::string& roi_label) const {
  std::vector<std::string> have;
  for (const auto& g : grids) {
    if (g.roi == roi_label) return g;
    have.push_back(g.roi);
  }
  throw Error(ErrorKind::InvalidArgument,
              "no grid for ROI '" + roi_label + "'; grids exist for: " + (have.empty() ? "none" : join(have)));
}

void SessionManifest::validate() const {
  if (!(duration_s > 0.0)) throw Error(ErrorKind::InvalidSpec, "manifest: duration_s must be positive");
  if (!(video.fps > 0.0)) throw Error(ErrorKind::InvalidSpec, "manifest: video fps must be positive");
  std::vector<std::string> files;
  if (video.frames) files.push_back(*video.frames);
  for (const auto& s : sensors) files.push_back(s.path);
  if (oximeter) files.push_back(oximeter->path);
  for (const auto& r : rois) {
    if (r.mask) files.push_back(*r.mask);
    if (r.trace) files.push_back(*r.trace);
  }
  for (const auto& g : grids) {
    files.push_back(g.cell_means);
    if (g.skin_fraction) files.push_back(*g.skin_fraction);
  }
  if (keypoints) files.push_back(*keypoints);
  for (const auto& f : files) {
    if (!fs::exists(resolve(f))) throw Error(ErrorKind::Io, "manifest references missing file " + resolve(f).string());
  }
  for (const auto& p : portions) {
    if (!(p.start_s >= 0.0 && p.end_s > p.start_s && p.end_s <= duration_s + 1e-9)) {
      throw Error(ErrorKind::InvalidSpec, "portion '" + p.name + "' does not lie within the session");
    }
  }
}

std::vector<PoseKeypoints> read_keypoints(const fs::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::DataFormat, path.string() + ": " + e.what());
  }
  const std::string where = path.string();
  std::vector<PoseKeypoints> out;
  for (const auto& p : j.value("poses", ordered_json::array())) {
    PoseKeypoints pose;
    pose.frame_time_s = required<double>(p, "frame_time_s", where);
    for (const auto& k : p.value("points", ordered_json::array())) {
      pose.points.push_back({required<std::string>(k, "name", where), required<double>(k, "x", where),
                             required<double>(k, "y", where), field_or<double>(k, "visibility", 1.0, where)});
    }
    out.push_back(std::move(pose));
  }
  return out;
}

void write_keypoints(const fs::path& path, const std::vector<PoseKeypoints>& poses) {
  ordered_json j;
  j["poses"] = ordered_json::array();
  for (const auto& p : poses) {
    ordered_json pts = ordered_json::array();
    for (const auto& k : p.points) {
      pts.push_back({{"name", k.name}, {"x", k.x}, {"y", k.y}, {"visibility", k.visibility}});
    }
    j["poses"].push_back({{"frame_time_s", p.frame_time_s}, {"points", pts}});
  }
  io::write_text(path, j.dump(1) + "\n");
}

}  // namespace bodypulse
