#include "bodypulse/pipeline.hpp"

#include "bodypulse/error.hpp"
#include "bodypulse/extract.hpp"
#include "bodypulse/gt_fusion.hpp"
#include "bodypulse/io.hpp"
#include "bodypulse/manifest.hpp"
#include "bodypulse/metrics.hpp"
#include "bodypulse/pulse_rate.hpp"
#include "bodypulse/rppg.hpp"
#include "bodypulse/spatial_grid.hpp"
#include "bodypulse/synth_session.hpp"
#include "bodypulse/transit_time.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

namespace bodypulse {

using nlohmann::ordered_json;

namespace {

// Files are written under a staging directory and moved into place on commit;
// an uncommitted stage is deleted.
class Stage {
 public:
  explicit Stage(fs::path out_dir) : out_(std::move(out_dir)), staging_(out_ / ".bodypulse-staging") {
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;
  ~Stage() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  fs::path file(const std::string& rel) {
    files_.push_back(rel);
    return staging_ / rel;
  }
  const fs::path& dir() const noexcept { return staging_; }

  std::vector<std::string> commit() {
    for (const auto& rel : files_) {
      const fs::path dst = out_ / rel;
      if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
      fs::rename(staging_ / rel, dst);
    }
    std::sort(files_.begin(), files_.end());
    return files_;
  }

 private:
  fs::path out_;
  fs::path staging_;
  std::vector<std::string> files_;
};

// Records every input file read, for the config echo.
class Inputs {
 public:
  fs::path use(const fs::path& p) {
    digests_[p.generic_string()] = io::fnv1a_file(p);
    return p;
  }
  ordered_json json() const {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : digests_) j[k] = "fnv1a64:" + v;
    return j;
  }

 private:
  std::map<std::string, std::string> digests_;
};

struct Context {
  const RunConfig& cfg;
  Stage stage;
  Inputs inputs;
  ordered_json params = ordered_json::object();
};

std::string fmt_index(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

void write_json(const fs::path& path, const ordered_json& j) { io::write_text(path, j.dump(2) + "\n"); }

ordered_json optional_number(std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json report_json(const ScoreReport& r) {
  return {{"mae_bpm", r.mae_bpm},
          {"pearson_r", optional_number(r.pearson_r)},
          {"n_windows", r.n_windows},
          {"n_unmatched", r.n_unmatched},
          {"snr_db", optional_number(r.snr_db)}};
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ordered_json matrix_json(const Eigen::MatrixXi& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ordered_json matrix3_json(const Eigen::Matrix3d& h) { return matrix_json(Eigen::MatrixXd(h)); }

RateBand rate_band(const RunConfig& cfg) {
  const auto b = cfg.band_bpm.value_or(std::pair{40.0, 180.0});
  return {b.first, b.second};
}

BandpassSpec rppg_band(const RunConfig& cfg) {
  const RateBand b = rate_band(cfg);
  return {kRppgBand.order, b.low_bpm, b.high_bpm};
}

WindowPlan rate_plan(const RunConfig& cfg) {
  WindowPlan p{cfg.window_s.value_or(kGlobalRatePlan.length_s), cfg.stride_s.value_or(kGlobalRatePlan.stride_s)};
  p.validate();
  return p;
}

ordered_json plan_json(const WindowPlan& p) { return {{"length_s", p.length_s}, {"stride_s", p.stride_s}}; }
ordered_json band_json(const RateBand& b) { return {{"low_bpm", b.low_bpm}, {"high_bpm", b.high_bpm}}; }

SessionManifest load_manifest(Context& ctx) {
  if (ctx.cfg.manifest.empty()) {
    throw Error(ErrorKind::InvalidArgument, ctx.cfg.command + ": --manifest is required");
  }
  const auto m = SessionManifest::load(ctx.inputs.use(ctx.cfg.manifest));
  m.validate();
  ctx.params["manifest"] = ctx.cfg.manifest;
  return m;
}

SensorBank load_sensors(const SessionManifest& m, Inputs& in) {
  if (m.sensors.empty()) throw Error(ErrorKind::InvalidArgument, "manifest lists no contact sensors");
  if (!m.oximeter) throw Error(ErrorKind::InvalidArgument, "manifest lists no oximeter");
  SensorBank bank{{}, io::read_oximeter_csv(in.use(m.resolve(m.oximeter->path)), m.oximeter->fs_hz)};
  for (const auto& s : m.sensors) {
    bank.channels.push_back({s.site, io::read_sensor_csv(in.use(m.resolve(s.path)), s.channel, s.fs_hz)});
  }
  return bank;
}

struct Reference {
  FusionResult fusion;
  PulseRateSeries rate;
};

Reference fused_reference(const SessionManifest& m, Inputs& in, const WindowPlan& rate_plan_, RateBand band,
                          const FusionConfig& fc = {}) {
  const SensorBank bank = load_sensors(m, in);
  Reference r{fuse_ground_truth(bank, fc), {}};
  r.rate = reference_pulse_rate(r.fusion.fused, rate_plan_, band);
  return r;
}

RGBTrace load_roi_trace(const SessionManifest& m, const std::string& label, Inputs& in) {
  const RoiEntry& roi = m.roi(label);
  if (roi.trace) return io::read_rgb_csv(in.use(m.resolve(*roi.trace)), label, m.video.fps);
  if (m.video.frames && roi.mask) {
    io::FrameDumpReader reader(in.use(m.resolve(*m.video.frames)));
    auto ex = extract_traces(reader, {{label, io::read_pgm(in.use(m.resolve(*roi.mask)))}});
    return std::move(ex.traces.front());
  }
  throw Error(ErrorKind::InvalidArgument, "ROI '" + label + "' has neither a trace nor a mask with a frame dump");
}

MethodConfig method_config(const RunConfig& cfg, RppgMethod method) {
  MethodConfig mc;
  mc.method = method;
  mc.post_filter = rppg_band(cfg);
  mc.validate();
  return mc;
}

ScoreReport score_with_snr(const Waveform& pulse, const PulseRateSeries& pred, const PulseRateSeries& ref) {
  ScoreReport r = score(pred, ref);
  r.snr_db = snr_harmonics(pulse, ref);
  return r;
}

// ---------------------------------------------------------------- commands

void cmd_synth(Context& ctx) {
  SynthSessionOptions o;
  o.duration_s = ctx.cfg.duration_s;
  o.seed = ctx.cfg.seed;
  o.rate_from_bpm = ctx.cfg.rate_from_bpm;
  o.rate_to_bpm = ctx.cfg.rate_to_bpm;
  o.write_frames = ctx.cfg.frames;
  const SessionManifest m = write_synthetic_session(ctx.stage.dir(), o);
  for (const auto& entry : fs::recursive_directory_iterator(ctx.stage.dir())) {
    if (entry.is_regular_file()) ctx.stage.file(fs::relative(entry.path(), ctx.stage.dir()).generic_string());
  }
  ctx.params["seed"] = o.seed;
  ctx.params["duration_s"] = o.duration_s;
  ctx.params["rate_from_bpm"] = o.rate_from_bpm;
  ctx.params["rate_to_bpm"] = o.rate_to_bpm;
  ctx.params["fps"] = o.fps;
  ctx.params["sensor_fs_hz"] = o.sensor_fs_hz;
  ctx.params["oximeter_fs_hz"] = o.oximeter_fs_hz;
  ctx.params["frames"] = o.write_frames;
}

void cmd_fuse_gt(Context& ctx) {
  const auto m = load_manifest(ctx);
  FusionConfig fc;
  fc.plan = {ctx.cfg.window_s.value_or(fc.plan.length_s), ctx.cfg.stride_s.value_or(fc.plan.stride_s)};
  fc.plan.validate();
  const RateBand band = rate_band(ctx.cfg);
  const auto ref = fused_reference(m, ctx.inputs, kGlobalRatePlan, band, fc);
  io::write_waveform_csv(ctx.stage.file("fused_pulse.csv"), ref.fusion.fused);
  io::write_rate_csv(ctx.stage.file("reference_rate.csv"), ref.rate);
  const auto& d = ref.fusion.diagnostics;
  write_json(ctx.stage.file("fusion.json"),
             {{"session_id", m.session_id},
              {"sites", [&] {
                 ordered_json s = ordered_json::array();
                 for (const auto& e : m.sensors) s.push_back(e.site);
                 return s;
               }()},
              {"windows", d.windows},
              {"skipped_channel_windows", d.skipped_channel_windows},
              {"empty_window_times_s", d.empty_window_times_s},
              {"reference_missing_windows", ref.rate.missing_count()}});
  ctx.params["fusion_plan"] = plan_json(fc.plan);
  ctx.params["fusion_filter_order"] = fc.filter_order;
  ctx.params["delta_y_bpm"] = 30.0;
  ctx.params["rate_plan"] = plan_json(kGlobalRatePlan);
  ctx.params["band_bpm"] = band_json(band);
}

void cmd_estimate(Context& ctx) {
  const auto m = load_manifest(ctx);
  if (ctx.cfg.roi.empty()) {
    throw Error(ErrorKind::InvalidArgument, "estimate: --roi is required; valid labels: " + [&] {
      std::string s;
      for (const auto& l : m.roi_labels()) s += (s.empty() ? "" : ", ") + l;
      return s;
    }());
  }
  const RppgMethod method = parse_method(ctx.cfg.method);
  const MethodConfig mc = method_config(ctx.cfg, method);
  const WindowPlan plan = rate_plan(ctx.cfg);
  const RateBand band = rate_band(ctx.cfg);
  const RGBTrace trace = load_roi_trace(m, ctx.cfg.roi, ctx.inputs);

  const Waveform pulse = extract_pulse(trace, mc);
  const PulseRateSeries rate = stft_pulse_rate(pulse, plan, band);
  const auto ref = fused_reference(m, ctx.inputs, plan, band);
  const ScoreReport report = score_with_snr(pulse, rate, ref.rate);

  const std::string tag = ctx.cfg.roi + "_" + to_string(method);
  io::write_waveform_csv(ctx.stage.file("pulse_" + tag + ".csv"), pulse);
  io::write_rate_csv(ctx.stage.file("rate_" + tag + ".csv"), rate);
  write_json(ctx.stage.file("score_" + tag + ".json"),
             {{"session_id", m.session_id}, {"roi", ctx.cfg.roi}, {"method", to_string(method)},
              {"reference", "fused contact PPG"}, {"report", report_json(report)}});
  ctx.params["roi"] = ctx.cfg.roi;
  ctx.params["method"] = to_string(method);
  ctx.params["internal_window_s"] = mc.internal_window_s;
  ctx.params["filter_order"] = mc.post_filter.order;
  ctx.params["band_bpm"] = band_json(band);
  ctx.params["rate_plan"] = plan_json(plan);
}

void cmd_pulse_rate(Context& ctx) {
  if (ctx.cfg.input.empty()) throw Error(ErrorKind::InvalidArgument, "pulse-rate: --input is required");
  const WindowPlan plan = rate_plan(ctx.cfg);
  const RateBand band = rate_band(ctx.cfg);
  const Waveform w = io::read_waveform_csv(ctx.inputs.use(ctx.cfg.input));
  io::write_rate_csv(ctx.stage.file("rate.csv"), stft_pulse_rate(w, plan, band));
  ctx.params["input"] = ctx.cfg.input;
  ctx.params["rate_plan"] = plan_json(plan);
  ctx.params["band_bpm"] = band_json(band);
}

void cmd_score(Context& ctx) {
  const WindowPlan plan = rate_plan(ctx.cfg);
  const RateBand band = rate_band(ctx.cfg);
  ctx.params["rate_plan"] = plan_json(plan);
  ctx.params["band_bpm"] = band_json(band);

  if (!ctx.cfg.pred.empty() || !ctx.cfg.ref.empty()) {
    if (ctx.cfg.pred.empty() || ctx.cfg.ref.empty()) {
      throw Error(ErrorKind::InvalidArgument, "score: --pred and --ref must be given together");
    }
    const auto pred = io::read_rate_csv(ctx.inputs.use(ctx.cfg.pred), plan.length_s);
    const auto ref = io::read_rate_csv(ctx.inputs.use(ctx.cfg.ref), plan.length_s);
    ScoreReport r = score(pred, ref);
    if (!ctx.cfg.input.empty()) r.snr_db = snr_harmonics(io::read_waveform_csv(ctx.inputs.use(ctx.cfg.input)), ref);
    write_json(ctx.stage.file("score.json"), {{"report", report_json(r)}});
    ctx.params["pred"] = ctx.cfg.pred;
    ctx.params["ref"] = ctx.cfg.ref;
    if (!ctx.cfg.input.empty()) ctx.params["input"] = ctx.cfg.input;
    return;
  }

  const auto m = load_manifest(ctx);
  const auto ref = fused_reference(m, ctx.inputs, plan, band);
  std::vector<std::string> labels = ctx.cfg.roi.empty() ? m.roi_labels() : std::vector{m.roi(ctx.cfg.roi).label};
  ordered_json results = ordered_json::array();
  ordered_json pooled = ordered_json::object();
  for (RppgMethod method : {RppgMethod::Chrom, RppgMethod::Pos}) {
    const MethodConfig mc = method_config(ctx.cfg, method);
    std::vector<LabelledPair> pairs;
    for (const auto& label : labels) {
      const Waveform pulse = extract_pulse(load_roi_trace(m, label, ctx.inputs), mc);
      const auto rate = stft_pulse_rate(pulse, plan, band);
      results.push_back({{"roi", label}, {"method", to_string(method)},
                         {"report", report_json(score_with_snr(pulse, rate, ref.rate))}});
      pairs.push_back({label, rate, ref.rate});
    }
    const SessionScores s = score_sessions(pairs);
    pooled[to_string(method)] = {{"pooled", report_json(s.pooled)},
                                 {"mean_roi_r", optional_number(s.mean_session_r)}};
  }
  write_json(ctx.stage.file("scores.json"),
             {{"session_id", m.session_id}, {"reference", "fused contact PPG"}, {"results", results},
              {"by_method", pooled}});
  io::write_rate_csv(ctx.stage.file("reference_rate.csv"), ref.rate);
  ctx.params["rois"] = labels;
}

struct LoadedGrid {
  SubregionGrid grid;
  std::string mask_provenance;
};

LoadedGrid load_grid(Context& ctx, const SessionManifest& m, const GridEntry& g) {
  const int cell = ctx.cfg.grid_cell_px.value_or(g.cell_px);
  if (cell != g.cell_px) {
    const RoiEntry& roi = m.roi(g.roi);
    if (!m.video.frames || !roi.mask) {
      throw Error(ErrorKind::InvalidArgument, "grid cell size " + std::to_string(cell) + " px differs from the stored " +
                                                  std::to_string(g.cell_px) + " px and no frame dump is available");
    }
    io::FrameDumpReader reader(ctx.inputs.use(m.resolve(*m.video.frames)));
    auto ex = extract_traces(reader, {{g.roi, io::read_pgm(ctx.inputs.use(m.resolve(*roi.mask)))}},
                             GridSpec{g.roi, cell});
    auto& gx = *ex.grid;
    return {grid_traces(gx.frames, gx.geometry, m.video.fps, 0.0, gx.skin_fraction), "extracted from mask " + *roi.mask};
  }
  const GridGeometry geo = GridGeometry::from_bbox(g.bbox[0], g.bbox[1], g.bbox[2], g.bbox[3], g.cell_px);
  const auto frames = io::read_cell_means(ctx.inputs.use(m.resolve(g.cell_means)), geo);
  std::vector<double> skin;
  std::string prov = "all cells treated as skin";
  if (g.skin_fraction) {
    skin = io::read_skin_fraction(ctx.inputs.use(m.resolve(*g.skin_fraction)), geo);
    prov = *g.skin_fraction;
  }
  return {grid_traces(frames, geo, m.video.fps, 0.0, std::move(skin)), prov};
}

std::vector<PoseKeypoints> poses_between(const std::vector<PoseKeypoints>& poses, double t0, double t1) {
  std::vector<PoseKeypoints> out;
  for (const auto& p : poses) {
    if (p.frame_time_s >= t0 && p.frame_time_s < t1) out.push_back(p);
  }
  return out;
}

void cmd_grid_map(Context& ctx) {
  const auto m = load_manifest(ctx);
  if (m.grids.empty()) throw Error(ErrorKind::InvalidArgument, "grid-map: manifest defines no grids");
  const double len = ctx.cfg.window_s.value_or(kGridRatePlan.length_s);
  const WindowPlan plan{len, ctx.cfg.stride_s.value_or(len)};
  plan.validate();
  const RateBand band = rate_band(ctx.cfg);
  const auto ref = fused_reference(m, ctx.inputs, {plan.length_s, 1.0}, band);

  std::vector<PoseKeypoints> poses;
  if (m.keypoints) poses = read_keypoints(ctx.inputs.use(m.resolve(*m.keypoints)));
  std::vector<Portion> portions = m.portions;
  if (portions.empty()) portions.push_back({"session", 0.0, m.duration_s});
  const int canvas_w = m.video.width > 0 ? m.video.width : 0;
  const int canvas_h = m.video.height > 0 ? m.video.height : 0;

  std::vector<const GridEntry*> grids;
  if (ctx.cfg.roi.empty()) {
    for (const auto& g : m.grids) grids.push_back(&g);
  } else {
    grids.push_back(&m.grid(ctx.cfg.roi));
  }

  ordered_json summary = ordered_json::array();
  for (const GridEntry* g : grids) {
    const LoadedGrid lg = load_grid(ctx, m, *g);
    const auto& geo = lg.grid.geometry;
    const double fps = m.video.fps;
    const std::size_t n = lg.grid.traces.front().size();
    for (const Portion& portion : portions) {
      const auto first = std::min(n, static_cast<std::size_t>(std::llround(portion.start_s * fps)));
      const auto last = std::min(n, static_cast<std::size_t>(std::llround(portion.end_s * fps)));
      SubregionGrid part{geo, {}, lg.grid.skin_fraction};
      for (const auto& t : lg.grid.traces) part.traces.push_back(t.slice(first, last - first));
      const auto frames = last - first >= 2 ? score_grid(part, ref.rate, plan) : std::vector<ErrorFrame>{};

      const std::string dir = "grid/" + g->roi + "/" + portion.name + "/";
      const auto portion_poses = poses_between(poses, portion.start_s, portion.end_s);
      std::optional<PoseKeypoints> target;
      if (!portion_poses.empty()) target = average_pose(portion_poses);

      ordered_json windows = ordered_json::array();
      std::vector<PixelFrame> aligned;
      const int out_w = canvas_w > 0 ? canvas_w : geo.origin_x + geo.cols * geo.cell_px;
      const int out_h = canvas_h > 0 ? canvas_h : geo.origin_y + geo.rows * geo.cell_px;
      for (const ErrorFrame& f : frames) {
        const std::string stem = dir + "window_" + fmt_index(static_cast<std::size_t>(f.window_index));
        io::write_map_csv(ctx.stage.file(stem + "_mae.csv"), f.mae_map);
        io::write_map_csv(ctx.stage.file(stem + "_snr.csv"), f.snr_map);
        Map2D mask(geo.rows, geo.cols);
        for (std::size_t i = 0; i < f.skin_mask.size(); ++i) mask.values[i] = f.skin_mask[i];
        io::write_map_csv(ctx.stage.file(stem + "_mask.csv"), mask);

        // Upsampled map pixel (x, y) sits at image pixel origin + (x, y).
        const PixelFrame px = upsample_frame(f, geo.cell_px);
        Eigen::Matrix3d h = translation(geo.origin_x, geo.origin_y);
        std::string alignment = "none (no keypoints)";
        const auto wp = poses_between(poses, f.window_start_s, f.window_start_s + plan.length_s);
        if (target && !wp.empty()) {
          try {
            h = homography_from_poses(average_pose(wp), *target) * h;
            alignment = "pose homography";
          } catch (const Error& e) {
            alignment = std::string("none (") + e.what() + ")";
          }
        }
        aligned.push_back({warp_error_frame(px.mae, h, out_w, out_h), warp_error_frame(px.snr, h, out_w, out_h), {}});
        windows.push_back({{"index", f.window_index},
                           {"start_s", f.window_start_s},
                           {"defined_cells", f.mae_map.defined_count()},
                           {"alignment", alignment},
                           {"homography", matrix3_json(h)}});
      }
      if (!aligned.empty()) {
        const Heatmap heat = aggregate_heatmap(aligned);
        io::write_map_csv(ctx.stage.file(dir + "heatmap_mae.csv"), heat.mean_mae);
        io::write_map_csv(ctx.stage.file(dir + "heatmap_snr.csv"), heat.mean_snr);
        io::write_map_csv(ctx.stage.file(dir + "heatmap_count.csv"), heat.count);
      }
      ordered_json meta{{"roi", g->roi},
                        {"portion", {{"name", portion.name}, {"start_s", portion.start_s}, {"end_s", portion.end_s}}},
                        {"geometry",
                         {{"origin_px", {geo.origin_x, geo.origin_y}},
                          {"cell_px", geo.cell_px},
                          {"cols", geo.cols},
                          {"rows", geo.rows}}},
                        {"mask_provenance", lg.mask_provenance},
                        {"skin_threshold", 0.5},
                        {"canvas", {{"width", out_w}, {"height", out_h}}},
                        {"windows", windows}};
      if (target) {
        ordered_json pts = ordered_json::array();
        for (const auto& k : target->points) pts.push_back({{"name", k.name}, {"x", k.x}, {"y", k.y}});
        meta["target_pose"] = pts;
      }
      write_json(ctx.stage.file(dir + "grid.json"), meta);
      summary.push_back({{"roi", g->roi}, {"portion", portion.name}, {"error_frames", frames.size()}});
    }
  }
  write_json(ctx.stage.file("grid_summary.json"), {{"session_id", m.session_id}, {"grids", summary}});
  ctx.params["grid_plan"] = plan_json(plan);
  ctx.params["band_bpm"] = band_json(band);
  ctx.params["upsample_factor"] = "cell_px";
  if (ctx.cfg.grid_cell_px) ctx.params["grid_cell_px"] = *ctx.cfg.grid_cell_px;
  if (!ctx.cfg.roi.empty()) ctx.params["roi"] = ctx.cfg.roi;
}

void cmd_ptt(Context& ctx) {
  const auto m = load_manifest(ctx);
  const SensorBank bank = load_sensors(m, ctx.inputs);
  const double fs = bank.channels.front().wave.sample_rate_hz();
  PttConfig pc = PttConfig::defaults_for(fs);
  pc.plan = {ctx.cfg.window_s.value_or(pc.plan.length_s), ctx.cfg.stride_s.value_or(pc.plan.stride_s)};
  pc.plan.validate();
  pc.max_lag_s = ctx.cfg.max_lag_s.value_or(pc.max_lag_s);
  const RateBand band = rate_band(ctx.cfg);
  const BandpassSpec filt{kRppgBand.order, band.low_bpm, band.high_bpm};

  std::vector<SiteWave> waves;
  for (const auto& c : bank.channels) waves.push_back({c.site, bandpass_zero_phase(c.wave, filt)});
  const PTTMatrix ptt = ptt_matrix(waves, pc);
  const double mean_rate = mean(bank.oximeter_bpm.samples());

  const auto n = static_cast<Eigen::Index>(ptt.sites.size());
  Eigen::MatrixXd phase(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) phase(i, j) = phase_angle_deg(ptt.mean_lag_s(i, j), mean_rate);
  }
  ordered_json pairs = ordered_json::array();
  std::vector<std::string> header{"time_s"};
  std::vector<std::vector<double>> cols(1, ptt.window_center_times_s);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = ptt.sites[static_cast<std::size_t>(i)];
      const auto& b = ptt.sites[static_cast<std::size_t>(j)];
      header.push_back(a + "->" + b);
      std::vector<double> lags;
      for (const auto& w : ptt.per_window) lags.push_back(w(i, j));
      cols.push_back(lags);
      ordered_json box = nullptr;
      if (ptt.accepted(i, j) >= 5) {
        const BoxStats s = lag_distribution_stats(ptt, {a, b});
        box = {{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"lower_whisker", s.lower_whisker},
               {"upper_whisker", s.upper_whisker}, {"outliers", s.outliers.size()}, {"count", s.count}};
      }
      pairs.push_back({{"from", a}, {"to", b}, {"mean_lag_s", ptt.mean_lag_s(i, j)}, {"box", box}});
    }
  }
  io::write_csv(ctx.stage.file("ptt_windows.csv"), header, cols);
  write_json(ctx.stage.file("ptt.json"),
             {{"session_id", m.session_id},
              {"sites", ptt.sites},
              {"windows", ptt.window_center_times_s.size()},
              {"mean_lag_s", matrix_json(ptt.mean_lag_s)},
              {"peak_corr", matrix_json(ptt.peak_corr)},
              {"accepted", matrix_json(ptt.accepted)},
              {"excluded_low_corr", matrix_json(ptt.excluded_low_corr)},
              {"failed", matrix_json(ptt.failed)},
              {"mean_rate_bpm", mean_rate},
              {"phase_angle_deg", matrix_json(phase)},
              {"pairs", pairs}});
  ctx.params["ptt_plan"] = plan_json(pc.plan);
  ctx.params["max_lag_s"] = pc.max_lag_s;
  ctx.params["min_corr"] = pc.min_corr;
  ctx.params["contact_filter"] = {{"order", filt.order}, {"low_bpm", filt.low_bpm}, {"high_bpm", filt.high_bpm}};
}

void cmd_extract(Context& ctx) {
  const auto m = load_manifest(ctx);
  if (!m.video.frames) throw Error(ErrorKind::InvalidArgument, "extract: manifest has no frame dump");
  std::vector<RoiMask> masks;
  for (const auto& r : m.rois) {
    if (r.mask) masks.push_back({r.label, io::read_pgm(ctx.inputs.use(m.resolve(*r.mask)))});
  }
  std::optional<GridSpec> spec;
  if (!ctx.cfg.roi.empty()) {
    m.roi(ctx.cfg.roi);
    spec = GridSpec{ctx.cfg.roi, ctx.cfg.grid_cell_px.value_or(20)};
  }
  io::FrameDumpReader reader(ctx.inputs.use(m.resolve(*m.video.frames)));
  const Extraction ex = extract_traces(reader, masks, spec);
  for (const auto& t : ex.traces) io::write_rgb_csv(ctx.stage.file("traces/" + t.roi_label + ".csv"), t);
  if (ex.grid) {
    io::write_cell_means(ctx.stage.file("grid/" + spec->roi + "_cells.csv"), ex.grid->frames, ex.grid->geometry);
    io::write_skin_fraction(ctx.stage.file("grid/" + spec->roi + "_skin.csv"), ex.grid->skin_fraction,
                            ex.grid->geometry);
    ctx.params["grid"] = {{"roi", spec->roi}, {"cell_px", spec->cell_px}};
  }
  ctx.params["rois"] = [&] {
    std::vector<std::string> l;
    for (const auto& mk : masks) l.push_back(mk.label);
    return l;
  }();
}

using Command = std::function<void(Context&)>;

const std::map<std::string, Command>& command_table() {
  static const std::map<std::string, Command> table{
      {"synth", cmd_synth},     {"fuse-gt", cmd_fuse_gt},   {"estimate", cmd_estimate},
      {"pulse-rate", cmd_pulse_rate}, {"score", cmd_score}, {"grid-map", cmd_grid_map},
      {"ptt", cmd_ptt},         {"extract", cmd_extract}};
  return table;
}

std::string ini_value(const std::string& s) {
  return s.find_first_of(" \t#;=\"") == std::string::npos && !s.empty() ? s : "\"" + s + "\"";
}

// Flat key=value echo of every option, accepted back by --config.
std::string config_ini(const RunConfig& c) {
  std::string out;
  auto put = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  auto num = [](double v) { return io::format_double(v); };
  if (!c.manifest.empty()) put("manifest", ini_value(c.manifest));
  if (!c.roi.empty()) put("roi", ini_value(c.roi));
  put("method", c.method);
  if (c.window_s) put("window-s", num(*c.window_s));
  if (c.stride_s) put("stride-s", num(*c.stride_s));
  if (c.band_bpm) put("band-bpm", num(c.band_bpm->first) + ":" + num(c.band_bpm->second));
  if (c.max_lag_s) put("max-lag-s", num(*c.max_lag_s));
  if (c.grid_cell_px) put("grid-cell-px", std::to_string(*c.grid_cell_px));
  put("seed", std::to_string(c.seed));
  put("out-dir", ini_value(c.out_dir));
  if (c.command == "synth") {
    put("duration-s", num(c.duration_s));
    put("rate-from-bpm", num(c.rate_from_bpm));
    put("rate-to-bpm", num(c.rate_to_bpm));
    put("frames", c.frames ? "true" : "false");
  }
  if (!c.input.empty()) put("input", ini_value(c.input));
  if (!c.pred.empty()) put("pred", ini_value(c.pred));
  if (!c.ref.empty()) put("ref", ini_value(c.ref));
  return out;
}

}  // namespace

const std::vector<std::string>& pipeline_commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : command_table()) v.push_back(k);
    return v;
  }();
  return names;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    std::size_t used_lo = 0, used_hi = 0;
    const double lo = std::stod(text.substr(0, colon), &used_lo);
    const double hi = std::stod(text.substr(colon + 1), &used_hi);
    if (used_lo != colon || used_hi != text.size() - colon - 1) throw std::invalid_argument("trailing text");
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("order");
    return {lo, hi};
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "band must be 'lo:hi' in bpm with 0 < lo < hi, got '" + text + "'");
  }
}

std::vector<std::string> run_pipeline(const RunConfig& cfg) {
  const auto& table = command_table();
  const auto it = table.find(cfg.command);
  if (it == table.end()) {
    std::string valid;
    for (const auto& n : pipeline_commands()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::InvalidArgument, "unknown command '" + cfg.command + "'; valid commands: " + valid);
  }
  fs::create_directories(cfg.out_dir);
  Context ctx{cfg, Stage(cfg.out_dir), {}, {}};
  it->second(ctx);

  const std::string stem = cfg.command + "_config";
  write_json(ctx.stage.file(stem + ".json"), {{"tool", "bodypulse"},
                                               {"version", BODYPULSE_VERSION},
                                               {"command", cfg.command},
                                               {"parameters", ctx.params},
                                               {"inputs", ctx.inputs.json()}});
  io::write_text(ctx.stage.file(stem + ".ini"), config_ini(cfg));
  return ctx.stage.commit();
}

std::string error_report_json(const std::string& command, const std::exception& e) {
  std::string kind = "internal";
  if (const auto* be = dynamic_cast<const Error*>(&e)) kind = to_string(be->kind());
  const ordered_json j{{"error", {{"kind", kind}, {"message", e.what()}, {"command", command}}}};
  return j.dump(2);
}

}  // namespace bodypulse
