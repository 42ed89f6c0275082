#include "doctest.h"

#include "bodypulse/error.hpp"
#include "bodypulse/io.hpp"
#include "bodypulse/pipeline.hpp"
#include "bodypulse/synth.hpp"

#include <json.hpp>

#include <cmath>
#include <map>

using namespace bodypulse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bodypulse_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig command(const std::string& cmd, const fs::path& manifest, const fs::path& out) {
  RunConfig c;
  c.command = cmd;
  c.manifest = manifest.string();
  c.out_dir = out.string();
  return c;
}

fs::path make_session(const fs::path& root, double duration_s, bool frames = false, std::uint64_t seed = 5) {
  RunConfig c;
  c.command = "synth";
  c.out_dir = (root / "session").string();
  c.duration_s = duration_s;
  c.seed = seed;
  c.frames = frames;
  run_pipeline(c);
  return root / "session" / "manifest.json";
}

json load_json(const fs::path& p) { return json::parse(io::read_text(p)); }

std::map<std::string, std::string> digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::fnv1a_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("estimate on a synthetic session meets the rate contract") {
  const auto root = scratch("estimate");
  const auto manifest = make_session(root, 30.0);
  for (const char* method : {"pos", "chrom"}) {
    auto c = command("estimate", manifest, root / "out");
    c.roi = "face";
    c.method = method;
    const auto files = run_pipeline(c);
    CHECK(std::find(files.begin(), files.end(), std::string("estimate_config.json")) != files.end());
    const auto score = load_json(root / "out" / ("score_face_" + std::string(method) + ".json"));
    CHECK(score["report"]["mae_bpm"].get<double>() < 0.5);
    CHECK(score["report"]["pearson_r"].get<double>() > 0.99);
    CHECK(score["report"]["n_unmatched"].get<int>() == 0);
  }
  const auto echo = load_json(root / "out" / "estimate_config.json");
  CHECK(echo["version"] == BODYPULSE_VERSION);
  CHECK(echo["parameters"]["rate_plan"]["length_s"] == 10.0);
  CHECK(echo["parameters"]["filter_order"] == 4);
  CHECK(echo["inputs"].size() == 12);  // manifest, trace, oximeter, nine sensors
  CHECK(io::read_text(root / "out" / "estimate_config.json").find("time") == std::string::npos);
}

TEST_CASE("ptt recovers the injected site delays") {
  const auto root = scratch("ptt");
  const auto manifest = make_session(root, 20.0);
  const auto c = command("ptt", manifest, root / "out");
  run_pipeline(c);
  const auto ptt = load_json(root / "out" / "ptt.json");
  const auto sites = ptt["sites"].get<std::vector<std::string>>();
  const auto lag = ptt["mean_lag_s"];
  std::map<std::string, double> median;
  for (const auto& p : ptt["pairs"]) {
    if (p["from"] == "neck") median[p["to"].get<std::string>()] = p["box"]["median"].get<double>();
  }
  // Three sites carry motion bursts; the median is robust to them, the mean
  // only for the clean sites.
  for (const auto& s : default_contact_sites()) {
    const auto j = static_cast<std::size_t>(std::find(sites.begin(), sites.end(), s.name) - sites.begin());
    REQUIRE(j < sites.size());
    CHECK(lag[j][0].get<double>() == -lag[0][j].get<double>());
    if (j == 0) continue;
    CHECK(std::abs(median[s.name] - s.delay_s) <= 1.5 / 400.0);
    if (j != 3 && j != 5 && j != 7) CHECK(std::abs(lag[0][j].get<double>() - s.delay_s) <= 1.5 / 400.0);
  }
  CHECK(ptt["windows"].get<int>() == 1501);
  const auto echo = load_json(root / "out" / "ptt_config.json");
  CHECK(echo["parameters"]["ptt_plan"]["length_s"] == 5.0);
  CHECK(echo["parameters"]["ptt_plan"]["stride_s"] == 0.01);
  CHECK(echo["parameters"]["max_lag_s"] == 0.3);
}

TEST_CASE("errors are structured and leave no partial outputs") {
  const auto root = scratch("errors");
  const auto manifest = make_session(root, 12.0);
  auto c = command("estimate", manifest, root / "out");
  c.roi = "forehead";
  try {
    run_pipeline(c);
    FAIL("expected an error");
  } catch (const Error& e) {
    const auto report = json::parse(error_report_json("estimate", e));
    CHECK(report["error"]["kind"] == "invalid-argument");
    CHECK(report["error"]["command"] == "estimate");
    const std::string msg = report["error"]["message"];
    CHECK(msg.find("face") != std::string::npos);
    CHECK(msg.find("left-palm") != std::string::npos);
  }
  CHECK(fs::is_empty(root / "out"));

  c.roi = "face";
  c.method = "green";
  CHECK_THROWS_AS(run_pipeline(c), Error);
  c.command = "nope";
  CHECK_THROWS_WITH_AS(run_pipeline(c), doctest::Contains("grid-map"), Error);
  CHECK(fs::is_empty(root / "out"));

  CHECK(parse_band("40:180") == std::pair{40.0, 180.0});
  CHECK_THROWS_AS(parse_band("180:40"), Error);
  CHECK_THROWS_AS(parse_band("40-180"), Error);
  CHECK_THROWS_AS(parse_band("40:180x"), Error);
}

TEST_CASE("re-running a command reproduces its outputs byte for byte") {
  const auto root = scratch("determinism");
  const auto manifest = make_session(root, 24.0);
  const auto out = root / "out";
  auto run_all = [&] {
    for (const char* cmd : {"fuse-gt", "score", "grid-map", "ptt"}) run_pipeline(command(cmd, manifest, out));
    return digests(out);
  };
  const auto first = run_all();
  CHECK(first.size() > 20);
  const auto second = run_all();
  CHECK(first == second);

  // A second synthetic session from the same seed is identical too.
  const auto again = make_session(scratch("determinism_b"), 24.0);
  auto a = digests(manifest.parent_path());
  auto b = digests(again.parent_path());
  a.erase("synth_config.ini");
  b.erase("synth_config.ini");
  CHECK(a == b);
}

TEST_CASE("config echo reruns to the same artifact") {
  const auto root = scratch("echo");
  const auto manifest = make_session(root, 12.0);
  auto c = command("pulse-rate", manifest, root / "out");
  c.input = (root / "session" / "fused.csv").string();
  {
    auto fuse = command("fuse-gt", manifest, root / "fuse");
    run_pipeline(fuse);
    fs::copy_file(root / "fuse" / "fused_pulse.csv", c.input);
  }
  c.window_s = 8.0;
  c.band_bpm = std::pair{45.0, 150.0};
  run_pipeline(c);
  const std::string ini = io::read_text(root / "out" / "pulse-rate_config.ini");
  CHECK(ini.find("window-s=8\n") != std::string::npos);
  CHECK(ini.find("band-bpm=45:150\n") != std::string::npos);
  const auto rates = io::read_rate_csv(root / "out" / "rate.csv", 8.0);
  CHECK(rates.entries.size() == 5);
  CHECK(rates.entries.front().time_s == doctest::Approx(4.0));
}

TEST_CASE("score in file mode") {
  const auto root = scratch("score_files");
  PulseRateSeries p, r;
  for (int i = 0; i < 6; ++i) {
    p.entries.push_back({5.0 + i, 70.0 + i});
    r.entries.push_back({5.0 + i, 71.0 + i});
  }
  io::write_rate_csv(root / "p.csv", p);
  io::write_rate_csv(root / "r.csv", r);
  RunConfig c;
  c.command = "score";
  c.pred = (root / "p.csv").string();
  c.ref = (root / "r.csv").string();
  c.out_dir = (root / "out").string();
  run_pipeline(c);
  const auto s = load_json(root / "out" / "score.json");
  CHECK(s["report"]["mae_bpm"].get<double>() == doctest::Approx(1.0));
  CHECK(s["report"]["pearson_r"].get<double>() == doctest::Approx(1.0));
  CHECK(s["report"]["snr_db"].is_null());
  c.ref.clear();
  CHECK_THROWS_AS(run_pipeline(c), Error);
}

TEST_CASE("grid-map over a 90 s session yields nine aligned error frames") {
  const auto root = scratch("grid");
  const auto manifest = make_session(root, 90.0);
  run_pipeline(command("grid-map", manifest, root / "out"));
  const auto dir = root / "out" / "grid" / "left-palm" / "relaxed";
  const auto meta = load_json(dir / "grid.json");
  REQUIRE(meta["windows"].size() == 9);
  CHECK(meta["geometry"]["cols"] == 3);
  CHECK(meta["geometry"]["rows"] == 3);
  for (const auto& w : meta["windows"]) CHECK(w["alignment"] == "pose homography");
  const Map2D mae = io::read_map_csv(dir / "window_04_mae.csv");
  const Map2D mask = io::read_map_csv(dir / "window_04_mask.csv");
  CHECK(mask.at(0, 2) == 0.0);
  CHECK(mask.at(1, 1) == 1.0);
  // Every cell but the deliberately noisy bottom-right one tracks the rate.
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      if (r < 2 || col < 2) CHECK(mae.at(r, col) < 1.0);
    }
  }
  const Map2D count = io::read_map_csv(dir / "heatmap_count.csv");
  CHECK(count.rows == 120);
  CHECK(count.cols == 160);
  double peak = 0.0;
  for (double v : count.values) peak = std::max(peak, v);
  CHECK(peak == 9.0);
  // The masked top-right cell never reaches the heatmap.
  const Map2D heat = io::read_map_csv(dir / "heatmap_mae.csv");
  CHECK_FALSE(heat.defined(3, 50));
  CHECK(heat.defined(30, 30));
  CHECK(load_json(root / "out" / "grid_summary.json")["grids"][0]["error_frames"] == 9);
}

TEST_CASE("extract from a rendered frame dump matches the generator") {
  const auto root = scratch("extract");
  const auto manifest = make_session(root, 12.0, true);
  auto c = command("extract", manifest, root / "out");
  c.roi = "left-palm";
  run_pipeline(c);
  for (const char* roi : {"face", "left-arm", "left-palm"}) {
    const auto name = std::string("traces/") + roi + ".csv";
    const RGBTrace got = io::read_rgb_csv(root / "out" / name, roi);
    const RGBTrace want = io::read_rgb_csv(root / "session" / name, roi);
    REQUIRE(got.size() == want.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got.g[i] - want.g[i]));
    CHECK(worst < 0.1);
  }
  CHECK(io::read_text(root / "out" / "grid/left-palm_skin.csv") ==
        io::read_text(root / "session" / "grid/left-palm_skin.csv"));

  // A different cell size re-extracts the grid from the frames.
  auto g = command("grid-map", manifest, root / "grid");
  g.grid_cell_px = 30;
  g.window_s = 5.0;
  run_pipeline(g);
  const auto meta = load_json(root / "grid" / "grid" / "left-palm" / "relaxed" / "grid.json");
  CHECK(meta["geometry"]["cell_px"] == 30);
  CHECK(meta["geometry"]["cols"] == 2);
  CHECK(meta["windows"].size() == 2);
}
