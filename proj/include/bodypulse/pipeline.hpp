#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bodypulse {

// Every field maps to one CLI flag and one config-file key of the same name.
struct RunConfig {
  std::string command;
  std::string manifest;
  std::string roi;
  std::string method = "pos";
  std::optional<double> window_s;
  std::optional<double> stride_s;
  std::optional<std::pair<double, double>> band_bpm;
  std::optional<double> max_lag_s;
  std::optional<int> grid_cell_px;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // synth
  double duration_s = 60.0;
  double rate_from_bpm = 60.0;
  double rate_to_bpm = 90.0;
  bool frames = false;

  // pulse-rate / score on explicit files
  std::string input;
  std::string pred;
  std::string ref;
};

const std::vector<std::string>& pipeline_commands();

// Runs one command. Outputs are staged and moved into out_dir only when the
// whole command succeeds; returns the output paths relative to out_dir.
std::vector<std::string> run_pipeline(const RunConfig& cfg);

// {"error": {"kind", "message", "command"}}
std::string error_report_json(const std::string& command, const std::exception& e);

// "40:180" -> (40, 180)
std::pair<double, double> parse_band(const std::string& text);

}  // namespace bodypulse
