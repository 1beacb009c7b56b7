#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cvgeo/descriptor.hpp"
#include "cvgeo/filter.hpp"
#include "cvgeo/losses.hpp"
#include "cvgeo/measurement.hpp"
#include "cvgeo/motion.hpp"
#include "cvgeo/world.hpp"

namespace cvgeo {

enum class LogFormat { csv, jsonl };

/// Everything one simulate / eval run needs. Populated from a key = value
/// file (see scenario_key_help() for the accepted keys) plus overrides.
struct ScenarioConfig {
  WorldConfig world;
  // Mean descriptor distance between horizontally adjacent cells. The
  // simulator scales the reduction layer to hit it; higher means a more
  // peaked measurement field. 0 keeps the pipeline untouched.
  double sharpness = 2.0;

  PipelineVariant variant = PipelineVariant::CvmNetI;
  std::size_t clusters = 8;
  std::size_t output_dim = 32;
  std::uint64_t pipeline_seed = 7;
  std::filesystem::path pipeline_file;  // overrides the generated pipeline
  bool normalize = false;

  std::filesystem::path trajectory_file;  // t,x,y,theta; empty = loop generator
  double loop_length = 1000.0;            // meters
  std::size_t loop_steps = 200;

  MotionNoise motion_noise;    // what the filter assumes
  MotionNoise odometry_noise;  // what corrupts the simulated odometry

  std::size_t particles = 1000;
  InitSpread init{2.0, 0.02};
  MeasurementMode mode = MeasurementMode::corner_sum;
  double floor = kDefaultProbabilityFloor;
  double ess_fraction = 0.0;
  bool use_measurement = true;
  kernels::Exec exec = kernels::Exec::parallel;

  std::uint64_t master_seed = 1;

  std::filesystem::path log_path;
  LogFormat log_format = LogFormat::csv;
  std::filesystem::path summary_path;
  std::size_t heatmap_every = 0;
  std::filesystem::path heatmap_dir = "heatmaps";
  HeatmapContrast heatmap_contrast = HeatmapContrast::exponential;

  // eval
  std::filesystem::path database_file;  // empty = satellite descriptors of every cell
  std::size_t eval_queries = 500;
  std::size_t eval_k_max = 80;
  double eval_top_percent = 1.0;
  std::vector<double> eval_thresholds{5, 10, 25, 50, 100, 200, 400};
  std::size_t eval_distractors = 0;
  std::filesystem::path eval_dir = "eval";
  std::vector<double> loss_alphas{1, 5, 10};
  double loss_margin = 0.5;
  double loss_d_min = -2.0;
  double loss_d_max = 2.0;
  std::size_t loss_samples = 201;

  void validate() const;
};

/// Applies one `key = value` setting. `source` and `line` go into the
/// ConfigError raised for unknown keys or bad values.
void apply_setting(ScenarioConfig& cfg, std::string_view key, std::string_view value,
                   const std::string& source = "<override>", std::size_t line = 0);

/// Applies "key=value" (as given on the command line).
void apply_override(ScenarioConfig& cfg, std::string_view assignment);

/// Parses a whole config text. Blank lines and '#' comments are skipped.
ScenarioConfig parse_scenario(std::string_view text, const std::string& source,
                              ScenarioConfig base = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// One line per accepted key with a short description.
std::string scenario_key_help();

/// Trajectory CSV with header `t,x,y,theta`; theta in radians.
std::vector<Pose> load_trajectory_csv(const std::filesystem::path& path);
std::string trajectory_csv(const std::vector<Pose>& poses);

/// Closed circular loop of the given length centered in the world, steps + 1
/// poses (the last equals the first), counter-clockwise. Each pose heading is
/// the direction of the step that reached it.
std::vector<Pose> loop_trajectory(const WorldConfig& world, double length, std::size_t steps);

}  // namespace cvgeo
