#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cvgeo/descriptor.hpp"
#include "cvgeo/filter.hpp"
#include "cvgeo/map_grid.hpp"
#include "cvgeo/retrieval.hpp"
#include "cvgeo/scenario.hpp"
#include "cvgeo/world.hpp"

namespace cvgeo {

/// Euclidean distance between the positions, meters.
double position_error(const Pose& est, const Pose& gt);

/// Signed angle from the gt heading vector to the estimated one,
/// atan2(cross, dot), in (-pi, pi].
double heading_error(double est_theta, double gt_theta);

/// World, descriptor pipeline and the database lattice built from them.
struct PreparedWorld {
  SyntheticWorld world;
  PipelineConfig pipeline;
  GridMap db_map;  // satellite descriptor in every cell
};

/// Pipeline used by the simulator: generated (or loaded) parameters where the
/// ground branch copies the satellite branch, standing in for a trained
/// network whose two views agree. With sharpness > 0 the reduction layer is
/// rescaled so adjacent cells sit that far apart in descriptor space.
PipelineConfig simulation_pipeline(const ScenarioConfig& cfg, const SyntheticWorld& world);

/// Mean descriptor distance between horizontally adjacent cells (sampled).
double adjacent_cell_distance(const SyntheticWorld& world, const PipelineConfig& pipeline,
                              std::size_t samples = 256);

PreparedWorld prepare_world(const ScenarioConfig& cfg);

/// Ground-view descriptor of the camera at `pose`.
GlobalDescriptor ground_descriptor(const PreparedWorld& pw, const Pose& pose,
                                   std::uint64_t frame_seed);

/// Database of every lattice cell: id = cell index, geo = cell location.
DescriptorDatabase cell_database(const GridMap& db_map);

struct StepLog {
  std::size_t t = 0;
  Pose est;
  Pose gt;
  double err_pos = 0.0;
  double err_theta = 0.0;  // radians, signed
  double ess = 0.0;
  bool degenerate = false;
};

struct RunSummary {
  double mean_position_error = 0.0;
  double median_position_error = 0.0;
  double max_position_error = 0.0;
  double mean_heading_error_deg = 0.0;  // mean of |heading error|
  std::size_t steps = 0;
  std::size_t degenerate_steps = 0;
  double wall_time_s = 0.0;
  double steps_per_second = 0.0;
};

struct RunResult {
  RunSummary summary;
  std::vector<StepLog> steps;
  std::vector<Pose> trajectory;  // ground truth, steps + 1 poses
};

/// Summary statistics of a step log (wall time left at zero).
RunSummary summarize(const std::vector<StepLog>& steps);

/// Trajectory from the config: the CSV file if set, else the loop generator.
std::vector<Pose> scenario_trajectory(const ScenarioConfig& cfg);

/// Replays the trajectory through the full localization loop. Writes
/// heatmaps when cfg.heatmap_every > 0; everything else is returned.
RunResult run_simulation(const ScenarioConfig& cfg, const PreparedWorld& pw);
RunResult run_simulation(const ScenarioConfig& cfg);

std::string step_log_text(const std::vector<StepLog>& steps, LogFormat format);
std::string summary_json(const RunSummary& summary);

/// Writes the step log and summary to the configured paths (if set).
void write_run_outputs(const ScenarioConfig& cfg, const RunResult& result);

struct EvalReport {
  std::size_t database_size = 0;
  std::size_t queries = 0;
  std::vector<double> recall_curve;  // index k-1
  std::size_t top_percent_k = 0;
  double recall_top_percent = 0.0;
  std::vector<double> thresholds;
  std::vector<double> distance_recall;
  std::size_t distractors = 0;
  std::vector<double> recall_curve_distractors;  // empty without distractors
};

/// Database items of the same appearance field sampled far outside the map,
/// so none of them is a correct answer for any query.
std::vector<DatabaseItem> far_field_distractors(const PreparedWorld& pw, std::size_t count,
                                                std::uint64_t seed);

/// Ground queries at random cells with random headings.
std::vector<LabeledQuery> cell_queries(const PreparedWorld& pw, std::size_t count,
                                       std::uint64_t seed, std::vector<GeoQuery>* geo = nullptr);

EvalReport eval_retrieval(const ScenarioConfig& cfg, const PreparedWorld& pw);
EvalReport eval_retrieval(const ScenarioConfig& cfg);

/// recall_curve.csv, distance_recall.csv, loss_surface.csv and report.json
/// under cfg.eval_dir.
void write_eval_outputs(const ScenarioConfig& cfg, const EvalReport& report);

}  // namespace cvgeo
