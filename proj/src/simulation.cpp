#include "cvgeo/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"
#include "cvgeo/losses.hpp"
#include "cvgeo/measurement.hpp"

namespace cvgeo {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Far-field distractors live this far east of the map.
constexpr double kFarFieldOffsetM = 50000.0;

void append_number(std::string& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void quantize(AffineMap& m) {
  for (double& w : m.weight.data()) w = static_cast<double>(static_cast<float>(w));
  for (double& b : m.bias) b = static_cast<double>(static_cast<float>(b));
}

void scale(AffineMap& m, double gain) {
  for (double& w : m.weight.data()) w *= gain;
  for (double& b : m.bias) b *= gain;
  quantize(m);
}

std::vector<ReductionParams*> reductions(PipelineConfig& p) {
  if (auto* n = std::get_if<CvmNetIParams>(&p.net)) {
    return {&n->satellite_reduction, &n->ground_reduction};
  }
  return {&std::get<CvmNetIIParams>(p.net).shared_reduction};
}

LocalFeatureSet satellite_at(const SyntheticWorld& world, const LocalPoint& p) {
  return synth_features(world, Pose{p.x, p.y, 0.0}, 0, View::satellite);
}

}  // namespace

double position_error(const Pose& est, const Pose& gt) {
  return std::hypot(est.x - gt.x, est.y - gt.y);
}

double heading_error(double est_theta, double gt_theta) {
  const double ce = std::cos(est_theta), se = std::sin(est_theta);
  const double cg = std::cos(gt_theta), sg = std::sin(gt_theta);
  const double e = std::atan2(cg * se - sg * ce, cg * ce + sg * se);
  return e <= -std::numbers::pi ? std::numbers::pi : e;
}

double adjacent_cell_distance(const SyntheticWorld& world, const PipelineConfig& pipeline,
                              std::size_t samples) {
  const GridMap& map = world.map();
  SeededRng rng(SeededRng::derive(world.config().seed, 0xADCE11));
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto col = static_cast<std::size_t>(rng.uniform() * static_cast<double>(map.width() - 1));
    const auto row = static_cast<std::size_t>(rng.uniform() * static_cast<double>(map.height()));
    const auto& a = map.cell(map.index(col, row)).location;
    const auto& b = map.cell(map.index(col + 1, row)).location;
    const auto da = forward(pipeline, satellite_at(world, a));
    const auto db = forward(pipeline, satellite_at(world, b));
    total += euclidean_distance(da.values, db.values);
  }
  return total / static_cast<double>(samples);
}

PipelineConfig simulation_pipeline(const ScenarioConfig& cfg, const SyntheticWorld& world) {
  if (!cfg.pipeline_file.empty()) return load_pipeline(cfg.pipeline_file);
  PipelineConfig p = random_pipeline(cfg.variant, cfg.clusters, cfg.world.feature_dim, cfg.output_dim,
                                     cfg.pipeline_seed, cfg.normalize);
  if (auto* n = std::get_if<CvmNetIParams>(&p.net)) {
    n->ground_vlad = n->satellite_vlad;
    n->ground_reduction = n->satellite_reduction;
  } else {
    auto& t = std::get<CvmNetIIParams>(p.net).transforms;
    t.ground_independent = t.satellite_independent;
  }
  if (cfg.sharpness > 0.0 && !cfg.normalize && cfg.world.kind == WorldKind::smooth) {
    const double raw = adjacent_cell_distance(world, p);
    if (raw > 0.0) {
      for (ReductionParams* r : reductions(p)) scale(r->projection, cfg.sharpness / raw);
    }
  }
  p.validate();
  return p;
}

PreparedWorld prepare_world(const ScenarioConfig& cfg) {
  cfg.validate();
  SyntheticWorld world = build_world(cfg.world);
  PipelineConfig pipeline = simulation_pipeline(cfg, world);
  GridMap db_map = populate_descriptors(world, pipeline);
  return {std::move(world), std::move(pipeline), std::move(db_map)};
}

GlobalDescriptor ground_descriptor(const PreparedWorld& pw, const Pose& pose,
                                   std::uint64_t frame_seed) {
  return forward(pw.pipeline, synth_features(pw.world, pose, frame_seed, View::ground));
}

DescriptorDatabase cell_database(const GridMap& db_map) {
  std::vector<DatabaseItem> items;
  items.reserve(db_map.size());
  for (std::size_t i = 0; i < db_map.size(); ++i) {
    const GridCell& c = db_map.cell(i);
    if (!c.descriptor) throw InvalidArgument("cell " + std::to_string(i) + " has no descriptor");
    items.push_back({i, local_to_geo(db_map, c.location), *c.descriptor});
  }
  return build_db(items);
}

RunSummary summarize(const std::vector<StepLog>& steps) {
  RunSummary s;
  s.steps = steps.size();
  if (steps.empty()) return s;
  std::vector<double> pos;
  pos.reserve(steps.size());
  double sum_pos = 0.0;
  double sum_head = 0.0;
  for (const StepLog& l : steps) {
    pos.push_back(l.err_pos);
    sum_pos += l.err_pos;
    sum_head += std::abs(l.err_theta);
    if (l.degenerate) ++s.degenerate_steps;
  }
  const auto n = static_cast<double>(steps.size());
  s.mean_position_error = sum_pos / n;
  s.mean_heading_error_deg = sum_head / n * kRadToDeg;
  s.max_position_error = *std::max_element(pos.begin(), pos.end());
  std::sort(pos.begin(), pos.end());
  const std::size_t mid = pos.size() / 2;
  s.median_position_error = pos.size() % 2 == 1 ? pos[mid] : 0.5 * (pos[mid - 1] + pos[mid]);
  return s;
}

std::vector<Pose> scenario_trajectory(const ScenarioConfig& cfg) {
  if (!cfg.trajectory_file.empty()) return load_trajectory_csv(cfg.trajectory_file);
  return loop_trajectory(cfg.world, cfg.loop_length, cfg.loop_steps);
}

RunResult run_simulation(const ScenarioConfig& cfg, const PreparedWorld& pw) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.trajectory = scenario_trajectory(cfg);
  const auto& gt = result.trajectory;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pw.world.map().contains({gt[i].x, gt[i].y})) {
      throw InvalidArgument("trajectory pose " + std::to_string(i) + " lies outside the map");
    }
  }

  const SeededRng master(cfg.master_seed);
  SeededRng init_rng = master.substream(1);
  SeededRng odo_rng = master.substream(2);
  SeededRng filter_rng = master.substream(3);

  LocalizationContext ctx;
  ctx.db_map = &pw.db_map;
  ctx.noise = cfg.motion_noise;
  ctx.filter.mode = cfg.mode;
  ctx.filter.exec = cfg.exec;
  ctx.filter.ess_fraction = cfg.ess_fraction;
  ctx.field.floor = cfg.floor;
  ctx.field.exec = cfg.exec;
  ctx.use_measurement = cfg.use_measurement;

  if (cfg.heatmap_every > 0) std::filesystem::create_directories(cfg.heatmap_dir);

  ParticleSet set = init_particles(gt[0], cfg.init, cfg.particles, init_rng);
  Pose odom = gt[0];
  double heading = gt[0].theta;
  result.steps.reserve(gt.size() - 1);
  for (std::size_t t = 1; t < gt.size(); ++t) {
    const Pose odom_prev = odom;
    odom = sample_motion(odom_prev, simulate_odometry(gt[t - 1], gt[t]), cfg.odometry_noise, odo_rng);
    FrameInputs frame{ground_descriptor(pw, gt[t], SeededRng::derive(cfg.master_seed, t)), odom_prev,
                      odom};
    LocalizeResult r = localize_step(frame, set, ctx, filter_rng, heading);
    set = std::move(r.set);
    heading = r.estimate.pose.theta;

    StepLog log;
    log.t = t;
    log.est = r.estimate.pose;
    log.gt = gt[t];
    log.err_pos = position_error(log.est, log.gt);
    log.err_theta = heading_error(log.est.theta, log.gt.theta);
    log.ess = r.status.ess;
    log.degenerate = r.status.degenerate;
    result.steps.push_back(log);

    if (cfg.heatmap_every > 0 && t % cfg.heatmap_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%05zu", t);
      write_heatmap_csv(cfg.heatmap_dir / (std::string(name) + ".csv"), r.field);
      write_pgm(cfg.heatmap_dir / (std::string(name) + ".pgm"), emit_heatmap(r.field, cfg.heatmap_contrast));
    }
  }
  result.summary = summarize(result.steps);
  result.summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (result.summary.wall_time_s > 0.0) {
    result.summary.steps_per_second = static_cast<double>(result.summary.steps) / result.summary.wall_time_s;
  }
  return result;
}

RunResult run_simulation(const ScenarioConfig& cfg) { return run_simulation(cfg, prepare_world(cfg)); }

std::string step_log_text(const std::vector<StepLog>& steps, LogFormat format) {
  std::string out;
  if (format == LogFormat::csv) {
    out = "t,est_x,est_y,est_theta,gt_x,gt_y,gt_theta,err_pos,err_theta,ess,degenerate_flag\n";
    for (const StepLog& l : steps) {
      out += std::to_string(l.t);
      for (double v : {l.est.x, l.est.y, l.est.theta, l.gt.x, l.gt.y, l.gt.theta, l.err_pos, l.err_theta, l.ess}) {
        out += ',';
        append_number(out, v);
      }
      out += l.degenerate ? ",1\n" : ",0\n";
    }
    return out;
  }
  for (const StepLog& l : steps) {
    nlohmann::ordered_json j;
    j["t"] = l.t;
    j["est_x"] = l.est.x;
    j["est_y"] = l.est.y;
    j["est_theta"] = l.est.theta;
    j["gt_x"] = l.gt.x;
    j["gt_y"] = l.gt.y;
    j["gt_theta"] = l.gt.theta;
    j["err_pos"] = l.err_pos;
    j["err_theta"] = l.err_theta;
    j["ess"] = l.ess;
    j["degenerate_flag"] = l.degenerate;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["mean_position_error_m"] = s.mean_position_error;
  j["median_position_error_m"] = s.median_position_error;
  j["max_position_error_m"] = s.max_position_error;
  j["mean_heading_error_deg"] = s.mean_heading_error_deg;
  j["steps"] = s.steps;
  j["degenerate_steps"] = s.degenerate_steps;
  j["wall_time_s"] = s.wall_time_s;
  j["steps_per_second"] = s.steps_per_second;
  return j.dump(2) + "\n";
}

void write_run_outputs(const ScenarioConfig& cfg, const RunResult& result) {
  if (!cfg.log_path.empty()) io::write_text_file(cfg.log_path, step_log_text(result.steps, cfg.log_format));
  if (!cfg.summary_path.empty()) io::write_text_file(cfg.summary_path, summary_json(result.summary));
}

std::vector<DatabaseItem> far_field_distractors(const PreparedWorld& pw, std::size_t count,
                                                std::uint64_t seed) {
  const WorldConfig& wc = pw.world.config();
  SeededRng rng(seed);
  std::vector<DatabaseItem> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const LocalPoint p{kFarFieldOffsetM + rng.uniform() * wc.extent_x * 10.0, rng.uniform() * wc.extent_y * 10.0};
    LocalFeatureSet feats{pw.world.base_features(p), View::satellite};
    out.push_back({1000000000ULL + i, local_to_geo(wc.origin, p), forward(pw.pipeline, feats)});
  }
  return out;
}

std::vector<LabeledQuery> cell_queries(const PreparedWorld& pw, std::size_t count, std::uint64_t seed,
                                       std::vector<GeoQuery>* geo) {
  const GridMap& map = pw.db_map;
  SeededRng rng(seed);
  std::vector<LabeledQuery> out;
  out.reserve(count);
  for (std::size_t q = 0; q < count; ++q) {
    const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(map.size()));
    const LocalPoint& at = map.cell(idx).location;
    const Pose pose{at.x, at.y, wrap_angle(2.0 * std::numbers::pi * rng.uniform())};
    GlobalDescriptor d = ground_descriptor(pw, pose, rng.next_u64());
    if (geo != nullptr) geo->push_back({local_to_geo(map, at), d});
    out.push_back({idx, std::move(d)});
  }
  return out;
}

EvalReport eval_retrieval(const ScenarioConfig& cfg, const PreparedWorld& pw) {
  const DescriptorDatabase db =
      cfg.database_file.empty() ? cell_database(pw.db_map) : load_database(cfg.database_file);
  std::vector<GeoQuery> geo;
  const auto queries = cell_queries(pw, cfg.eval_queries, SeededRng::derive(cfg.master_seed, 0xE7A1), &geo);
  for (const auto& q : queries) {
    if (!db.contains(q.truth_id)) {
      throw InvalidArgument("database has no entry for cell " + std::to_string(q.truth_id));
    }
  }
  EvalReport r;
  r.database_size = db.size();
  r.queries = queries.size();
  const std::size_t k_max = std::min(cfg.eval_k_max, db.size());
  r.recall_curve = recall_curve(db, queries, k_max);
  r.top_percent_k = top_percent_k(db.size(), cfg.eval_top_percent);
  r.recall_top_percent = recall_at_top_percent(db, queries, cfg.eval_top_percent);
  r.thresholds = cfg.eval_thresholds;
  r.distance_recall = recall_vs_distance(db, geo, r.thresholds);
  r.distractors = cfg.eval_distractors;
  if (cfg.eval_distractors > 0) {
    const auto extra = far_field_distractors(pw, cfg.eval_distractors, SeededRng::derive(cfg.master_seed, 0xD157));
    const DescriptorDatabase with = add_distractors(db, extra);
    r.recall_curve_distractors = recall_curve(with, queries, k_max);
  }
  return r;
}

EvalReport eval_retrieval(const ScenarioConfig& cfg) { return eval_retrieval(cfg, prepare_world(cfg)); }

void write_eval_outputs(const ScenarioConfig& cfg, const EvalReport& r) {
  std::filesystem::create_directories(cfg.eval_dir);
  std::string curve = r.recall_curve_distractors.empty() ? "k,recall\n" : "k,recall,recall_with_distractors\n";
  for (std::size_t k = 0; k < r.recall_curve.size(); ++k) {
    curve += std::to_string(k + 1) + ',';
    append_number(curve, r.recall_curve[k]);
    if (!r.recall_curve_distractors.empty()) {
      curve += ',';
      append_number(curve, r.recall_curve_distractors[k]);
    }
    curve += '\n';
  }
  io::write_text_file(cfg.eval_dir / "recall_curve.csv", curve);

  std::string dist = "threshold_m,recall\n";
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    append_number(dist, r.thresholds[i]);
    dist += ',';
    append_number(dist, r.distance_recall[i]);
    dist += '\n';
  }
  io::write_text_file(cfg.eval_dir / "distance_recall.csv", dist);

  io::write_text_file(cfg.eval_dir / "loss_surface.csv",
                      loss_surface_csv(cfg.loss_alphas, cfg.loss_margin, cfg.loss_d_min, cfg.loss_d_max,
                                       cfg.loss_samples));

  nlohmann::ordered_json j;
  j["database_size"] = r.database_size;
  j["queries"] = r.queries;
  j["top_percent"] = cfg.eval_top_percent;
  j["top_percent_k"] = r.top_percent_k;
  j["recall_top_percent"] = r.recall_top_percent;
  j["recall_at_1"] = r.recall_curve.empty() ? 0.0 : r.recall_curve.front();
  j["distractors"] = r.distractors;
  if (!r.recall_curve_distractors.empty()) j["recall_at_1_with_distractors"] = r.recall_curve_distractors.front();
  io::write_text_file(cfg.eval_dir / "report.json", j.dump(2) + "\n");
}

}  // namespace cvgeo
