// cvgeo: command-line front end of the cross-view localization engine.
//
//   cvgeo build-db  --config s.cfg --out db.bin [--pipeline-out p.bin]
//   cvgeo query     --config s.cfg --db db.bin --pose x,y,theta [-k 5]
//   cvgeo localize  --config s.cfg --pose x,y,theta --odom-prev x,y,theta --odom-curr x,y,theta
//   cvgeo simulate  --config s.cfg [--set key=value]... [--log steps.csv] [--summary s.json]
//   cvgeo eval      --config s.cfg [--out-dir eval/]
//
// Exit codes: 0 ok, 1 internal error, 2 usage/config error, 3 I/O error,
// 4 invalid data.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvgeo/errors.hpp"
#include "cvgeo/retrieval.hpp"
#include "cvgeo/scenario.hpp"
#include "cvgeo/simulation.hpp"

namespace {

using namespace cvgeo;

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kData = 4 };

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> direct;  // flags that mirror config keys, as key=value
};

// Flags that mirror a config key; they are applied after --config and
// before --set.
void add_mirror(CLI::App* app, Common& c, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&c, key](const std::string& v) { c.direct.push_back(key + "=" + v); }, help + " (" + key + ")");
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config,-c", c.config, "scenario config file");
  app->add_option("--set", c.sets, "override a config key, key=value (repeatable)");
  add_mirror(app, c, "--seed", "seed", "master seed");
  add_mirror(app, c, "--particles", "filter.particles", "particle count");
  add_mirror(app, c, "--mode", "filter.mode", "measurement mode");
  add_mirror(app, c, "--heatmap-every", "output.heatmap_every", "heatmap period in steps");
  add_mirror(app, c, "--heatmap-dir", "output.heatmap_dir", "heatmap directory");
  add_mirror(app, c, "--log", "output.log", "per-step log path");
  add_mirror(app, c, "--log-format", "output.log_format", "csv or jsonl");
  add_mirror(app, c, "--summary", "output.summary", "summary JSON path");
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig{} : load_scenario(c.config);
  for (const auto& kv : c.direct) apply_override(cfg, kv);
  for (const auto& kv : c.sets) apply_override(cfg, kv);
  cfg.validate();
  return cfg;
}

Pose parse_pose(const std::string& s, const char* what) {
  Pose p;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf%c", &p.x, &p.y, &p.theta, &tail) != 3) {
    throw CLI::ValidationError(what, "expected x,y,theta");
  }
  return p;
}

nlohmann::ordered_json pose_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

int run(int argc, char** argv) {
  CLI::App app{"Cross-view geo-localization engine"};
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print the accepted config keys and exit");
  app.require_subcommand(0, 1);

  Common common;

  auto* build = app.add_subcommand("build-db", "build a descriptor database of every map cell");
  add_common(build, common);
  std::string db_out, pipeline_out;
  build->add_option("--out,-o", db_out, "database file")->required();
  build->add_option("--pipeline-out", pipeline_out, "also save the pipeline parameters");

  auto* query_cmd = app.add_subcommand("query", "nearest database entries of a ground view");
  add_common(query_cmd, common);
  std::string db_in, pose_s, descriptor_s;
  std::size_t k = 5;
  query_cmd->add_option("--db", db_in, "database file")->required();
  auto* pose_opt = query_cmd->add_option("--pose", pose_s, "camera pose x,y,theta in map meters");
  auto* desc_opt = query_cmd->add_option("--descriptor", descriptor_s, "comma-separated descriptor");
  pose_opt->excludes(desc_opt);
  query_cmd->add_option("-k", k, "number of matches")->check(CLI::PositiveNumber);

  auto* loc = app.add_subcommand("localize", "one filter step from a prior pose");
  add_common(loc, common);
  std::string loc_pose, odom_prev_s, odom_curr_s, init_s, heatmap_out;
  loc->add_option("--pose", loc_pose, "true camera pose x,y,theta (renders the ground view)")->required();
  loc->add_option("--odom-prev", odom_prev_s, "odometry pose of the previous frame")->required();
  loc->add_option("--odom-curr", odom_curr_s, "odometry pose of the current frame")->required();
  loc->add_option("--init", init_s, "center of the prior particle cloud (default: --odom-prev)");
  loc->add_option("--heatmap", heatmap_out, "write the probability field as <path>.csv and <path>.pgm");

  auto* sim = app.add_subcommand("simulate", "replay a trajectory through the localization loop");
  add_common(sim, common);

  auto* ev = app.add_subcommand("eval", "retrieval metrics and loss-surface dumps");
  add_common(ev, common);
  std::string out_dir;
  ev->add_option("--out-dir", out_dir, "output directory (eval.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (list_keys) {
    std::cout << scenario_key_help();
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (build->parsed()) {
      const ScenarioConfig cfg = resolve(common);
      const PreparedWorld pw = prepare_world(cfg);
      const DescriptorDatabase db = cell_database(pw.db_map);
      save_database(db_out, db);
      if (!pipeline_out.empty()) save_pipeline(pipeline_out, pw.pipeline);
      std::cout << "wrote " << db.size() << " entries of dimension " << db.dimension() << " to " << db_out
                << "\n";
    } else if (query_cmd->parsed()) {
      const DescriptorDatabase db = load_database(db_in);
      GlobalDescriptor q;
      if (!descriptor_s.empty()) {
        std::stringstream ss(descriptor_s);
        std::string part;
        while (std::getline(ss, part, ',')) q.values.push_back(std::stod(part));
      } else if (!pose_s.empty()) {
        const ScenarioConfig cfg = resolve(common);
        const PreparedWorld pw = prepare_world(cfg);
        q = ground_descriptor(pw, parse_pose(pose_s, "--pose"), cfg.master_seed);
      } else {
        throw CLI::ValidationError("query", "one of --pose or --descriptor is required");
      }
      const RetrievalResult r = query(db, q, k);
      std::cout << "rank,id,lat,lon,distance\n";
      for (std::size_t i = 0; i < r.matches.size(); ++i) {
        const auto& e = db.find(r.matches[i].id);
        std::printf("%zu,%llu,%.9f,%.9f,%.9g\n", i + 1, static_cast<unsigned long long>(e.id), e.geo.lat,
                    e.geo.lon, r.matches[i].distance);
      }
    } else if (loc->parsed()) {
      const ScenarioConfig cfg = resolve(common);
      const PreparedWorld pw = prepare_world(cfg);
      const Pose truth = parse_pose(loc_pose, "--pose");
      const Pose prev = parse_pose(odom_prev_s, "--odom-prev");
      const Pose curr = parse_pose(odom_curr_s, "--odom-curr");
      const Pose init = init_s.empty() ? prev : parse_pose(init_s, "--init");
      const SeededRng master(cfg.master_seed);
      SeededRng init_rng = master.substream(1);
      SeededRng filter_rng = master.substream(3);
      const ParticleSet set = init_particles(init, cfg.init, cfg.particles, init_rng);
      LocalizationContext ctx;
      ctx.db_map = &pw.db_map;
      ctx.noise = cfg.motion_noise;
      ctx.filter.mode = cfg.mode;
      ctx.filter.exec = cfg.exec;
      ctx.filter.ess_fraction = cfg.ess_fraction;
      ctx.field.floor = cfg.floor;
      ctx.field.exec = cfg.exec;
      ctx.use_measurement = cfg.use_measurement;
      const FrameInputs frame{ground_descriptor(pw, truth, cfg.master_seed), prev, curr};
      const LocalizeResult r = localize_step(frame, set, ctx, filter_rng, init.theta);
      if (!heatmap_out.empty()) {
        write_heatmap_csv(heatmap_out + ".csv", r.field);
        write_pgm(heatmap_out + ".pgm", emit_heatmap(r.field, cfg.heatmap_contrast));
      }
      nlohmann::ordered_json j;
      j["estimate"] = pose_json(r.estimate.pose);
      j["heading_defined"] = r.estimate.heading_defined;
      j["truth"] = pose_json(truth);
      j["err_pos"] = position_error(r.estimate.pose, truth);
      j["err_theta"] = heading_error(r.estimate.pose.theta, truth.theta);
      j["ess"] = r.status.ess;
      j["degenerate_flag"] = r.status.degenerate;
      std::cout << j.dump(2) << "\n";
    } else if (sim->parsed()) {
      const ScenarioConfig cfg = resolve(common);
      const RunResult r = run_simulation(cfg);
      write_run_outputs(cfg, r);
      std::cout << summary_json(r.summary);
    } else if (ev->parsed()) {
      ScenarioConfig cfg = resolve(common);
      if (!out_dir.empty()) cfg.eval_dir = out_dir;
      const EvalReport r = eval_retrieval(cfg);
      write_eval_outputs(cfg, r);
      std::cout << "recall@1 " << (r.recall_curve.empty() ? 0.0 : r.recall_curve.front()) << ", recall@top"
                << cfg.eval_top_percent << "% " << r.recall_top_percent << "; outputs in " << cfg.eval_dir.string()
                << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kData;
  } catch (const OutOfBounds& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
