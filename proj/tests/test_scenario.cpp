#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"
#include "cvgeo/scenario.hpp"

using namespace cvgeo;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cvgeo_scenario_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Scenario, ParsesEveryKindOfKey) {
  const std::string text = R"(# a full scenario
map.origin = 1.30, 103.80
map.extent = 300, 200
map.interval = 4
world.seed = 9
world.kind = smooth
world.sharpness = 1.5     # trailing comment
world.feature_dim = 8
world.features_per_view = 12
world.fourier_terms = 4
world.correlation_length = 30
world.patch_radius = 6
world.ground_noise = 0.05
world.corridor = 0 100; 300 100
world.corridor_width = 12
world.corridor_strength = 0.5
world.alias = 50,50,150,150,20
world.alias = 60,60,200,60,10

pipeline.variant = 2
pipeline.clusters = 4
pipeline.output_dim = 16
pipeline.seed = 3
pipeline.normalize = true
trajectory.loop_length = 500
trajectory.steps = 50
motion.sigma_trans = 0.2
motion.sigma_rot_deg = 1.0
odometry.trans_per_meter = 0.03
odometry.rot_per_radian = 0.02
filter.particles = 250
filter.init_sigma_xy = 3
filter.init_sigma_theta_deg = 2
filter.mode = bilinear
filter.floor = 1e-9
filter.ess_fraction = 0.5
filter.measurement = false
filter.exec = serial
seed = 42
output.log = run.jsonl
output.log_format = jsonl
output.summary = s.json
output.heatmap_every = 10
output.heatmap_dir = hm
output.heatmap_contrast = linear
eval.queries = 100
eval.k_max = 20
eval.top_percent = 2
eval.thresholds = 5, 50
eval.distractors = 30
eval.dir = out
eval.loss_alphas = 2, 4
eval.loss_margin = 0.25
eval.loss_range = -1, 3
eval.loss_samples = 11
)";
  const ScenarioConfig c = parse_scenario(text, "full.cfg");
  EXPECT_DOUBLE_EQ(c.world.origin.lat, 1.30);
  EXPECT_DOUBLE_EQ(c.world.extent_x, 300);
  EXPECT_DOUBLE_EQ(c.world.extent_y, 200);
  EXPECT_DOUBLE_EQ(c.world.cell_interval, 4);
  EXPECT_EQ(c.world.seed, 9u);
  EXPECT_DOUBLE_EQ(c.sharpness, 1.5);
  EXPECT_EQ(c.world.feature_dim, 8u);
  EXPECT_EQ(c.world.features_per_view, 12u);
  EXPECT_EQ(c.world.fourier_terms, 4u);
  ASSERT_EQ(c.world.corridor.size(), 2u);
  EXPECT_DOUBLE_EQ(c.world.corridor[1].x, 300);
  ASSERT_EQ(c.world.aliases.size(), 2u);
  EXPECT_DOUBLE_EQ(c.world.aliases[1].radius, 10);
  EXPECT_EQ(c.variant, PipelineVariant::CvmNetII);
  EXPECT_EQ(c.clusters, 4u);
  EXPECT_TRUE(c.normalize);
  EXPECT_EQ(c.loop_steps, 50u);
  EXPECT_DOUBLE_EQ(c.motion_noise.sigma_trans, 0.2);
  EXPECT_NEAR(c.motion_noise.sigma_rot, std::numbers::pi / 180.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.odometry_noise.trans_per_meter, 0.03);
  EXPECT_EQ(c.particles, 250u);
  EXPECT_NEAR(c.init.sigma_theta, 2 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(c.mode, MeasurementMode::bilinear);
  EXPECT_DOUBLE_EQ(c.floor, 1e-9);
  EXPECT_FALSE(c.use_measurement);
  EXPECT_EQ(c.exec, kernels::Exec::serial);
  EXPECT_EQ(c.master_seed, 42u);
  EXPECT_EQ(c.log_format, LogFormat::jsonl);
  EXPECT_EQ(c.heatmap_every, 10u);
  EXPECT_EQ(c.heatmap_contrast, HeatmapContrast::linear);
  EXPECT_EQ(c.eval_thresholds, (std::vector<double>{5, 50}));
  EXPECT_EQ(c.loss_alphas, (std::vector<double>{2, 4}));
  EXPECT_DOUBLE_EQ(c.loss_d_min, -1);
  EXPECT_DOUBLE_EQ(c.loss_d_max, 3);
  EXPECT_EQ(c.eval_dir, "out");
  EXPECT_NO_THROW(c.validate());
}

TEST(Scenario, UnknownKeyReportsLine) {
  try {
    parse_scenario("seed = 1\n\n# comment\nfilter.partcles = 10\n", "bad.cfg");
    FAIL() << "no throw";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.path(), "bad.cfg");
    EXPECT_NE(std::string(e.what()).find("filter.partcles"), std::string::npos);
  }
}

TEST(Scenario, BadValuesRejected) {
  EXPECT_THROW(parse_scenario("filter.particles = many\n", "x"), ConfigError);
  EXPECT_THROW(parse_scenario("filter.particles = -3\n", "x"), ConfigError);
  EXPECT_THROW(parse_scenario("filter.mode = nearest\n", "x"), ConfigError);
  EXPECT_THROW(parse_scenario("map.extent = 100\n", "x"), ConfigError);
  EXPECT_THROW(parse_scenario("filter.measurement = maybe\n", "x"), ConfigError);
  EXPECT_THROW(parse_scenario("just some words\n", "x"), ConfigError);
  try {
    parse_scenario("seed = 1\nfilter.floor = nan\n", "x");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Scenario, ValidateCatchesRanges) {
  ScenarioConfig c;
  c.particles = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.ess_fraction = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.eval_top_percent = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Scenario, OverridesApplyOnTop) {
  ScenarioConfig c = parse_scenario("seed = 5\n", "x");
  apply_override(c, "seed=6");
  apply_override(c, "filter.particles = 77");
  EXPECT_EQ(c.master_seed, 6u);
  EXPECT_EQ(c.particles, 77u);
  EXPECT_THROW(apply_override(c, "seed"), ConfigError);
  EXPECT_THROW(apply_override(c, "nope=1"), ConfigError);
}

TEST(Scenario, KeyHelpListsKeys) {
  const std::string help = scenario_key_help();
  for (const char* k : {"map.extent", "filter.mode", "output.log", "eval.thresholds", "seed"}) {
    EXPECT_NE(help.find(k), std::string::npos) << k;
  }
}

TEST(Scenario, LoadsFromFile) {
  const auto p = temp_path("s.cfg");
  io::write_text_file(p, "filter.particles = 12\n");
  EXPECT_EQ(load_scenario(p).particles, 12u);
  EXPECT_THROW(load_scenario(temp_path("missing.cfg")), IoError);
}

TEST(Trajectory, CsvRoundTrip) {
  const std::vector<Pose> poses{{1, 2, 0.5}, {3.25, 4, -1.0}, {5, 6, 3.0}};
  const auto p = temp_path("t.csv");
  io::write_text_file(p, trajectory_csv(poses));
  const auto back = load_trajectory_csv(p);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].x, poses[i].x);
    EXPECT_EQ(back[i].y, poses[i].y);
    EXPECT_EQ(back[i].theta, poses[i].theta);
  }
}

TEST(Trajectory, CsvErrorsCarryLine) {
  const auto p = temp_path("bad.csv");
  io::write_text_file(p, "t,x,y,theta\n0,1,2,0\n1,1,oops,0\n");
  try {
    load_trajectory_csv(p);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  io::write_text_file(p, "time,x,y\n0,1,2\n");
  EXPECT_THROW(load_trajectory_csv(p), ConfigError);
  io::write_text_file(p, "t,x,y,theta\n0,1,2,0\n");
  EXPECT_THROW(load_trajectory_csv(p), ConfigError);
}

TEST(Trajectory, LoopIsClosedWithEvenSteps) {
  WorldConfig w;
  const auto loop = loop_trajectory(w, 1000, 200);
  ASSERT_EQ(loop.size(), 201u);
  EXPECT_NEAR(loop.front().x, loop.back().x, 1e-9);
  EXPECT_NEAR(loop.front().y, loop.back().y, 1e-9);
  for (std::size_t k = 1; k < loop.size(); ++k) {
    const double dx = loop[k].x - loop[k - 1].x, dy = loop[k].y - loop[k - 1].y;
    EXPECT_NEAR(std::hypot(dx, dy), 5.0, 0.01);
    EXPECT_NEAR(std::remainder(std::atan2(dy, dx) - loop[k].theta, 2 * std::numbers::pi), 0.0, 1e-9);
    EXPECT_GT(loop[k].x, 0);
    EXPECT_LT(loop[k].x, w.extent_x);
  }
  EXPECT_THROW(loop_trajectory(w, 5000, 200), InvalidArgument);
  EXPECT_THROW(loop_trajectory(w, 100, 2), InvalidArgument);
}
