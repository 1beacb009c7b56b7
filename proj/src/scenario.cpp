#include "cvgeo/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"

namespace cvgeo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Thrown by the value parsers; rewrapped with the file position.
struct BadValue {
  std::string what;
};

double to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw BadValue{"expected a number, got '" + std::string(s) + "'"};
  }
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(s) + "'"};
  }
  return v;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw BadValue{"expected a boolean, got '" + std::string(s) + "'"};
}

std::vector<double> to_list(std::string_view s, std::size_t expect = 0) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(to_double(part));
  if (expect != 0 && out.size() != expect) {
    throw BadValue{"expected " + std::to_string(expect) + " comma-separated numbers"};
  }
  return out;
}

struct Key {
  const char* help;
  std::function<void(ScenarioConfig&, std::string_view)> set;
};

void set_noise(MotionNoise& n, std::string_view field, std::string_view v) {
  if (field == "sigma_trans") n.sigma_trans = to_double(v);
  else if (field == "sigma_rot_deg") n.sigma_rot = to_double(v) * kDeg;
  else if (field == "trans_per_meter") n.trans_per_meter = to_double(v);
  else n.rot_per_radian = to_double(v);
}

const std::map<std::string, Key, std::less<>>& keys() {
  static const std::map<std::string, Key, std::less<>> table = [] {
    std::map<std::string, Key, std::less<>> k;
    k["map.origin"] = {"lat,lon of the south-west lattice corner (degrees)",
                       [](ScenarioConfig& c, std::string_view v) {
                         const auto l = to_list(v, 2);
                         c.world.origin = {l[0], l[1]};
                       }};
    k["map.extent"] = {"x,y size of the map in meters",
                       [](ScenarioConfig& c, std::string_view v) {
                         const auto l = to_list(v, 2);
                         c.world.extent_x = l[0];
                         c.world.extent_y = l[1];
                       }};
    k["map.interval"] = {"cell interval in meters",
                         [](ScenarioConfig& c, std::string_view v) { c.world.cell_interval = to_double(v); }};
    k["world.seed"] = {"seed of the synthetic appearance field",
                       [](ScenarioConfig& c, std::string_view v) { c.world.seed = to_u64(v); }};
    k["world.kind"] = {"smooth | uniform", [](ScenarioConfig& c, std::string_view v) {
                         v = trim(v);
                         if (v == "smooth") c.world.kind = WorldKind::smooth;
                         else if (v == "uniform") c.world.kind = WorldKind::uniform;
                         else throw BadValue{"world.kind must be smooth or uniform"};
                       }};
    k["world.sharpness"] = {"mean descriptor distance between adjacent cells (0 = raw pipeline)",
                            [](ScenarioConfig& c, std::string_view v) { c.sharpness = to_double(v); }};
    k["world.feature_dim"] = {"local feature dimension D",
                              [](ScenarioConfig& c, std::string_view v) { c.world.feature_dim = to_u64(v); }};
    k["world.features_per_view"] = {"local features per image N", [](ScenarioConfig& c, std::string_view v) {
                                      c.world.features_per_view = to_u64(v);
                                    }};
    k["world.fourier_terms"] = {"random cosines per feature channel", [](ScenarioConfig& c, std::string_view v) {
                                  c.world.fourier_terms = to_u64(v);
                                }};
    k["world.correlation_length"] = {"typical wavelength of the appearance field (m)",
                                     [](ScenarioConfig& c, std::string_view v) {
                                       c.world.correlation_length = to_double(v);
                                     }};
    k["world.patch_radius"] = {"radius of the ring the local features sample (m)",
                               [](ScenarioConfig& c, std::string_view v) { c.world.patch_radius = to_double(v); }};
    k["world.ground_noise"] = {"std of the per-entry ground-view feature noise",
                               [](ScenarioConfig& c, std::string_view v) { c.world.ground_noise = to_double(v); }};
    k["world.corridor"] = {"road polyline 'x y; x y; ...' in local meters",
                           [](ScenarioConfig& c, std::string_view v) {
                             c.world.corridor.clear();
                             for (auto pt : split(v, ';')) {
                               if (pt.empty()) continue;
                               const auto xy = split(pt, ' ');
                               std::vector<double> nums;
                               for (auto s : xy) {
                                 if (!s.empty()) nums.push_back(to_double(s));
                               }
                               if (nums.size() != 2) throw BadValue{"corridor points are 'x y'"};
                               c.world.corridor.push_back({nums[0], nums[1]});
                             }
                           }};
    k["world.corridor_width"] = {"corridor half-width (m)", [](ScenarioConfig& c, std::string_view v) {
                                   c.world.corridor_width = to_double(v);
                                 }};
    k["world.corridor_strength"] = {"off-road descriptor push (0 disables)",
                                    [](ScenarioConfig& c, std::string_view v) {
                                      c.world.corridor_strength = to_double(v);
                                    }};
    k["world.alias"] = {"sx,sy,tx,ty,r: disc at t looks like the disc at s (repeatable)",
                        [](ScenarioConfig& c, std::string_view v) {
                          const auto l = to_list(v, 5);
                          c.world.aliases.push_back({{l[0], l[1]}, {l[2], l[3]}, l[4]});
                        }};
    k["pipeline.variant"] = {"1 (CVM-Net-I) | 2 (CVM-Net-II)", [](ScenarioConfig& c, std::string_view v) {
                               const auto n = to_u64(v);
                               if (n != 1 && n != 2) throw BadValue{"pipeline.variant must be 1 or 2"};
                               c.variant = static_cast<PipelineVariant>(n);
                             }};
    k["pipeline.clusters"] = {"NetVLAD clusters K",
                              [](ScenarioConfig& c, std::string_view v) { c.clusters = to_u64(v); }};
    k["pipeline.output_dim"] = {"global descriptor size R",
                                [](ScenarioConfig& c, std::string_view v) { c.output_dim = to_u64(v); }};
    k["pipeline.seed"] = {"seed of the generated parameters",
                          [](ScenarioConfig& c, std::string_view v) { c.pipeline_seed = to_u64(v); }};
    k["pipeline.file"] = {"parameter file to load instead of generating one",
                          [](ScenarioConfig& c, std::string_view v) { c.pipeline_file = std::string(trim(v)); }};
    k["pipeline.normalize"] = {"L2-normalize descriptors (true/false)",
                               [](ScenarioConfig& c, std::string_view v) { c.normalize = to_bool(v); }};
    k["trajectory.file"] = {"trajectory CSV (t,x,y,theta); empty uses the loop generator",
                            [](ScenarioConfig& c, std::string_view v) { c.trajectory_file = std::string(trim(v)); }};
    k["trajectory.loop_length"] = {"length of the generated loop (m)",
                                   [](ScenarioConfig& c, std::string_view v) { c.loop_length = to_double(v); }};
    k["trajectory.steps"] = {"steps of the generated loop",
                             [](ScenarioConfig& c, std::string_view v) { c.loop_steps = to_u64(v); }};
    for (const char* field : {"sigma_trans", "sigma_rot_deg", "trans_per_meter", "rot_per_radian"}) {
      const std::string f = field;
      k["motion." + f] = {"filter motion noise", [f](ScenarioConfig& c, std::string_view v) {
                            set_noise(c.motion_noise, f, v);
                          }};
      k["odometry." + f] = {"simulated odometry noise", [f](ScenarioConfig& c, std::string_view v) {
                              set_noise(c.odometry_noise, f, v);
                            }};
    }
    k["filter.particles"] = {"particle count M", [](ScenarioConfig& c, std::string_view v) {
                               c.particles = to_u64(v);
                             }};
    k["filter.init_sigma_xy"] = {"initial position spread (m)",
                                 [](ScenarioConfig& c, std::string_view v) { c.init.sigma_xy = to_double(v); }};
    k["filter.init_sigma_theta_deg"] = {"initial heading spread (deg)", [](ScenarioConfig& c, std::string_view v) {
                                          c.init.sigma_theta = to_double(v) * kDeg;
                                        }};
    k["filter.mode"] = {"corner_sum | bilinear", [](ScenarioConfig& c, std::string_view v) {
                          try {
                            c.mode = parse_measurement_mode(std::string(trim(v)));
                          } catch (const InvalidArgument& e) {
                            throw BadValue{e.what()};
                          }
                        }};
    k["filter.floor"] = {"likelihood of off-map particles",
                         [](ScenarioConfig& c, std::string_view v) { c.floor = to_double(v); }};
    k["filter.ess_fraction"] = {"resample only when ESS < fraction*M (0 = every step)",
                                [](ScenarioConfig& c, std::string_view v) { c.ess_fraction = to_double(v); }};
    k["filter.measurement"] = {"false runs pure dead reckoning",
                               [](ScenarioConfig& c, std::string_view v) { c.use_measurement = to_bool(v); }};
    k["filter.exec"] = {"serial | parallel", [](ScenarioConfig& c, std::string_view v) {
                          v = trim(v);
                          if (v == "serial") c.exec = kernels::Exec::serial;
                          else if (v == "parallel") c.exec = kernels::Exec::parallel;
                          else throw BadValue{"filter.exec must be serial or parallel"};
                        }};
    k["seed"] = {"master seed of the run", [](ScenarioConfig& c, std::string_view v) {
                   c.master_seed = to_u64(v);
                 }};
    k["output.log"] = {"per-step log path (empty = none)",
                       [](ScenarioConfig& c, std::string_view v) { c.log_path = std::string(trim(v)); }};
    k["output.log_format"] = {"csv | jsonl", [](ScenarioConfig& c, std::string_view v) {
                                v = trim(v);
                                if (v == "csv") c.log_format = LogFormat::csv;
                                else if (v == "jsonl") c.log_format = LogFormat::jsonl;
                                else throw BadValue{"output.log_format must be csv or jsonl"};
                              }};
    k["output.summary"] = {"run summary JSON path",
                           [](ScenarioConfig& c, std::string_view v) { c.summary_path = std::string(trim(v)); }};
    k["output.heatmap_every"] = {"write a heatmap every N steps (0 = never)",
                                 [](ScenarioConfig& c, std::string_view v) { c.heatmap_every = to_u64(v); }};
    k["output.heatmap_dir"] = {"heatmap directory",
                               [](ScenarioConfig& c, std::string_view v) { c.heatmap_dir = std::string(trim(v)); }};
    k["output.heatmap_contrast"] = {"linear | exponential", [](ScenarioConfig& c, std::string_view v) {
                                      v = trim(v);
                                      if (v == "linear") c.heatmap_contrast = HeatmapContrast::linear;
                                      else if (v == "exponential") c.heatmap_contrast = HeatmapContrast::exponential;
                                      else throw BadValue{"output.heatmap_contrast must be linear or exponential"};
                                    }};
    k["eval.database"] = {"database file to evaluate (empty = built from the world)",
                          [](ScenarioConfig& c, std::string_view v) { c.database_file = std::string(trim(v)); }};
    k["eval.queries"] = {"number of ground queries",
                         [](ScenarioConfig& c, std::string_view v) { c.eval_queries = to_u64(v); }};
    k["eval.k_max"] = {"largest K of the recall curve",
                       [](ScenarioConfig& c, std::string_view v) { c.eval_k_max = to_u64(v); }};
    k["eval.top_percent"] = {"percent for the top-% recall",
                             [](ScenarioConfig& c, std::string_view v) { c.eval_top_percent = to_double(v); }};
    k["eval.thresholds"] = {"distance thresholds in meters, comma-separated",
                            [](ScenarioConfig& c, std::string_view v) { c.eval_thresholds = to_list(v); }};
    k["eval.distractors"] = {"far-field distractors added for the second curve",
                             [](ScenarioConfig& c, std::string_view v) { c.eval_distractors = to_u64(v); }};
    k["eval.dir"] = {"output directory of eval CSVs",
                     [](ScenarioConfig& c, std::string_view v) { c.eval_dir = std::string(trim(v)); }};
    k["eval.loss_alphas"] = {"alphas of the loss-surface dump",
                             [](ScenarioConfig& c, std::string_view v) { c.loss_alphas = to_list(v); }};
    k["eval.loss_margin"] = {"margin of the loss-surface dump",
                             [](ScenarioConfig& c, std::string_view v) { c.loss_margin = to_double(v); }};
    k["eval.loss_range"] = {"dmin,dmax of the loss-surface dump", [](ScenarioConfig& c, std::string_view v) {
                              const auto l = to_list(v, 2);
                              c.loss_d_min = l[0];
                              c.loss_d_max = l[1];
                            }};
    k["eval.loss_samples"] = {"samples of the loss-surface dump",
                              [](ScenarioConfig& c, std::string_view v) { c.loss_samples = to_u64(v); }};
    return k;
  }();
  return table;
}

void check_noise(const MotionNoise& n, const char* what) {
  if (n.sigma_trans < 0 || n.sigma_rot < 0 || n.trans_per_meter < 0 || n.rot_per_radian < 0) {
    throw InvalidArgument(std::string(what) + " noise must be non-negative");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  world.validate();
  if (!(world.cell_interval > 0.0) || !(world.extent_x > 0.0) || !(world.extent_y > 0.0)) {
    throw InvalidArgument("map extent and interval must be positive");
  }
  if (sharpness < 0.0) throw InvalidArgument("world.sharpness must be >= 0");
  if (clusters == 0 || output_dim == 0) throw InvalidArgument("pipeline sizes must be positive");
  if (trajectory_file.empty() && (loop_steps == 0 || !(loop_length > 0.0))) {
    throw InvalidArgument("loop trajectory needs positive length and steps");
  }
  check_noise(motion_noise, "motion");
  check_noise(odometry_noise, "odometry");
  if (particles == 0) throw InvalidArgument("filter.particles must be >= 1");
  if (init.sigma_xy < 0 || init.sigma_theta < 0) throw InvalidArgument("initial spread must be >= 0");
  if (!(floor >= 0.0)) throw InvalidArgument("filter.floor must be >= 0");
  if (ess_fraction < 0.0 || ess_fraction > 1.0) throw InvalidArgument("filter.ess_fraction must be in [0, 1]");
  if (eval_k_max == 0) throw InvalidArgument("eval.k_max must be >= 1");
  if (!(eval_top_percent > 0.0) || eval_top_percent > 100.0) {
    throw InvalidArgument("eval.top_percent must be in (0, 100]");
  }
  if (loss_samples < 2 || !(loss_d_max > loss_d_min)) throw InvalidArgument("bad loss-surface range");
}

void apply_setting(ScenarioConfig& cfg, std::string_view key, std::string_view value,
                   const std::string& source, std::size_t line) {
  const auto& table = keys();
  const auto it = table.find(trim(key));
  if (it == table.end()) throw ConfigError(source, line, "unknown key '" + std::string(trim(key)) + "'");
  try {
    it->second.set(cfg, value);
  } catch (const BadValue& e) {
    throw ConfigError(source, line, it->first + ": " + e.what);
  }
}

void apply_override(ScenarioConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("<override>", 0, "expected key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ScenarioConfig parse_scenario(std::string_view text, const std::string& source, ScenarioConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    ++line_no;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1), source, line_no);
  }
  return base;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  return parse_scenario(text, path.string());
}

std::string scenario_key_help() {
  std::string out;
  for (const auto& [name, key] : keys()) {
    out += name;
    out.append(name.size() < 30 ? 30 - name.size() : 1, ' ');
    out += key.help;
    out += '\n';
  }
  return out;
}

std::vector<Pose> load_trajectory_csv(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::string line;
  std::vector<Pose> out;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto cols = split(body, ',');
    if (!header) {
      if (cols.size() != 4 || cols[0] != "t" || cols[1] != "x" || cols[2] != "y" || cols[3] != "theta") {
        throw ConfigError(path.string(), line_no, "trajectory header must be t,x,y,theta");
      }
      header = true;
      continue;
    }
    if (cols.size() != 4) throw ConfigError(path.string(), line_no, "expected 4 columns");
    try {
      out.push_back({to_double(cols[1]), to_double(cols[2]), wrap_angle(to_double(cols[3]))});
    } catch (const BadValue& e) {
      throw ConfigError(path.string(), line_no, e.what);
    }
  }
  if (out.size() < 2) throw ConfigError(path.string(), line_no, "trajectory needs at least 2 poses");
  return out;
}

std::string trajectory_csv(const std::vector<Pose>& poses) {
  std::string out = "t,x,y,theta\n";
  char buf[64];
  auto put = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
  };
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    put(poses[i].x);
    out += ',';
    put(poses[i].y);
    out += ',';
    put(poses[i].theta);
    out += '\n';
  }
  return out;
}

std::vector<Pose> loop_trajectory(const WorldConfig& world, double length, std::size_t steps) {
  if (steps < 3 || !(length > 0.0)) throw InvalidArgument("loop needs length > 0 and >= 3 steps");
  const double r = length / (2.0 * std::numbers::pi);
  const double cx = world.extent_x / 2.0;
  const double cy = world.extent_y / 2.0;
  if (r > std::min(cx, cy)) throw InvalidArgument("loop does not fit inside the map");
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(steps);
  std::vector<Pose> out;
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double phi = dphi * static_cast<double>(k % steps);
    // chord from the previous vertex points along phi - dphi/2 + pi/2
    out.push_back({cx + r * std::cos(phi), cy + r * std::sin(phi),
                   wrap_angle(phi - dphi / 2.0 + std::numbers::pi / 2.0)});
  }
  return out;
}

}  // namespace cvgeo
