#include "cvgeo/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvgeo/errors.hpp"

namespace cvgeo {

ParticleSet init_particles(const Pose& init_pose, const InitSpread& spread, std::size_t m,
                           SeededRng& rng) {
  if (m == 0) throw InvalidArgument("particle count must be >= 1");
  if (spread.sigma_xy < 0.0 || spread.sigma_theta < 0.0) {
    throw InvalidArgument("initial spread must be non-negative");
  }
  ParticleSet set;
  set.particles.resize(m);
  const double w = 1.0 / static_cast<double>(m);
  for (Particle& p : set.particles) {
    const double nx = rng.gaussian();
    const double ny = rng.gaussian();
    const double nt = rng.gaussian();
    p.state = {init_pose.x + spread.sigma_xy * nx, init_pose.y + spread.sigma_xy * ny,
               wrap_angle(init_pose.theta + spread.sigma_theta * nt)};
    p.weight = w;
  }
  return set;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t m,
                                            double u) {
  if (weights.empty() || m == 0) throw InvalidArgument("resampling needs particles");
  if (!(u >= 0.0 && u < 1.0)) throw InvalidArgument("systematic offset must lie in [0, 1)");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidArgument("weights must have a positive total");
  }
  // Work in "expected copies" units: position of slot j is u + j, the
  // cumulative bound of particle i is M * (w_0 + ... + w_i) / total.
  const double scale = static_cast<double>(m) / total;
  std::vector<std::size_t> out;
  out.reserve(m);
  std::size_t i = 0;
  double cumulative = weights[0] * scale;
  for (std::size_t j = 0; j < m; ++j) {
    const double pos = u + static_cast<double>(j);
    while (pos >= cumulative && i + 1 < weights.size()) {
      ++i;
      cumulative += weights[i] * scale;
    }
    out.push_back(i);
  }
  return out;
}

ParticleSet resample_systematic(const ParticleSet& weighted, double u) {
  std::vector<double> w;
  w.reserve(weighted.size());
  for (const Particle& p : weighted.particles) w.push_back(p.weight);
  const std::size_t m = weighted.size();
  const std::vector<std::size_t> idx = systematic_indices(w, m, u);
  ParticleSet out;
  out.step = weighted.step;
  out.uniform_weights = true;
  out.particles.reserve(m);
  const double uniform = 1.0 / static_cast<double>(m);
  for (std::size_t i : idx) out.particles.push_back({weighted.particles[i].state, uniform});
  return out;
}

ParticleSet resample_systematic(const ParticleSet& weighted, SeededRng& rng) {
  return resample_systematic(weighted, rng.uniform());
}

StepStatus normalize_weights(ParticleSet& set, double degenerate_threshold) {
  StepStatus status;
  const std::size_t m = set.size();
  if (m == 0) throw InvalidArgument("empty particle set");
  double total = 0.0;
  double peak = 0.0;
  bool finite = true;
  for (const Particle& p : set.particles) {
    if (!std::isfinite(p.weight) || p.weight < 0.0) finite = false;
    total += p.weight;
    peak = std::max(peak, p.weight);
  }
  if (!finite || !(total > 0.0) || !std::isfinite(total) || peak <= degenerate_threshold) {
    status.degenerate = true;
    for (Particle& p : set.particles) p.weight = 1.0;
    total = static_cast<double>(m);
  }
  double sum_sq = 0.0;
  for (Particle& p : set.particles) {
    p.weight /= total;
    sum_sq += p.weight * p.weight;
  }
  set.uniform_weights = status.degenerate;
  status.ess = 1.0 / sum_sq;
  return status;
}

StepStatus finish_step(ParticleSet& set, SeededRng& rng, const FilterOptions& options) {
  StepStatus status = normalize_weights(set, options.degenerate_threshold);
  // The draw is taken unconditionally so the stream advances identically
  // whether or not the ESS gate fires.
  const double u = rng.uniform();
  if (options.ess_fraction <= 0.0 ||
      status.ess < options.ess_fraction * static_cast<double>(set.size())) {
    set = resample_systematic(set, u);
    status.resampled = true;
  }
  return status;
}

std::pair<ParticleSet, StepStatus> pf_step(const ParticleSet& prev, const ControlAction& u,
                                           const ProbabilityField& field,
                                           const MotionNoise& noise, SeededRng& rng,
                                           const FilterOptions& options) {
  const SeededRng motion_rng(rng.next_u64());
  return particle_filter_step(
      prev,
      [&](std::span<Particle> ps) { kernels::propagate(options.exec, ps, u, noise, motion_rng); },
      [&](std::span<Particle> ps) { kernels::weigh(options.exec, ps, field, options.mode); }, rng,
      options);
}

PoseEstimate estimate_pose(const ParticleSet& set, double fallback_heading) {
  if (set.particles.empty()) throw InvalidArgument("cannot estimate pose of empty set");
  double total = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double ss = 0.0;
  double sc = 0.0;
  for (const Particle& p : set.particles) {
    total += p.weight;
  }
  const bool equal = !(total > 0.0);
  const double norm = equal ? static_cast<double>(set.size()) : total;
  for (const Particle& p : set.particles) {
    const double w = equal ? 1.0 : p.weight;
    sx += w * p.state.x;
    sy += w * p.state.y;
    ss += w * std::sin(p.state.theta);
    sc += w * std::cos(p.state.theta);
  }
  PoseEstimate est;
  est.pose.x = sx / norm;
  est.pose.y = sy / norm;
  if (std::hypot(ss, sc) <= 1e-12 * norm) {
    est.heading_defined = false;
    est.pose.theta = wrap_angle(fallback_heading);
  } else {
    est.pose.theta = wrap_angle(std::atan2(ss, sc));
  }
  return est;
}

LocalizeResult localize_step(const FrameInputs& frame, const ParticleSet& prev_set,
                             const LocalizationContext& ctx, SeededRng& rng,
                             double fallback_heading) {
  if (ctx.db_map == nullptr) throw InvalidArgument("localization context has no map");
  ProbabilityField field = ctx.use_measurement
                               ? location_probabilities(*ctx.db_map, frame.ground_descriptor, ctx.field)
                               : uniform_field(*ctx.db_map, ctx.field.floor);
  const ControlAction u = simulate_odometry(frame.odom_prev, frame.odom_curr);
  auto [set, status] = pf_step(prev_set, u, field, ctx.noise, rng, ctx.filter);
  const PoseEstimate est = estimate_pose(set, fallback_heading);
  return {est, std::move(set), status, std::move(field)};
}

}  // namespace cvgeo
