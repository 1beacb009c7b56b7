#include "cvgeo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cvgeo/errors.hpp"

namespace cvgeo {
namespace {

void check_distance(double d) {
  if (!std::isfinite(d) || d < 0.0) throw InvalidArgument("loss distances must be finite and >= 0");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
}

const std::vector<double>& item(std::span<const DescriptorPair> batch, std::size_t idx) {
  const DescriptorPair& p = batch[pair_of(idx)];
  return (idx & 1u) ? p.satellite.values : p.ground.values;
}

struct BatchDistances {
  explicit BatchDistances(std::span<const DescriptorPair> batch) : n(batch.size() * 2), d(n * n) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a; b < n; ++b) {
        d[a * n + b] = d[b * n + a] = squared_distance(item(batch, a), item(batch, b));
      }
    }
  }
  double operator()(std::size_t a, std::size_t b) const { return d[a * n + b]; }
  std::size_t n;
  std::vector<double> d;
};

}  // namespace

void LossConfig::validate() const {
  check_alpha(alpha);
  if (margin_m < 0.0 || margin_m1 < 0.0 || margin_m2 < 0.0) {
    throw InvalidArgument("margins must be non-negative");
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossValue max_margin_triplet(const TripletDistances& t, double margin) {
  check_distance(t.d_pos);
  check_distance(t.d_neg);
  const double arg = margin + t.d_pos - t.d_neg;
  if (arg <= 0.0) return {};
  return {arg, 1.0, -1.0, 0.0};
}

LossValue soft_margin_triplet(const TripletDistances& t) {
  check_distance(t.d_pos);
  check_distance(t.d_neg);
  const double d = t.d_pos - t.d_neg;
  const double s = sigmoid(d);
  return {softplus(d), s, -s, 0.0};
}

LossValue weighted_soft_margin(const TripletDistances& t, double alpha) {
  check_distance(t.d_pos);
  check_distance(t.d_neg);
  check_alpha(alpha);
  const double x = alpha * (t.d_pos - t.d_neg);
  const double g = alpha * sigmoid(x);
  return {softplus(x), g, -g, 0.0};
}

LossValue max_margin_quadruplet(const QuadrupletDistances& q, double margin1, double margin2) {
  check_distance(q.d_neg_star);
  const LossValue first = max_margin_triplet({q.d_pos, q.d_neg}, margin1);
  const LossValue second = max_margin_triplet({q.d_pos, q.d_neg_star}, margin2);
  return {first.value + second.value, first.grad_d_pos + second.grad_d_pos, first.grad_d_neg,
          second.grad_d_neg};
}

LossValue weighted_quadruplet(const QuadrupletDistances& q, double alpha) {
  check_distance(q.d_neg_star);
  const LossValue first = weighted_soft_margin({q.d_pos, q.d_neg}, alpha);
  const LossValue second = weighted_soft_margin({q.d_pos, q.d_neg_star}, alpha);
  return {first.value + second.value, first.grad_d_pos + second.grad_d_pos, first.grad_d_neg,
          second.grad_d_neg};
}

std::vector<TripletIndex> enumerate_triplets(std::size_t pairs) {
  if (pairs < 2) throw InvalidArgument("exhaustive batches need at least 2 pairs");
  std::vector<TripletIndex> out;
  out.reserve(pairs * 2 * (pairs - 1));
  for (std::size_t i = 0; i < pairs; ++i) {
    for (View anchor_view : {View::ground, View::satellite}) {
      const std::size_t anchor = batch_item(i, anchor_view);
      const std::size_t positive = partner_of(anchor);
      const View neg_view = anchor_view == View::ground ? View::satellite : View::ground;
      for (std::size_t j = 0; j < pairs; ++j) {
        if (j == i) continue;
        out.push_back({anchor, positive, batch_item(j, neg_view)});
      }
    }
  }
  return out;
}

std::size_t hard_negative(const GlobalDescriptor& anchor,
                          std::span<const GlobalDescriptor> negatives) {
  if (negatives.empty()) throw InvalidArgument("hard_negative needs at least one negative");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const double d = squared_distance(anchor.values, negatives[i].values);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double batch_loss(std::span<const DescriptorPair> batch, const LossConfig& config, BatchMode mode,
                  LossKind kind) {
  config.validate();
  const std::size_t m = batch.size();
  if (m < 2) throw InvalidArgument("batch needs at least 2 pairs");
  if (kind == LossKind::quadruplet && m < 3) {
    throw InvalidArgument("quadruplet batches need at least 3 pairs");
  }
  const std::size_t dim = batch.front().ground.dim();
  for (const auto& p : batch) {
    if (p.ground.dim() != dim || p.satellite.dim() != dim) {
      throw InvalidArgument("batch descriptors must share one dimension");
    }
  }
  const BatchDistances dist(batch);

  // Quadruplet companion of negative n: the opposite-view member of every
  // third pair k (exhaustive) or the closest one (hard mining).
  auto quad_terms = [&](const TripletIndex& t, double& sum, std::size_t& count) {
    const double d_pos = dist(t.anchor, t.positive);
    const double d_neg = dist(t.anchor, t.negative);
    const std::size_t i = pair_of(t.anchor);
    const std::size_t j = pair_of(t.negative);
    double hardest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i || k == j) continue;
      const std::size_t other = partner_of(batch_item(k, (t.negative & 1u) ? View::satellite
                                                                           : View::ground));
      const double d_star = dist(t.negative, other);
      if (mode == BatchMode::exhaustive) {
        sum += weighted_quadruplet({d_pos, d_neg, d_star}, config.alpha).value;
        ++count;
      } else if (d_star < hardest) {
        hardest = d_star;
      }
    }
    if (mode == BatchMode::hard_mining) {
      sum += weighted_quadruplet({d_pos, d_neg, hardest}, config.alpha).value;
      ++count;
    }
  };

  double sum = 0.0;
  std::size_t count = 0;
  if (mode == BatchMode::exhaustive) {
    for (const TripletIndex& t : enumerate_triplets(m)) {
      if (kind == LossKind::triplet) {
        sum += weighted_soft_margin({dist(t.anchor, t.positive), dist(t.anchor, t.negative)},
                                    config.alpha)
                   .value;
        ++count;
      } else {
        quad_terms(t, sum, count);
      }
    }
  } else {
    for (std::size_t anchor = 0; anchor < 2 * m; ++anchor) {
      const std::size_t positive = partner_of(anchor);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        if (j == pair_of(anchor)) continue;
        const std::size_t cand = batch_item(j, (positive & 1u) ? View::satellite : View::ground);
        if (dist(anchor, cand) < best_d) {
          best_d = dist(anchor, cand);
          best = cand;
        }
      }
      const TripletIndex t{anchor, positive, best};
      if (kind == LossKind::triplet) {
        sum += weighted_soft_margin({dist(anchor, positive), best_d}, config.alpha).value;
        ++count;
      } else {
        quad_terms(t, sum, count);
      }
    }
  }
  return sum / static_cast<double>(count);
}

std::string loss_surface_csv(std::span<const double> alphas, double margin, double d_min,
                             double d_max, std::size_t samples) {
  if (samples < 2 || !(d_max > d_min)) throw InvalidArgument("loss surface needs a valid range");
  std::ostringstream os;
  os.precision(17);
  os << "d,alpha,weighted,weighted_grad,max_margin\n";
  for (double alpha : alphas) {
    for (std::size_t s = 0; s < samples; ++s) {
      const double d = d_min + (d_max - d_min) * static_cast<double>(s) /
                                   static_cast<double>(samples - 1);
      // Split d across the two distances so both stay non-negative.
      const TripletDistances t{std::max(d, 0.0), std::max(-d, 0.0)};
      const LossValue w = weighted_soft_margin(t, alpha);
      os << d << ',' << alpha << ',' << w.value << ',' << w.grad_d_pos << ','
         << max_margin_triplet(t, margin).value << '\n';
    }
  }
  return os.str();
}

}  // namespace cvgeo
