#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvgeo/descriptor.hpp"

namespace cvgeo {

/// Squared Euclidean anchor-positive and anchor-negative distances.
struct TripletDistances {
  double d_pos = 0.0;
  double d_neg = 0.0;
};

struct QuadrupletDistances {
  double d_pos = 0.0;
  double d_neg = 0.0;
  double d_neg_star = 0.0;  // distance of a pair unrelated to the anchor
};

struct LossConfig {
  double alpha = 10.0;
  double margin_m = 0.5;
  double margin_m1 = 0.5;
  double margin_m2 = 0.5;

  void validate() const;
};

/// Loss value with its partial derivatives w.r.t. each input distance.
/// For the max-margin losses the derivatives are the subgradient that is 0 at
/// the hinge.
struct LossValue {
  double value = 0.0;
  double grad_d_pos = 0.0;
  double grad_d_neg = 0.0;
  double grad_d_neg_star = 0.0;
};

/// ln(1 + e^x), overflow-safe.
double softplus(double x);
/// 1 / (1 + e^-x), overflow-safe.
double sigmoid(double x);

LossValue max_margin_triplet(const TripletDistances& t, double margin);
LossValue soft_margin_triplet(const TripletDistances& t);
LossValue weighted_soft_margin(const TripletDistances& t, double alpha);
LossValue max_margin_quadruplet(const QuadrupletDistances& q, double margin1, double margin2);
LossValue weighted_quadruplet(const QuadrupletDistances& q, double alpha);

/// Batch item index: pair * 2 + view, with view 0 = ground, 1 = satellite.
struct TripletIndex {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  bool operator==(const TripletIndex&) const = default;
};

inline std::size_t batch_item(std::size_t pair, View v) {
  return pair * 2 + (v == View::satellite ? 1 : 0);
}
inline std::size_t pair_of(std::size_t item) { return item / 2; }
inline std::size_t partner_of(std::size_t item) { return item ^ 1u; }

/// Exhaustive mini-batch triplets: every ground and every satellite member of
/// each of the M pairs anchors against the M - 1 cross-view negatives, giving
/// M * 2(M - 1) triplets.
std::vector<TripletIndex> enumerate_triplets(std::size_t pairs);

/// Index of the negative closest (squared Euclidean) to the anchor; ties go to
/// the lowest index.
std::size_t hard_negative(const GlobalDescriptor& anchor,
                          std::span<const GlobalDescriptor> negatives);

struct DescriptorPair {
  GlobalDescriptor ground;
  GlobalDescriptor satellite;
};

enum class BatchMode { exhaustive, hard_mining };
enum class LossKind { triplet, quadruplet };

/// Mean weighted loss over the batch. Quadruplet mode pairs each triplet with
/// the cross-view distance between its negative and a third pair's opposite
/// member, so it needs at least three pairs.
double batch_loss(std::span<const DescriptorPair> batch, const LossConfig& config, BatchMode mode,
                  LossKind kind);

/// CSV (d,alpha,weighted,weighted_grad,max_margin) sampling each loss over
/// d = d_pos - d_neg for plotting.
std::string loss_surface_csv(std::span<const double> alphas, double margin, double d_min,
                             double d_max, std::size_t samples);

}  // namespace cvgeo
