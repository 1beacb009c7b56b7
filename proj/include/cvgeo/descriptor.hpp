#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace cvgeo {

class SeededRng;

enum class View : std::uint8_t { satellite, ground };

const char* to_string(View v);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// y = W x + b.
struct AffineMap {
  Matrix weight;  // out x in
  std::vector<double> bias;

  static AffineMap identity(std::size_t n);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  std::vector<double> apply(std::span<const double> x) const;
  void validate(const char* what) const;

  bool operator==(const AffineMap&) const = default;
};

/// Local feature vectors of one image (the CNN output, supplied by a feature
/// source since no backbone is built here).
struct LocalFeatureSet {
  std::vector<std::vector<double>> features;  // N x D
  View view = View::ground;

  std::size_t count() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
  void validate() const;
};

/// Fixed-length image descriptor used for retrieval and measurement.
struct GlobalDescriptor {
  std::vector<double> values;
  View view = View::ground;

  std::size_t dim() const { return values.size(); }
  bool operator==(const GlobalDescriptor&) const = default;
};

/// NetVLAD parameters: K centroids plus a linear soft-assignment layer.
struct VladParams {
  Matrix centroids;       // K x D
  Matrix assign_weights;  // K x D
  std::vector<double> assign_bias;  // K

  std::size_t clusters() const { return centroids.rows(); }
  std::size_t feature_dim() const { return centroids.cols(); }
  void validate() const;

  bool operator==(const VladParams&) const = default;
};

/// Feature transform of the shared-weight pipeline: a per-view layer followed
/// by a layer common to both views. Both maps are D -> D.
struct TransformParams {
  AffineMap satellite_independent;
  AffineMap ground_independent;
  AffineMap shared;

  const AffineMap& independent(View v) const {
    return v == View::satellite ? satellite_independent : ground_independent;
  }
  bool operator==(const TransformParams&) const = default;
};

/// Fully connected K*D -> R dimension reduction.
struct ReductionParams {
  AffineMap projection;

  static ReductionParams identity(std::size_t n) { return {AffineMap::identity(n)}; }
  bool operator==(const ReductionParams&) const = default;
};

enum class PipelineVariant : std::uint8_t { CvmNetI = 1, CvmNetII = 2 };

/// Two independent aggregators, one per view.
struct CvmNetIParams {
  VladParams satellite_vlad;
  VladParams ground_vlad;
  ReductionParams satellite_reduction;
  ReductionParams ground_reduction;
  bool operator==(const CvmNetIParams&) const = default;
};

/// Per-view + shared feature transform, then one shared aggregator.
struct CvmNetIIParams {
  TransformParams transforms;
  VladParams shared_vlad;
  ReductionParams shared_reduction;
  bool operator==(const CvmNetIIParams&) const = default;
};

struct PipelineConfig {
  std::variant<CvmNetIParams, CvmNetIIParams> net;
  bool normalize_output = true;

  PipelineVariant variant() const;
  std::size_t clusters() const;
  std::size_t feature_dim() const;
  std::size_t output_dim() const;
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Softmax over k of (w_k . u + b_k).
std::vector<double> soft_assign(const VladParams& params, std::span<const double> u);

/// Concatenated residual sums: block k = sum_j a_k(u_j) (u_j - c_k).
GlobalDescriptor vlad_aggregate(const VladParams& params, const LocalFeatureSet& feats);

/// Runs the branch selected by feats.view through the configured pipeline.
GlobalDescriptor forward(const PipelineConfig& config, const LocalFeatureSet& feats);

/// Scales to unit L2 norm; a zero vector is returned unchanged.
void l2_normalize(std::vector<double>& v);

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Uniform(-0.1, 0.1) initialization, quantized to float32 so that parameter
/// files round-trip exactly.
VladParams random_vlad(std::size_t clusters, std::size_t dim, SeededRng& rng);
AffineMap random_affine(std::size_t out, std::size_t in, SeededRng& rng);
PipelineConfig random_pipeline(PipelineVariant variant, std::size_t clusters, std::size_t dim,
                               std::size_t output_dim, std::uint64_t seed,
                               bool normalize_output = true);

/// Parameter container: 16-byte header ("CVGEOPRM", u16 version, u8 variant,
/// u8 flags, u32 reserved), u32 K, D, R, then float32 arrays. See
/// docs/formats.md for the exact array order.
std::vector<std::uint8_t> encode_pipeline(const PipelineConfig& config);
PipelineConfig decode_pipeline(std::span<const std::uint8_t> bytes);
void save_pipeline(const std::filesystem::path& path, const PipelineConfig& config);
PipelineConfig load_pipeline(const std::filesystem::path& path);

}  // namespace cvgeo
