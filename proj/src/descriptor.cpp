#include "cvgeo/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"
#include "cvgeo/rng.hpp"

namespace cvgeo {
namespace {

constexpr char kParamMagic[] = "CVGEOPRM";
constexpr std::uint16_t kParamVersion = 1;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

double uniform_param(SeededRng& rng) { return quantize(-0.1 + 0.2 * rng.uniform()); }

const VladParams& vlad_for(const CvmNetIParams& p, View v) {
  return v == View::satellite ? p.satellite_vlad : p.ground_vlad;
}

const ReductionParams& reduction_for(const CvmNetIParams& p, View v) {
  return v == View::satellite ? p.satellite_reduction : p.ground_reduction;
}

GlobalDescriptor finish(const ReductionParams& reduction, GlobalDescriptor agg, bool normalize) {
  GlobalDescriptor out{reduction.projection.apply(agg.values), agg.view};
  if (normalize) l2_normalize(out.values);
  return out;
}

void check_reduction(const ReductionParams& r, std::size_t in_dim) {
  r.projection.validate("reduction");
  if (r.projection.in_dim() != in_dim) {
    throw InvalidArgument("reduction input dim " + std::to_string(r.projection.in_dim()) +
                          " != K*D " + std::to_string(in_dim));
  }
  if (r.projection.out_dim() > in_dim) {
    throw InvalidArgument("reduction output dim exceeds K*D");
  }
}

// --- parameter file ---------------------------------------------------------

void put_matrix(io::ByteWriter& w, const Matrix& m) {
  for (double v : m.data()) w.f32(static_cast<float>(v));
}
void put_vector(io::ByteWriter& w, const std::vector<double>& v) {
  for (double x : v) w.f32(static_cast<float>(x));
}
Matrix get_matrix(io::ByteReader& r, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = r.f32();
  return m;
}
std::vector<double> get_vector(io::ByteReader& r, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = r.f32();
  return v;
}

}  // namespace

const char* to_string(View v) { return v == View::satellite ? "satellite" : "ground"; }

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

AffineMap AffineMap::identity(std::size_t n) {
  return {Matrix::identity(n), std::vector<double>(n, 0.0)};
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
  if (x.size() != in_dim()) {
    throw InvalidArgument("affine input dim " + std::to_string(x.size()) + " != " +
                          std::to_string(in_dim()));
  }
  std::vector<double> y(bias);
  for (std::size_t r = 0; r < out_dim(); ++r) y[r] += dot(weight.row(r), x);
  return y;
}

void AffineMap::validate(const char* what) const {
  if (bias.size() != weight.rows()) {
    throw InvalidArgument(std::string(what) + ": bias length does not match weight rows");
  }
  if (!all_finite(weight.data()) || !all_finite(bias)) {
    throw InvalidArgument(std::string(what) + ": non-finite parameter");
  }
}

void LocalFeatureSet::validate() const {
  if (features.empty()) throw InvalidArgument("local feature set is empty");
  const std::size_t d = features.front().size();
  if (d == 0) throw InvalidArgument("local features have zero dimension");
  for (const auto& f : features) {
    if (f.size() != d) throw InvalidArgument("local features have inconsistent dimension");
    if (!all_finite(f)) throw InvalidArgument("local feature contains non-finite value");
  }
}

void VladParams::validate() const {
  const std::size_t k = centroids.rows();
  if (k == 0 || centroids.cols() == 0) throw InvalidArgument("VLAD needs K >= 1 and D >= 1");
  if (assign_weights.rows() != k || assign_weights.cols() != centroids.cols() ||
      assign_bias.size() != k) {
    throw InvalidArgument("VLAD parameter shapes disagree");
  }
  if (!all_finite(centroids.data()) || !all_finite(assign_weights.data()) ||
      !all_finite(assign_bias)) {
    throw InvalidArgument("VLAD parameters must be finite");
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (squared_distance(centroids.row(a), centroids.row(b)) == 0.0) {
        throw InvalidArgument("VLAD centroids must be pairwise distinct");
      }
    }
  }
}

std::vector<double> soft_assign(const VladParams& params, std::span<const double> u) {
  if (u.size() != params.feature_dim()) {
    throw InvalidArgument("feature dim " + std::to_string(u.size()) + " != VLAD dim " +
                          std::to_string(params.feature_dim()));
  }
  const std::size_t k = params.clusters();
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < k; ++i) {
    logits[i] = dot(params.assign_weights.row(i), u) + params.assign_bias[i];
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - peak);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

GlobalDescriptor vlad_aggregate(const VladParams& params, const LocalFeatureSet& feats) {
  feats.validate();
  const std::size_t k = params.clusters();
  const std::size_t d = params.feature_dim();
  if (feats.dim() != d) {
    throw InvalidArgument("feature dim " + std::to_string(feats.dim()) + " != VLAD dim " +
                          std::to_string(d));
  }
  GlobalDescriptor out{std::vector<double>(k * d, 0.0), feats.view};
  for (const auto& u : feats.features) {
    const std::vector<double> a = soft_assign(params, u);
    for (std::size_t c = 0; c < k; ++c) {
      const auto centroid = params.centroids.row(c);
      double* block = out.values.data() + c * d;
      for (std::size_t i = 0; i < d; ++i) block[i] += a[c] * (u[i] - centroid[i]);
    }
  }
  return out;
}

GlobalDescriptor forward(const PipelineConfig& config, const LocalFeatureSet& feats) {
  feats.validate();
  if (const auto* net1 = std::get_if<CvmNetIParams>(&config.net)) {
    GlobalDescriptor agg = vlad_aggregate(vlad_for(*net1, feats.view), feats);
    return finish(reduction_for(*net1, feats.view), std::move(agg), config.normalize_output);
  }
  const auto& net2 = std::get<CvmNetIIParams>(config.net);
  const AffineMap& first = net2.transforms.independent(feats.view);
  LocalFeatureSet transformed;
  transformed.view = feats.view;
  transformed.features.reserve(feats.count());
  for (const auto& u : feats.features) {
    transformed.features.push_back(net2.transforms.shared.apply(first.apply(u)));
  }
  GlobalDescriptor agg = vlad_aggregate(net2.shared_vlad, transformed);
  return finish(net2.shared_reduction, std::move(agg), config.normalize_output);
}

PipelineVariant PipelineConfig::variant() const {
  return std::holds_alternative<CvmNetIParams>(net) ? PipelineVariant::CvmNetI
                                                    : PipelineVariant::CvmNetII;
}

std::size_t PipelineConfig::clusters() const {
  if (const auto* n = std::get_if<CvmNetIParams>(&net)) return n->satellite_vlad.clusters();
  return std::get<CvmNetIIParams>(net).shared_vlad.clusters();
}

std::size_t PipelineConfig::feature_dim() const {
  if (const auto* n = std::get_if<CvmNetIParams>(&net)) return n->satellite_vlad.feature_dim();
  return std::get<CvmNetIIParams>(net).transforms.satellite_independent.in_dim();
}

std::size_t PipelineConfig::output_dim() const {
  if (const auto* n = std::get_if<CvmNetIParams>(&net)) {
    return n->satellite_reduction.projection.out_dim();
  }
  return std::get<CvmNetIIParams>(net).shared_reduction.projection.out_dim();
}

void PipelineConfig::validate() const {
  if (const auto* n = std::get_if<CvmNetIParams>(&net)) {
    n->satellite_vlad.validate();
    n->ground_vlad.validate();
    if (n->satellite_vlad.clusters() != n->ground_vlad.clusters() ||
        n->satellite_vlad.feature_dim() != n->ground_vlad.feature_dim()) {
      throw InvalidArgument("both aggregators must share K and D");
    }
    const std::size_t kd = n->satellite_vlad.clusters() * n->satellite_vlad.feature_dim();
    check_reduction(n->satellite_reduction, kd);
    check_reduction(n->ground_reduction, kd);
    if (n->satellite_reduction.projection.out_dim() != n->ground_reduction.projection.out_dim()) {
      throw InvalidArgument("both reductions must produce the same dimension");
    }
    return;
  }
  const auto& n = std::get<CvmNetIIParams>(net);
  n.shared_vlad.validate();
  const std::size_t d = n.shared_vlad.feature_dim();
  for (const AffineMap* m :
       {&n.transforms.satellite_independent, &n.transforms.ground_independent,
        &n.transforms.shared}) {
    m->validate("transform");
    if (m->in_dim() != d || m->out_dim() != d) {
      throw InvalidArgument("transform layers must map D -> D");
    }
  }
  check_reduction(n.shared_reduction, n.shared_vlad.clusters() * d);
}

void l2_normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("descriptor dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

VladParams random_vlad(std::size_t clusters, std::size_t dim, SeededRng& rng) {
  VladParams p{Matrix(clusters, dim), Matrix(clusters, dim), std::vector<double>(clusters)};
  for (double& v : p.centroids.data()) v = uniform_param(rng);
  for (double& v : p.assign_weights.data()) v = uniform_param(rng);
  for (double& v : p.assign_bias) v = uniform_param(rng);
  p.validate();
  return p;
}

AffineMap random_affine(std::size_t out, std::size_t in, SeededRng& rng) {
  AffineMap m{Matrix(out, in), std::vector<double>(out)};
  for (double& v : m.weight.data()) v = uniform_param(rng);
  for (double& v : m.bias) v = uniform_param(rng);
  return m;
}

PipelineConfig random_pipeline(PipelineVariant variant, std::size_t clusters, std::size_t dim,
                               std::size_t output_dim, std::uint64_t seed,
                               bool normalize_output) {
  SeededRng rng(seed);
  PipelineConfig cfg;
  cfg.normalize_output = normalize_output;
  const std::size_t kd = clusters * dim;
  if (variant == PipelineVariant::CvmNetI) {
    CvmNetIParams n;
    n.satellite_vlad = random_vlad(clusters, dim, rng);
    n.ground_vlad = random_vlad(clusters, dim, rng);
    n.satellite_reduction = {random_affine(output_dim, kd, rng)};
    n.ground_reduction = {random_affine(output_dim, kd, rng)};
    cfg.net = std::move(n);
  } else {
    CvmNetIIParams n;
    n.transforms.satellite_independent = random_affine(dim, dim, rng);
    n.transforms.ground_independent = random_affine(dim, dim, rng);
    n.transforms.shared = random_affine(dim, dim, rng);
    n.shared_vlad = random_vlad(clusters, dim, rng);
    n.shared_reduction = {random_affine(output_dim, kd, rng)};
    cfg.net = std::move(n);
  }
  cfg.validate();
  return cfg;
}

std::vector<std::uint8_t> encode_pipeline(const PipelineConfig& config) {
  config.validate();
  io::ByteWriter w;
  w.raw(std::string_view(kParamMagic, 8));
  w.u16(kParamVersion);
  w.u8(static_cast<std::uint8_t>(config.variant()));
  w.u8(config.normalize_output ? 1 : 0);
  w.u32(0);
  w.u32(static_cast<std::uint32_t>(config.clusters()));
  w.u32(static_cast<std::uint32_t>(config.feature_dim()));
  w.u32(static_cast<std::uint32_t>(config.output_dim()));

  if (const auto* n = std::get_if<CvmNetIParams>(&config.net)) {
    put_matrix(w, n->satellite_vlad.centroids);
    put_matrix(w, n->ground_vlad.centroids);
    put_matrix(w, n->satellite_vlad.assign_weights);
    put_matrix(w, n->ground_vlad.assign_weights);
    put_vector(w, n->satellite_vlad.assign_bias);
    put_vector(w, n->ground_vlad.assign_bias);
    for (const auto* r : {&n->satellite_reduction, &n->ground_reduction}) {
      put_matrix(w, r->projection.weight);
      put_vector(w, r->projection.bias);
    }
  } else {
    const auto& net2 = std::get<CvmNetIIParams>(config.net);
    put_matrix(w, net2.shared_vlad.centroids);
    put_matrix(w, net2.shared_vlad.assign_weights);
    put_vector(w, net2.shared_vlad.assign_bias);
    for (const AffineMap* m : {&net2.transforms.satellite_independent,
                               &net2.transforms.ground_independent, &net2.transforms.shared}) {
      put_matrix(w, m->weight);
      put_vector(w, m->bias);
    }
    put_matrix(w, net2.shared_reduction.projection.weight);
    put_vector(w, net2.shared_reduction.projection.bias);
  }
  return w.take();
}

PipelineConfig decode_pipeline(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.raw(8) != std::string_view(kParamMagic, 8)) throw IoError("not a pipeline parameter file");
  const std::uint16_t version = r.u16();
  if (version != kParamVersion) {
    throw IoError("unsupported parameter file version " + std::to_string(version));
  }
  const std::uint8_t variant = r.u8();
  const std::uint8_t flags = r.u8();
  r.u32();  // reserved
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  const std::size_t out = r.u32();
  const std::size_t kd = k * d;

  PipelineConfig cfg;
  cfg.normalize_output = (flags & 1u) != 0;
  if (variant == static_cast<std::uint8_t>(PipelineVariant::CvmNetI)) {
    CvmNetIParams n;
    n.satellite_vlad.centroids = get_matrix(r, k, d);
    n.ground_vlad.centroids = get_matrix(r, k, d);
    n.satellite_vlad.assign_weights = get_matrix(r, k, d);
    n.ground_vlad.assign_weights = get_matrix(r, k, d);
    n.satellite_vlad.assign_bias = get_vector(r, k);
    n.ground_vlad.assign_bias = get_vector(r, k);
    for (auto* red : {&n.satellite_reduction, &n.ground_reduction}) {
      red->projection.weight = get_matrix(r, out, kd);
      red->projection.bias = get_vector(r, out);
    }
    cfg.net = std::move(n);
  } else if (variant == static_cast<std::uint8_t>(PipelineVariant::CvmNetII)) {
    CvmNetIIParams n;
    n.shared_vlad.centroids = get_matrix(r, k, d);
    n.shared_vlad.assign_weights = get_matrix(r, k, d);
    n.shared_vlad.assign_bias = get_vector(r, k);
    for (AffineMap* m : {&n.transforms.satellite_independent, &n.transforms.ground_independent,
                         &n.transforms.shared}) {
      m->weight = get_matrix(r, d, d);
      m->bias = get_vector(r, d);
    }
    n.shared_reduction.projection.weight = get_matrix(r, out, kd);
    n.shared_reduction.projection.bias = get_vector(r, out);
    cfg.net = std::move(n);
  } else {
    throw IoError("unknown pipeline variant " + std::to_string(variant));
  }
  if (r.remaining() != 0) throw IoError("trailing bytes in parameter file");
  cfg.validate();
  return cfg;
}

void save_pipeline(const std::filesystem::path& path, const PipelineConfig& config) {
  io::write_file(path, encode_pipeline(config));
}

PipelineConfig load_pipeline(const std::filesystem::path& path) {
  return decode_pipeline(io::read_file(path));
}

}  // namespace cvgeo
