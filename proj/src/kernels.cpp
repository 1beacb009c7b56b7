#include "cvgeo/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "cvgeo/errors.hpp"
#include "cvgeo/measurement.hpp"

namespace cvgeo::kernels {
namespace {

template <class T>
void check_shape(std::span<const T> rows, std::size_t dim, std::span<const double> query,
                 std::span<double> out) {
  if (query.size() != dim) throw InvalidArgument("query dimension mismatch");
  if (rows.size() != out.size() * dim) throw InvalidArgument("distance buffer size mismatch");
}

template <class T>
double row_distance(const T* row, std::span<const double> query) {
  double s = 0.0;
  for (std::size_t k = 0; k < query.size(); ++k) {
    const double d = static_cast<double>(row[k]) - query[k];
    s += d * d;
  }
  return s;
}

template <class T>
void distances_serial(std::span<const T> rows, std::size_t dim, std::span<const double> query,
                      std::span<double> out) {
  check_shape(rows, dim, query, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = row_distance(rows.data() + i * dim, query);
}

template <class T>
void distances_parallel(std::span<const T> rows, std::size_t dim, std::span<const double> query,
                        std::span<double> out) {
  check_shape(rows, dim, query, out);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = row_distance(rows.data() + static_cast<std::size_t>(i) * dim, query);
  }
}

double normalize_by_serial_sum(std::span<double> values) {
  double z = 0.0;
  for (double v : values) z += v;
  return z;
}

}  // namespace

void squared_distances_serial(std::span<const double> rows, std::size_t dim,
                              std::span<const double> query, std::span<double> out) {
  distances_serial(rows, dim, query, out);
}
void squared_distances_parallel(std::span<const double> rows, std::size_t dim,
                                std::span<const double> query, std::span<double> out) {
  distances_parallel(rows, dim, query, out);
}
void squared_distances(Exec exec, std::span<const double> rows, std::size_t dim,
                       std::span<const double> query, std::span<double> out) {
  if (exec == Exec::serial) {
    distances_serial(rows, dim, query, out);
  } else {
    distances_parallel(rows, dim, query, out);
  }
}

void squared_distances_serial(std::span<const float> rows, std::size_t dim,
                              std::span<const double> query, std::span<double> out) {
  distances_serial(rows, dim, query, out);
}
void squared_distances_parallel(std::span<const float> rows, std::size_t dim,
                                std::span<const double> query, std::span<double> out) {
  distances_parallel(rows, dim, query, out);
}
void squared_distances(Exec exec, std::span<const float> rows, std::size_t dim,
                       std::span<const double> query, std::span<double> out) {
  if (exec == Exec::serial) {
    distances_serial(rows, dim, query, out);
  } else {
    distances_parallel(rows, dim, query, out);
  }
}

void softmax_negated_serial(std::span<double> values) {
  if (values.empty()) return;
  const double lo = *std::min_element(values.begin(), values.end());
  for (double& v : values) v = std::exp(lo - v);
  const double z = normalize_by_serial_sum(values);
  for (double& v : values) v /= z;
}

void softmax_negated_parallel(std::span<double> values) {
  if (values.empty()) return;
  const double lo = *std::min_element(values.begin(), values.end());
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& v = values[static_cast<std::size_t>(i)];
    v = std::exp(lo - v);
  }
  const double z = normalize_by_serial_sum(values);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] /= z;
}

void softmax_negated(Exec exec, std::span<double> values) {
  if (exec == Exec::serial) {
    softmax_negated_serial(values);
  } else {
    softmax_negated_parallel(values);
  }
}

void propagate_serial(std::span<Particle> particles, const ControlAction& u,
                      const MotionNoise& noise, const SeededRng& step_rng) {
  for (std::size_t i = 0; i < particles.size(); ++i) {
    SeededRng rng = step_rng.substream(i);
    particles[i].state = sample_motion(particles[i].state, u, noise, rng);
  }
}

void propagate_parallel(std::span<Particle> particles, const ControlAction& u,
                        const MotionNoise& noise, const SeededRng& step_rng) {
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    SeededRng rng = step_rng.substream(idx);
    particles[idx].state = sample_motion(particles[idx].state, u, noise, rng);
  }
}

void propagate(Exec exec, std::span<Particle> particles, const ControlAction& u,
               const MotionNoise& noise, const SeededRng& step_rng) {
  if (exec == Exec::serial) {
    propagate_serial(particles, u, noise, step_rng);
  } else {
    propagate_parallel(particles, u, noise, step_rng);
  }
}

void weigh_serial(std::span<Particle> particles, const ProbabilityField& field,
                  MeasurementMode mode) {
  for (Particle& p : particles) p.weight = measurement_probability(field, p.state, mode);
}

void weigh_parallel(std::span<Particle> particles, const ProbabilityField& field,
                    MeasurementMode mode) {
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Particle& p = particles[static_cast<std::size_t>(i)];
    p.weight = measurement_probability(field, p.state, mode);
  }
}

void weigh(Exec exec, std::span<Particle> particles, const ProbabilityField& field,
           MeasurementMode mode) {
  if (exec == Exec::serial) {
    weigh_serial(particles, field, mode);
  } else {
    weigh_parallel(particles, field, mode);
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace cvgeo::kernels
