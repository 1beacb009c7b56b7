#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "cvgeo/motion.hpp"
#include "cvgeo/particle.hpp"
#include "cvgeo/rng.hpp"

namespace cvgeo {

struct ProbabilityField;
enum class MeasurementMode;

/// Data-parallel inner loops of the engine.
///
/// Every kernel has a serial reference and an OpenMP version. The OpenMP
/// versions only parallelize element-wise work; reductions stay serial and in
/// index order, so both versions return bit-identical results for any thread
/// count.
namespace kernels {

enum class Exec { serial, parallel };

/// out[i] = || rows[i] - query ||^2 for a row-major (n x dim) matrix.
void squared_distances_serial(std::span<const double> rows, std::size_t dim,
                              std::span<const double> query, std::span<double> out);
void squared_distances_parallel(std::span<const double> rows, std::size_t dim,
                                std::span<const double> query, std::span<double> out);
void squared_distances(Exec exec, std::span<const double> rows, std::size_t dim,
                       std::span<const double> query, std::span<double> out);

/// Same for float rows (database storage precision).
void squared_distances_serial(std::span<const float> rows, std::size_t dim,
                              std::span<const double> query, std::span<double> out);
void squared_distances_parallel(std::span<const float> rows, std::size_t dim,
                                std::span<const double> query, std::span<double> out);
void squared_distances(Exec exec, std::span<const float> rows, std::size_t dim,
                       std::span<const double> query, std::span<double> out);

/// In place: d -> exp(-(d - min d)) / sum, i.e. a softmax of negated values.
void softmax_negated_serial(std::span<double> values);
void softmax_negated_parallel(std::span<double> values);
void softmax_negated(Exec exec, std::span<double> values);

/// Moves particle i through the motion model using rng.substream(i), so the
/// result does not depend on thread scheduling.
void propagate_serial(std::span<Particle> particles, const ControlAction& u,
                      const MotionNoise& noise, const SeededRng& step_rng);
void propagate_parallel(std::span<Particle> particles, const ControlAction& u,
                        const MotionNoise& noise, const SeededRng& step_rng);
void propagate(Exec exec, std::span<Particle> particles, const ControlAction& u,
               const MotionNoise& noise, const SeededRng& step_rng);

/// particle.weight = measurement probability of particle.state.
void weigh_serial(std::span<Particle> particles, const ProbabilityField& field,
                  MeasurementMode mode);
void weigh_parallel(std::span<Particle> particles, const ProbabilityField& field,
                    MeasurementMode mode);
void weigh(Exec exec, std::span<Particle> particles, const ProbabilityField& field,
           MeasurementMode mode);

/// Threads OpenMP would use for the parallel kernels.
int max_threads();

}  // namespace kernels
}  // namespace cvgeo
