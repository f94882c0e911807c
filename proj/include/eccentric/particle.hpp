#pragma once

// Full-batch gradient descent on a free point cloud under the eccentric loss
// alone. The cloud spreads from near the origin onto the sphere of radius
// about sqrt(d).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/kernel.hpp"
#include "eccentric/random.hpp"
#include "eccentric/spectrum.hpp"

namespace eccentric {

struct SimConfig {
  ParamSet params;
  int count = 256;
  int steps = 1000;
  double step_size = 0.5;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
  int record_every = 50;

  void validate() const {
    params.validate();
    require(count >= 2, "simulate: count must be >= 2");
    require(steps >= 1, "simulate: steps must be >= 1");
    require(std::isfinite(step_size) && step_size >= 0.0, "simulate: step_size must be >= 0");
    require(std::isfinite(init_scale) && init_scale >= 0.0, "simulate: init_scale must be >= 0");
    require(record_every >= 1, "simulate: record_every must be >= 1");
  }
};

struct RadialStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation of the row norms.
inline RadialStats radial_stats(const PointBatch &batch) {
  require(batch.count() >= 1, "radial_stats needs at least one point");
  Vector norms = batch.matrix().rowwise().norm();
  RadialStats s;
  s.mean = norms.mean();
  s.std = std::sqrt((norms.array() - s.mean).square().mean());
  return s;
}

struct SimReport {
  PointBatch initial_batch;
  PointBatch final_batch;
  std::vector<int> loss_steps;
  std::vector<double> loss_trace;
  RadialStats radial;
  SpectrumReport spectrum;
};

/// Gaussian initial cloud, N(0, init_scale^2) per coordinate.
inline PointBatch initial_cloud(int count, int dim, double init_scale, std::uint64_t seed) {
  Rng rng(seed);
  Matrix z(count, dim);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index k = 0; k < z.cols(); ++k)
      z(i, k) = init_scale * rng.normal();
  return PointBatch(std::move(z));
}

/// Runs z <- z - step_size * grad l(z) from the given starting cloud.
/// The loss is recorded at step 0, every record_every steps and after the
/// last step.
inline SimReport simulate(const SimConfig &config, const PointBatch &start) {
  config.validate();
  require(start.count() == config.count && start.dim() == config.params.dim,
          "simulate: starting cloud does not match count x dim");
  SimReport report;
  report.initial_batch = start;
  Matrix z = start.matrix();
  auto record = [&](int step, const PointBatch &batch) {
    report.loss_steps.push_back(step);
    report.loss_trace.push_back(batch_loss(batch, config.params));
  };
  PointBatch current = start;
  record(0, current);
  for (int step = 1; step <= config.steps; ++step) {
    Matrix grad = batch_loss_gradient(current, config.params);
    z -= config.step_size * grad;
    if (!all_finite({z.data(), static_cast<std::size_t>(z.size())}))
      throw NumericalError("simulate: point cloud diverged at step " + std::to_string(step));
    current = PointBatch(z);
    if (step % config.record_every == 0 || step == config.steps) {
      record(step, current);
      if (!std::isfinite(report.loss_trace.back()))
        throw NumericalError("simulate: loss overflowed at step " + std::to_string(step));
    }
  }
  report.final_batch = std::move(current);
  report.radial = radial_stats(report.final_batch);
  report.spectrum = spectrum(report.final_batch);
  return report;
}

inline SimReport simulate(const SimConfig &config) {
  config.validate();
  return simulate(config, initial_cloud(config.count, config.params.dim, config.init_scale,
                                        config.seed));
}

/// n points uniform on the sphere of the given radius; norms are exact up to
/// rounding because each Gaussian row is rescaled.
inline PointBatch sample_sphere(int count, int dim, double radius, std::uint64_t seed) {
  require(count >= 1 && dim >= 1, "sample_sphere: count and dim must be positive");
  Rng rng(seed);
  Matrix z(count, dim);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double norm = 0.0;
    do {
      for (Eigen::Index k = 0; k < z.cols(); ++k)
        z(i, k) = rng.normal();
      norm = z.row(i).norm();
    } while (norm == 0.0);
    z.row(i) *= radius / norm;
  }
  return PointBatch(std::move(z));
}

} // namespace eccentric
