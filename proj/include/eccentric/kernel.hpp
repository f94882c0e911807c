#pragma once

// Eccentric loss: a pair-averaged kernel combining a quadratic pull toward
// the origin with a log-softened pairwise repulsion,
//
//   K(zi, zj) = (|zi|^2 + |zj|^2) / 2 - mu * N * log(1 + |zi - zj|^2 / N)
//   l({z})    = 1 / (b (b - 1)) * sum_{i != j} K(zi, zj)

#include <cmath>
#include <span>
#include <string>

#include "eccentric/common.hpp"

namespace eccentric {

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a)
    s += v * v;
  return s;
}

inline void check_batch(const PointBatch &batch, const ParamSet &params) {
  params.validate();
  require(batch.count() >= 2, "eccentric loss needs at least 2 points (got " +
                                  std::to_string(batch.count()) + ")");
  require(batch.dim() == params.dim, "batch dimension " + std::to_string(batch.dim()) +
                                         " does not match params.dim " +
                                         std::to_string(params.dim));
}

} // namespace detail

inline double pair_kernel(std::span<const double> zi, std::span<const double> zj,
                          const ParamSet &params) {
  params.validate();
  require(zi.size() == zj.size() && zi.size() == static_cast<std::size_t>(params.dim),
          "pair_kernel: points must both have dimension " + std::to_string(params.dim));
  require(all_finite(zi) && all_finite(zj), "pair_kernel: non-finite input");
  double attraction = 0.5 * (detail::squared_norm(zi) + detail::squared_norm(zj));
  double repulsion =
      params.mu * params.big_n * std::log1p(detail::squared_distance(zi, zj) / params.big_n);
  return attraction - repulsion;
}

/// Mean of pair_kernel over all ordered pairs i != j. Each unordered pair is
/// visited once and counted twice.
inline double batch_loss(const PointBatch &batch, const ParamSet &params) {
  detail::check_batch(batch, params);
  const auto b = batch.count();
  double norms = 0.0;
  double logs = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    auto zi = batch.row(i);
    norms += detail::squared_norm(zi);
    for (Eigen::Index j = i + 1; j < b; ++j)
      logs += std::log1p(detail::squared_distance(zi, batch.row(j)) / params.big_n);
  }
  double bd = static_cast<double>(b);
  return norms / bd - params.mu * params.big_n * 2.0 * logs / (bd * (bd - 1.0));
}

/// Exact gradient of batch_loss:
///   dl/dzi = (2/b) zi - 4 mu / (b (b-1)) * sum_{j != i} (zi - zj) / (1 + |zi - zj|^2 / N)
/// Rows are independent and each sums j in ascending order, so the result does
/// not depend on how rows are split across threads.
inline Matrix batch_loss_gradient(const PointBatch &batch, const ParamSet &params,
                                  unsigned threads = thread_count()) {
  detail::check_batch(batch, params);
  const auto b = batch.count();
  const auto d = batch.dim();
  const double bd = static_cast<double>(b);
  const double attract = 2.0 / bd;
  const double repel = 4.0 * params.mu / (bd * (bd - 1.0));
  const Matrix &z = batch.matrix();
  Matrix grad(b, d);

  // Small batches are not worth a thread.
  if (b * b * d < 200000)
    threads = 1;

  parallel_for(
      static_cast<std::size_t>(b),
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> force(static_cast<std::size_t>(d));
        for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end);
             ++i) {
          std::fill(force.begin(), force.end(), 0.0);
          const double *zi = z.data() + i * d;
          for (Eigen::Index j = 0; j < b; ++j) {
            if (j == i)
              continue;
            const double *zj = z.data() + j * d;
            double sq = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
              double diff = zi[k] - zj[k];
              sq += diff * diff;
            }
            double w = 1.0 / (1.0 + sq / params.big_n);
            for (Eigen::Index k = 0; k < d; ++k)
              force[k] += w * (zi[k] - zj[k]);
          }
          for (Eigen::Index k = 0; k < d; ++k)
            grad(i, k) = attract * zi[k] - repel * force[k];
        }
      },
      threads);
  return grad;
}

/// N = 2d (1 + 1 / (2 mu (d - 1))) / (2 mu - 1); puts the stationary sphere
/// radius close to sqrt(d).
inline double choose_big_n(int dim, double mu) {
  require(dim >= 2, "choose_big_n: dim must be >= 2 (got " + std::to_string(dim) + ")");
  require(std::isfinite(mu) && mu > 0.5,
          "choose_big_n: mu must be > 1/2, the formula divides by 2*mu - 1");
  double d = dim;
  return 2.0 * d * (1.0 + 1.0 / (2.0 * mu * (d - 1.0))) / (2.0 * mu - 1.0);
}

/// ParamSet with N derived from (dim, mu). mu is restricted to the range the
/// radius approximation was tuned for, [1, 2d + 1].
inline ParamSet params_with_auto_n(int dim, double mu, double lambda = 0.0) {
  require(dim >= 2, "dim must be >= 2 (got " + std::to_string(dim) + ")");
  require(mu >= 1.0 && mu <= 2.0 * dim + 1.0,
          "auto N requires 1 <= mu <= 2*dim + 1 (got mu = " + std::to_string(mu) + ")");
  return ParamSet{dim, mu, choose_big_n(dim, mu), lambda};
}

} // namespace eccentric
