#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "eccentric/common.hpp"
#include "eccentric/jacobi.hpp"

namespace eccentric {

struct SpectrumReport {
  Vector eigenvalues;           // descending
  double trace = 0.0;
  Vector mean;
  Eigen::MatrixXd eigenvectors; // orthonormal columns, paired with eigenvalues

  // Ratio of largest to smallest eigenvalue; infinite when the smallest is 0.
  double condition() const {
    double lo = eigenvalues[eigenvalues.size() - 1];
    return lo > 0.0 ? eigenvalues[0] / lo : std::numeric_limits<double>::infinity();
  }
};

/// Sample covariance with divisor n - 1.
inline Eigen::MatrixXd covariance(const Matrix &data, Vector *mean_out = nullptr) {
  require(data.rows() >= 2, "covariance needs at least 2 rows (got " +
                                std::to_string(data.rows()) + ")");
  Vector mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  if (mean_out)
    *mean_out = mean;
  return 0.5 * (cov + cov.transpose());
}

inline SpectrumReport spectrum(const PointBatch &batch) {
  require(batch.count() >= 2,
          "spectrum needs at least 2 points (got " + std::to_string(batch.count()) + ")");
  SpectrumReport report;
  Eigen::MatrixXd cov = covariance(batch.matrix(), &report.mean);
  auto eig = jacobi_eigen(cov);
  report.eigenvalues = eig.values;
  report.eigenvectors = eig.vectors;
  report.trace = cov.trace();
  return report;
}

/// Items expressed in deep principal components: column k holds each item's
/// coordinate along the k-th eigenvector of the latent covariance.
struct Embedding {
  Matrix coords;

  Eigen::Index items() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
};

/// Centre on the mean and rotate onto the descending eigenvectors.
inline Embedding to_principal_embedding(const PointBatch &batch, const SpectrumReport &report) {
  require(batch.dim() == report.mean.size(), "embedding: dimension mismatch with spectrum");
  Matrix centered = batch.matrix().rowwise() - report.mean.transpose();
  return Embedding{centered * report.eigenvectors};
}

inline Embedding to_principal_embedding(const PointBatch &batch) {
  return to_principal_embedding(batch, spectrum(batch));
}

/// Inverse of to_principal_embedding.
inline PointBatch from_principal_embedding(const Embedding &embedding,
                                           const SpectrumReport &report) {
  require(embedding.dim() == report.mean.size(), "embedding: dimension mismatch with spectrum");
  Matrix z = embedding.coords * report.eigenvectors.transpose();
  z.rowwise() += report.mean.transpose();
  return PointBatch(std::move(z));
}

} // namespace eccentric
