#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/jacobi.hpp"
#include "eccentric/network.hpp"
#include "eccentric/random.hpp"
#include "eccentric/spectrum.hpp"

namespace eccentric {

struct SimilarityMetrics {
  double rms_distance = 0.0;
  double mean_cosine = 0.0;
  double mean_angle_deg = 0.0;
  int zero_rows = 0; // items left out of the cosine and angle means
};

/// Row-wise comparison of two embeddings of the same items.
inline SimilarityMetrics similarity_metrics(const Embedding &e1, const Embedding &e2) {
  require(e1.items() == e2.items() && e1.dim() == e2.dim(),
          "similarity_metrics: embeddings must have the same shape");
  require(e1.items() >= 1, "similarity_metrics needs at least one item");
  SimilarityMetrics m;
  double sq = 0.0;
  double cos_sum = 0.0;
  double angle_sum = 0.0;
  int used = 0;
  for (Eigen::Index i = 0; i < e1.items(); ++i) {
    auto a = e1.coords.row(i);
    auto b = e2.coords.row(i);
    sq += (a - b).squaredNorm();
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      ++m.zero_rows;
      continue;
    }
    double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    cos_sum += c;
    angle_sum += std::acos(c) * 180.0 / std::numbers::pi;
    ++used;
  }
  m.rms_distance = std::sqrt(sq / static_cast<double>(e1.items()));
  if (used > 0) {
    m.mean_cosine = cos_sum / used;
    m.mean_angle_deg = angle_sum / used;
  }
  return m;
}

enum class SampleMode { standard, matched };

inline SampleMode parse_sample_mode(const std::string &name) {
  if (name == "standard")
    return SampleMode::standard;
  if (name == "matched")
    return SampleMode::matched;
  throw ValidationError("unknown sample mode '" + name + "' (expected standard or matched)");
}

struct SampleResult {
  PointBatch samples;
  bool rank_deficient = false; // matched mode with fewer than dim + 1 reference items
};

/// Symmetric PSD square root of a covariance, negative eigenvalues clamped.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd &cov) {
  auto eig = jacobi_eigen(cov);
  Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
}

/// standard: i.i.d. N(0, 1). matched: mean + L g with g ~ N(0, I) and L the
/// PSD square root of the reference covariance.
inline SampleResult sample_latents(SampleMode mode, const PointBatch *reference, int n, int dim,
                                   std::uint64_t seed) {
  require(n >= 0, "sample count must be >= 0");
  require(dim >= 1, "sample dim must be >= 1");
  Rng rng(seed);
  Matrix g(n, dim);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      g(i, j) = rng.normal();
  SampleResult out;
  if (mode == SampleMode::standard) {
    out.samples = PointBatch(std::move(g));
    return out;
  }
  require(reference != nullptr, "matched sampling needs a reference batch");
  require(reference->dim() == dim, "reference dim " + std::to_string(reference->dim()) +
                                       " does not match requested dim " + std::to_string(dim));
  require(reference->count() >= 2, "matched sampling needs at least 2 reference items");
  out.rank_deficient = reference->count() < dim + 1;
  Vector mean;
  Eigen::MatrixXd cov = covariance(reference->matrix(), &mean);
  Eigen::MatrixXd root = psd_sqrt(cov);
  Matrix z = g * root.transpose();
  z.rowwise() += mean.transpose();
  out.samples = PointBatch(std::move(z));
  return out;
}

/// Decodes mean + scale*sqrt(lambda_k)*v_k and mean - ... for each component
/// k in descending eigenvalue order; returns 2d rows as (+, -) pairs.
template <class Decoder>
  requires std::invocable<Decoder &, const Matrix &>
Matrix decode_eigen_components(Decoder &&decode, const SpectrumReport &spectrum, double scale) {
  const Eigen::Index d = spectrum.mean.size();
  require(std::isfinite(scale), "scale must be finite");
  Matrix latents(2 * d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Vector step = scale * std::sqrt(std::max(0.0, spectrum.eigenvalues[k])) *
                  spectrum.eigenvectors.col(k);
    latents.row(2 * k) = (spectrum.mean + step).transpose();
    latents.row(2 * k + 1) = (spectrum.mean - step).transpose();
  }
  return decode(latents);
}

inline Matrix decode_eigen_components(const DenseNet &decoder, const SpectrumReport &spectrum,
                                      double scale) {
  require(decoder.spec().input_width() == spectrum.mean.size(),
          "decoder input width " + std::to_string(decoder.spec().input_width()) +
              " does not match latent dim " + std::to_string(spectrum.mean.size()));
  return decode_eigen_components([&](const Matrix &z) { return decoder.forward(z); }, spectrum,
                                 scale);
}

struct KnnResult {
  std::vector<int> predictions;
  double error_rate = 0.0; // only meaningful when truth labels were given
};

/// Euclidean k-nearest-neighbour vote. Neighbours are ranked by (distance,
/// training index); a tied vote goes to the label with the smallest summed
/// neighbour distance, then to the lowest label.
inline KnnResult knn_classify(const Matrix &train, const std::vector<int> &train_labels,
                              const Matrix &test, int k, const std::vector<int> *truth = nullptr,
                              unsigned threads = thread_count()) {
  require(train.rows() >= 1, "knn: empty training set");
  require(static_cast<std::size_t>(train.rows()) == train_labels.size(),
          "knn: training labels do not match training items");
  require(train.cols() == test.cols(), "knn: train and test dims differ");
  require(k >= 1 && k <= train.rows(), "knn: k must lie in [1, training size]");
  if (truth)
    require(truth->size() == static_cast<std::size_t>(test.rows()),
            "knn: truth labels do not match test items");

  KnnResult out;
  out.predictions.assign(static_cast<std::size_t>(test.rows()), 0);
  parallel_for(
      static_cast<std::size_t>(test.rows()),
      [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(train.rows()));
        for (std::size_t t = begin; t < end; ++t) {
          auto x = test.row(static_cast<Eigen::Index>(t));
          for (Eigen::Index i = 0; i < train.rows(); ++i)
            dist[static_cast<std::size_t>(i)] = {(train.row(i) - x).norm(), i};
          std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
          std::map<int, std::pair<int, double>> votes; // label -> (count, summed distance)
          for (int n = 0; n < k; ++n) {
            auto &v = votes[train_labels[static_cast<std::size_t>(dist[n].second)]];
            ++v.first;
            v.second += dist[n].first;
          }
          int best = votes.begin()->first;
          auto best_vote = votes.begin()->second;
          for (const auto &[label, vote] : votes) {
            if (vote.first > best_vote.first ||
                (vote.first == best_vote.first && vote.second < best_vote.second)) {
              best = label;
              best_vote = vote;
            }
          }
          out.predictions[t] = best;
        }
      },
      threads);
  if (truth && test.rows() > 0) {
    int wrong = 0;
    for (std::size_t t = 0; t < truth->size(); ++t)
      wrong += out.predictions[t] != (*truth)[t];
    out.error_rate = static_cast<double>(wrong) / static_cast<double>(test.rows());
  }
  return out;
}

} // namespace eccentric
