#pragma once

// Signed-permutation alignment of two principal-component embeddings of the
// same items.

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/spectrum.hpp"

namespace eccentric {

struct CorrelationMatrix {
  Eigen::MatrixXd values;
  // (i, j) pairs where a column had zero variance; the entry is reported as 0.
  std::vector<std::pair<int, int>> degenerate;
};

/// Pearson correlation of column i of e1 with column j of e2.
inline CorrelationMatrix cross_correlation(const Embedding &e1, const Embedding &e2) {
  require(e1.items() == e2.items() && e1.dim() == e2.dim(),
          "cross_correlation: embeddings must have the same shape");
  require(e1.items() >= 2, "cross_correlation needs at least 2 items");
  const Eigen::Index d = e1.dim();
  Matrix c1 = e1.coords.rowwise() - e1.coords.colwise().mean();
  Matrix c2 = e2.coords.rowwise() - e2.coords.colwise().mean();
  Vector n1 = c1.colwise().norm().transpose();
  Vector n2 = c2.colwise().norm().transpose();
  CorrelationMatrix out;
  out.values = c1.transpose() * c2;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (n1[i] == 0.0 || n2[j] == 0.0) {
        out.values(i, j) = 0.0;
        out.degenerate.emplace_back(static_cast<int>(i), static_cast<int>(j));
      } else {
        out.values(i, j) = std::clamp(out.values(i, j) / (n1[i] * n2[j]), -1.0, 1.0);
      }
    }
  }
  return out;
}

/// Output column i of an aligned embedding is signs[i] * input column perm[i].
struct SignedPermutation {
  std::vector<int> perm;
  std::vector<int> signs;

  static SignedPermutation identity(int d) {
    SignedPermutation s;
    s.perm.resize(static_cast<std::size_t>(d));
    std::iota(s.perm.begin(), s.perm.end(), 0);
    s.signs.assign(static_cast<std::size_t>(d), 1);
    return s;
  }

  Embedding apply(const Embedding &e) const {
    require(static_cast<std::size_t>(e.dim()) == perm.size(),
            "signed permutation: dimension mismatch");
    Embedding out{Matrix(e.items(), e.dim())};
    for (std::size_t i = 0; i < perm.size(); ++i)
      out.coords.col(static_cast<Eigen::Index>(i)) = signs[i] * e.coords.col(perm[i]);
    return out;
  }

  bool operator==(const SignedPermutation &) const = default;
};

struct AlignmentResult {
  SignedPermutation p; // applied to e1
  SignedPermutation q; // applied to e2
  int iterations = 0;  // sweeps of the repeat loop
  bool converged = true;
  Eigen::MatrixXd corr_before;
  Eigen::MatrixXd corr_after;
  Embedding aligned1;
  Embedding aligned2;
};

namespace detail {

// Moves column `from` to position `to` (to < from), shifting the columns in
// between one place to the right.
inline void rotate_into(Matrix &m, SignedPermutation &s, Eigen::Index to, Eigen::Index from) {
  Vector moved = m.col(from);
  for (Eigen::Index c = from; c > to; --c)
    m.col(c) = m.col(c - 1);
  m.col(to) = moved;
  auto first = s.perm.begin() + to;
  std::rotate(first, s.perm.begin() + from, s.perm.begin() + from + 1);
  auto sfirst = s.signs.begin() + to;
  std::rotate(sfirst, s.signs.begin() + from, s.signs.begin() + from + 1);
}

inline void negate(Matrix &m, SignedPermutation &s, Eigen::Index i) {
  m.col(i) = -m.col(i);
  s.signs[static_cast<std::size_t>(i)] = -s.signs[static_cast<std::size_t>(i)];
}

} // namespace detail

/// Iterative alignment: bring the strongest |<p_j, q_i>| onto the diagonal by
/// cyclic shifts of p or q, make each diagonal inner product non-negative, and
/// finally order both by <p,p> + <q,q> descending. Inner products are column
/// dot products over items.
///
/// A diagonal entry that is already in place but negative has q_i negated, so
/// e2 = -e1 aligns to signs_q = -1.
inline AlignmentResult align(const Embedding &e1, const Embedding &e2) {
  require(e1.items() == e2.items() && e1.dim() == e2.dim(),
          "align: embeddings must have the same number of items and the same dim");
  require(e1.items() >= 2 && e1.dim() >= 1, "align needs at least 2 items");
  const Eigen::Index d = e1.dim();
  AlignmentResult res;
  res.p = SignedPermutation::identity(static_cast<int>(d));
  res.q = SignedPermutation::identity(static_cast<int>(d));
  res.corr_before = cross_correlation(e1, e2).values;

  Matrix p = e1.coords;
  Matrix q = e2.coords;
  auto dot = [](const Matrix &a, Eigen::Index i, const Matrix &b, Eigen::Index j) {
    return a.col(i).dot(b.col(j));
  };

  const int cap = 100 * static_cast<int>(d);
  bool sorted = false;
  while (!sorted) {
    if (res.iterations == cap) {
      res.converged = false;
      break;
    }
    ++res.iterations;
    sorted = true;
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::Index j = i;
      double best_j = std::abs(dot(p, i, q, i));
      for (Eigen::Index j0 = i + 1; j0 < d; ++j0) {
        double v = std::abs(dot(p, j0, q, i));
        if (v > best_j) {
          best_j = v;
          j = j0;
        }
      }
      Eigen::Index k = i;
      double best_k = std::abs(dot(p, i, q, i));
      for (Eigen::Index k0 = i + 1; k0 < d; ++k0) {
        double v = std::abs(dot(p, i, q, k0));
        if (v > best_k) {
          best_k = v;
          k = k0;
        }
      }
      if (j > i && best_j > best_k) {
        sorted = false;
        detail::rotate_into(p, res.p, i, j);
        if (dot(p, i, q, i) < 0.0)
          detail::negate(p, res.p, i);
      } else if (k > i) {
        sorted = false;
        detail::rotate_into(q, res.q, i, k);
        if (dot(p, i, q, i) < 0.0)
          detail::negate(q, res.q, i);
      } else if (dot(p, i, q, i) < 0.0) {
        detail::negate(q, res.q, i);
      }
    }
  }

  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index k = i;
    double best = p.col(i).squaredNorm() + q.col(i).squaredNorm();
    for (Eigen::Index k0 = i + 1; k0 < d; ++k0) {
      double v = p.col(k0).squaredNorm() + q.col(k0).squaredNorm();
      if (v > best) {
        best = v;
        k = k0;
      }
    }
    if (k > i) {
      detail::rotate_into(q, res.q, i, k);
      detail::rotate_into(p, res.p, i, k);
    }
  }

  res.aligned1 = Embedding{std::move(p)};
  res.aligned2 = Embedding{std::move(q)};
  res.corr_after = cross_correlation(res.aligned1, res.aligned2).values;
  return res;
}

} // namespace eccentric
