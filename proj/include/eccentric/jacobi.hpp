#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "eccentric/common.hpp"

namespace eccentric {

struct SymmetricEigen {
  Vector values;        // descending
  Eigen::MatrixXd vectors; // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations for a real symmetric matrix. Stops when the
/// off-diagonal Frobenius norm falls below off_tol times the Frobenius norm
/// of the input (or off_tol when the input is zero).
inline SymmetricEigen jacobi_eigen(const Eigen::MatrixXd &input, double off_tol = 1e-12,
                                   int max_sweeps = 100) {
  require(input.rows() == input.cols(), "jacobi_eigen: matrix must be square");
  const Eigen::Index n = input.rows();
  require(all_finite({input.data(), static_cast<std::size_t>(input.size())}),
          "jacobi_eigen: non-finite entries");
  require((input - input.transpose()).cwiseAbs().maxCoeff() <=
              1e-10 * std::max(1.0, input.cwiseAbs().maxCoeff()),
          "jacobi_eigen: matrix is not symmetric");

  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();
  const double threshold = scale > 0.0 ? off_tol * scale : off_tol;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q)
        s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0)
          continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          double akp = a(k, p);
          double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double apk = a(p, k);
          double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double vkp = v(k, p);
          double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() > threshold)
    throw NumericalError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                         " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  out.sweeps = sweep;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
    // Fix the sign so the largest-magnitude component is positive.
    Eigen::Index arg;
    out.vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, k) < 0.0)
      out.vectors.col(k) *= -1.0;
  }
  return out;
}

} // namespace eccentric
