#pragma once

// Independent re-implementations used only as test oracles. None of these
// call into the library except for container types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "eccentric/common.hpp"

namespace oracle {

using eccentric::Matrix;

inline Matrix random_matrix(int rows, int cols, std::uint32_t seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      m(i, j) = g(gen);
  return m;
}

/// Gram-matrix transcription of the reference loss: every ordered pair
/// including the diagonal, pairwise squared distances from the expansion
/// |x|^2 + |y|^2 - 2 x.y (clamped at 0).
inline double gram_loss(const Matrix &z, double mu, double big_n) {
  const auto b = z.rows();
  Eigen::VectorXd xx = z.rowwise().squaredNorm();
  Eigen::MatrixXd xy = -2.0 * (z * z.transpose());
  xy.colwise() += xx;
  xy.rowwise() += xx.transpose();
  double logs = 0.0;
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < b; ++j)
      logs += std::log(1.0 + std::max(0.0, xy(i, j)) / big_n);
  return (xx.sum() - mu * big_n * logs / static_cast<double>(b - 1)) / static_cast<double>(b);
}

/// Double-exponential (tanh-sinh) quadrature on [lo, hi], refining the step
/// until two successive levels agree to rel_tol.
inline double tanh_sinh(const std::function<double(double)> &f, double lo, double hi,
                        double rel_tol = 1e-14, int max_level = 12) {
  const double half = 0.5 * (hi - lo);
  const double pi_2 = std::acos(0.0);
  auto term = [&](double t) {
    double s = pi_2 * std::sinh(t);
    double c = std::cosh(s);
    double x = std::tanh(s);
    double w = pi_2 * std::cosh(t) / (c * c);
    // Distance to the nearer endpoint, formed without cancellation.
    double gap = half / (std::exp(std::abs(s)) * c);
    if (gap == 0.0)
      return 0.0;
    double u = x >= 0.0 ? hi - gap : lo + gap;
    return w * f(u);
  };
  double h = 1.0;
  const double t_max = 4.0;
  double sum = term(0.0);
  for (double t = h; t <= t_max; t += h)
    sum += term(t) + term(-t);
  double prev = sum * h * half;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    for (double t = h; t <= t_max; t += 2.0 * h)
      sum += term(t) + term(-t);
    double cur = sum * h * half;
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur))
      return cur;
    prev = cur;
  }
  return prev;
}

/// Stationarity density written straight from its definition with lgamma.
inline double density(int d, double a, double u) {
  double x = a * (u - 1.0);
  if (x <= 0.0 || x >= 2.0)
    return 0.0;
  double log_c = std::log(2.0 * a / std::sqrt(M_PI)) + std::lgamma(d / 2.0) -
                 std::lgamma((d - 1) / 2.0);
  return std::exp(log_c + 0.5 * (d - 1) * std::log(x) + 0.5 * (d - 3) * std::log(2.0 - x)) / u;
}

struct SignedPerm {
  std::vector<int> perm;
  std::vector<int> signs;
};

/// Every signed permutation T of d columns such that B = A T (column i of B
/// equals signs[i] * column perm[i] of A), found by exhaustive search.
inline std::vector<SignedPerm> exact_signed_perms(const Matrix &a, const Matrix &b) {
  const int d = static_cast<int>(a.cols());
  std::vector<SignedPerm> found;
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (int mask = 0; mask < (1 << d); ++mask) {
      bool match = true;
      for (int i = 0; i < d && match; ++i) {
        int s = (mask >> i) & 1 ? -1 : 1;
        match = (b.col(i) - s * a.col(perm[i])).cwiseAbs().maxCoeff() == 0.0;
      }
      if (match) {
        SignedPerm sp{perm, std::vector<int>(static_cast<std::size_t>(d))};
        for (int i = 0; i < d; ++i)
          sp.signs[i] = (mask >> i) & 1 ? -1 : 1;
        found.push_back(sp);
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return found;
}

/// Reads an IDX file byte by byte: returns the dimension list and raw bytes.
inline bool read_idx_raw(const std::string &path, std::vector<std::uint32_t> &dims,
                         std::vector<std::uint8_t> &data) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return false;
  unsigned char head[4];
  if (!in.read(reinterpret_cast<char *>(head), 4) || head[0] != 0 || head[1] != 0 || head[2] != 8)
    return false;
  dims.assign(head[3], 0);
  for (auto &dim : dims) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char *>(b), 4))
      return false;
    dim = (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
          b[3];
  }
  std::size_t total = 1;
  for (auto dim : dims)
    total *= dim;
  data.resize(total);
  return static_cast<bool>(in.read(reinterpret_cast<char *>(data.data()),
                                   static_cast<std::streamsize>(total)));
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

} // namespace oracle
