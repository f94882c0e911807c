#pragma once

// Stationary radius of the uniform hypersphere distribution under the
// eccentric loss. With a = N / (2 rho^2) the sphere of radius rho is
// stationary when
//
//   integral_{1}^{1 + 2/a} f_{d,a}(u) du = 1 / mu,
//   f_{d,a}(u) = (2a / sqrt(pi)) * G(d) * (a(u-1))^((d-1)/2) * (2 - a(u-1))^((d-3)/2) / u,
//
// where G(d) = Gamma(d/2) / Gamma((d-1)/2). The upper limit 1 + 2/a equals
// 1 + 4 rho^2 / N.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/kernel.hpp"
#include "eccentric/quadrature.hpp"
#include "eccentric/special.hpp"

namespace eccentric {

struct RadiusProblem {
  int dim = 3;
  double mu = 1.0;
  double big_n = 1.0;

  void validate() const {
    require(dim >= 3, "stationary radius theory requires dim >= 3 (got " +
                          std::to_string(dim) + ")");
    require(std::isfinite(mu), "mu must be finite");
    require(std::isfinite(big_n) && big_n > 0.0, "big_n must be positive");
  }

  double a_for(double rho) const { return big_n / (2.0 * rho * rho); }
};

struct RadiusSolution {
  double rho = 0.0;
  double residual = 0.0;
  int iterations = 0;
  long quadrature_points = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

struct RadiusSolverOptions {
  double residual_tol = 1e-10;
  double rho_rel_tol = 1e-12;
  int max_iterations = 200;
  int max_expansions = 60;
  QuadratureOptions quadrature{};
};

/// The density f_{d,a}(u) on [1, 1 + 2/a].
class StationarityDensity {
public:
  StationarityDensity(int dim, double a)
      : dim_(dim), a_(a), prefactor_(2.0 * a / std::sqrt(std::numbers::pi) * gamma_ratio(dim)),
        e1_(0.5 * (dim - 1)), e2_(0.5 * (dim - 3)) {
    require(dim >= 3, "f_{d,a} requires dim >= 3 (got " + std::to_string(dim) + ")");
    require(std::isfinite(a) && a > 0.0, "f_{d,a} requires a > 0");
  }

  double upper() const { return 1.0 + 2.0 / a_; }
  double a() const { return a_; }
  int dim() const { return dim_; }

  double operator()(double u) const {
    double x = std::clamp(a_ * (u - 1.0), 0.0, 2.0);
    return prefactor_ * shape(x) / u;
  }

  // log f, for maximization; -inf outside the open support.
  double log_value(double u) const {
    double x = a_ * (u - 1.0);
    if (x <= 0.0 || x >= 2.0)
      return -std::numeric_limits<double>::infinity();
    double v = std::log(prefactor_) + e1_ * std::log(x) - std::log(u);
    if (e2_ != 0.0)
      v += e2_ * std::log(2.0 - x);
    return v;
  }

private:
  // x^e1 (2 - x)^e2, in log space once the powers could overflow.
  double shape(double x) const {
    if (x <= 0.0)
      return 0.0;
    double y = 2.0 - x;
    if (e2_ == 0.0)
      return std::pow(x, e1_);
    if (y <= 0.0)
      return 0.0;
    if (dim_ <= 600)
      return std::pow(x, e1_) * std::pow(y, e2_);
    return std::exp(e1_ * std::log(x) + e2_ * std::log(y));
  }

  int dim_;
  double a_;
  double prefactor_;
  double e1_;
  double e2_;
};

/// Left-hand side of the stationarity condition at radius rho.
inline QuadratureResult stationarity_integral_detail(double rho, const RadiusProblem &problem,
                                                     const QuadratureOptions &options = {}) {
  problem.validate();
  require(std::isfinite(rho) && rho > 0.0, "rho must be positive");
  StationarityDensity f(problem.dim, problem.a_for(rho));
  return integrate(f, 1.0, f.upper(), options);
}

inline double stationarity_integral(double rho, const RadiusProblem &problem,
                                    const QuadratureOptions &options = {}) {
  return stationarity_integral_detail(rho, problem, options).value;
}

/// Bisection for rho; the integral decreases in rho, so the residual
/// integral - 1/mu is positive below the root and negative above it.
inline RadiusSolution solve_radius(int dim, double mu, double big_n,
                                   const RadiusSolverOptions &options = {}) {
  RadiusProblem problem{dim, mu, big_n};
  problem.validate();
  require(mu >= 1.0, "solve_radius requires mu >= 1 (got " + std::to_string(mu) + ")");

  const double target = 1.0 / mu;
  long nodes = 0;
  auto residual = [&](double rho) {
    auto q = stationarity_integral_detail(rho, problem, options.quadrature);
    nodes = q.nodes;
    return q.value - target;
  };

  const double root_d = std::sqrt(static_cast<double>(dim));
  double lo = root_d / 4.0;
  double hi = 4.0 * root_d;
  double r_lo = residual(lo);
  double r_hi = residual(hi);
  int expansions = 0;
  while ((r_lo < 0.0 || r_hi > 0.0) && expansions < options.max_expansions) {
    if (r_lo < 0.0) {
      lo /= 2.0;
      r_lo = residual(lo);
    }
    if (r_hi > 0.0) {
      hi *= 2.0;
      r_hi = residual(hi);
    }
    ++expansions;
  }
  if (r_lo < 0.0 || r_hi > 0.0) {
    std::ostringstream msg;
    msg << "solve_radius: no sign change for dim=" << dim << " mu=" << mu << " N=" << big_n
        << " after " << expansions << " bracket expansions";
    throw NumericalError(msg.str());
  }

  RadiusSolution sol;
  double mid = 0.5 * (lo + hi);
  double r_mid = residual(mid);
  int it = 1;
  for (; it < options.max_iterations; ++it) {
    if (hi - lo <= options.rho_rel_tol * mid && std::abs(r_mid) < options.residual_tol)
      break;
    if (r_mid > 0.0)
      lo = mid;
    else
      hi = mid;
    double next = 0.5 * (lo + hi);
    if (next == mid)
      break;
    mid = next;
    r_mid = residual(mid);
  }
  sol.rho = mid;
  sol.residual = r_mid;
  sol.iterations = it;
  sol.quadrature_points = nodes;
  sol.bracket_lo = lo;
  sol.bracket_hi = hi;
  if (!(std::abs(r_mid) < options.residual_tol)) {
    std::ostringstream msg;
    msg << "solve_radius: residual " << r_mid << " above tolerance at rho=" << mid
        << " (dim=" << dim << ", mu=" << mu << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

inline double percent_deviation_from_sqrt_dim(double rho, int dim) {
  double root_d = std::sqrt(static_cast<double>(dim));
  return 100.0 * std::abs(rho - root_d) / root_d;
}

struct SweepRow {
  int dim = 0;
  double max_percent_diff = 0.0;
  double worst_mu = 0.0;
};

/// mu values 1, 1 + step, ... up to 2d + 1 inclusive.
inline std::vector<double> sweep_mu_grid(int dim, double mu_step) {
  require(mu_step > 0.0 && std::isfinite(mu_step), "mu_step must be positive");
  const double top = 2.0 * dim + 1.0;
  const auto count = static_cast<long>(std::floor((top - 1.0) / mu_step + 1e-9)) + 1;
  std::vector<double> mus;
  mus.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k)
    mus.push_back(1.0 + static_cast<double>(k) * mu_step);
  return mus;
}

/// For each d, the worst percent deviation of rho from sqrt(d) over the mu
/// grid with N = choose_big_n(d, mu). Cells run in parallel; rows come back
/// in the order of dims.
inline std::vector<SweepRow> sweep_radius(const std::vector<int> &dims, double mu_step,
                                          const RadiusSolverOptions &options = {},
                                          unsigned threads = thread_count()) {
  require(!dims.empty(), "sweep_radius: no dimensions given");
  struct Cell {
    std::size_t row;
    int dim;
    double mu;
    double percent = 0.0;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < dims.size(); ++r) {
    require(dims[r] >= 3, "sweep_radius: every dim must be >= 3 (got " +
                              std::to_string(dims[r]) + ")");
    for (double mu : sweep_mu_grid(dims[r], mu_step))
      cells.push_back({r, dims[r], mu});
  }

  parallel_for(
      cells.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
          auto &cell = cells[c];
          try {
            auto sol = solve_radius(cell.dim, cell.mu, choose_big_n(cell.dim, cell.mu), options);
            cell.percent = percent_deviation_from_sqrt_dim(sol.rho, cell.dim);
          } catch (const NumericalError &e) {
            std::ostringstream msg;
            msg << "sweep_radius failed at dim=" << cell.dim << " mu=" << cell.mu << ": "
                << e.what();
            throw NumericalError(msg.str());
          }
        }
      },
      threads);

  std::vector<SweepRow> rows(dims.size());
  for (std::size_t r = 0; r < dims.size(); ++r)
    rows[r].dim = dims[r];
  for (const auto &cell : cells) {
    auto &row = rows[cell.row];
    if (cell.percent > row.max_percent_diff) {
      row.max_percent_diff = cell.percent;
      row.worst_mu = cell.mu;
    }
  }
  return rows;
}

/// integral of u f_{d,a}(u) over [1, 1 + 2/a]; identically 2 for d >= 3,
/// 0 < a < 2.
inline double lemma_a_check(int dim, double a, const QuadratureOptions &options = {}) {
  require(dim >= 3, "lemma_a_check requires dim >= 3 (got " + std::to_string(dim) + ")");
  require(a > 0.0 && a < 2.0, "lemma_a_check requires 0 < a < 2");
  StationarityDensity f(dim, a);
  return integrate([&](double u) { return u * f(u); }, 1.0, f.upper(), options).value;
}

/// a as a function of the maximizer u of f_{d,a}:
///   a = (1 + 1 / (u (d - 3) + 1)) / (u - 1).
inline double lemma_b_a_of_u(int dim, double u) {
  require(dim >= 4, "lemma_b requires dim >= 4 (got " + std::to_string(dim) + ")");
  require(u > 1.0, "lemma_b requires u > 1");
  return (1.0 + 1.0 / (u * (dim - 3) + 1.0)) / (u - 1.0);
}

/// Closed-form maximizer of f_{d,a}: the root in (1, 1 + 2/a) of
///   (a (u - 1) - 1)(u (d - 3) + 1) = 1,
/// i.e. a c u^2 + (a - c (a + 1)) u - (a + 2) = 0 with c = d - 3.
inline double lemma_b_argmax(int dim, double a) {
  require(dim >= 4, "lemma_b requires dim >= 4 (got " + std::to_string(dim) + ")");
  require(std::isfinite(a) && a > 0.0, "lemma_b requires a > 0");
  const double c = dim - 3.0;
  const double qa = a * c;
  const double qb = a - c * (a + 1.0);
  const double qc = -(a + 2.0);
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  // The roots have opposite signs; take the positive one without cancellation.
  return qb >= 0.0 ? (-2.0 * qc) / (qb + disc) : (-qb + disc) / (2.0 * qa);
}

/// Maximizer of f_{d,a} found numerically: grid search, then golden-section
/// refinement of log f around the best grid cell.
inline double numeric_argmax(int dim, double a, int grid_points = 4096) {
  require(grid_points >= 3, "numeric_argmax needs at least 3 grid points");
  StationarityDensity f(dim, a);
  const double lo = 1.0;
  const double width = f.upper() - lo;
  auto node = [&](int k) { return lo + width * k / (grid_points + 1); };
  int best = 1;
  double best_value = f.log_value(node(1));
  for (int k = 2; k <= grid_points; ++k) {
    double v = f.log_value(node(k));
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  double left = node(best - 1);
  double right = node(best + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = right - inv_phi * (right - left);
  double x2 = left + inv_phi * (right - left);
  double f1 = f.log_value(x1);
  double f2 = f.log_value(x2);
  for (int it = 0; it < 200 && right - left > 1e-14 * right; ++it) {
    if (f1 < f2) {
      left = x1;
      x1 = x2;
      f1 = f2;
      x2 = left + inv_phi * (right - left);
      f2 = f.log_value(x2);
    } else {
      right = x2;
      x2 = x1;
      f2 = f1;
      x1 = right - inv_phi * (right - left);
      f1 = f.log_value(x1);
    }
  }
  return 0.5 * (left + right);
}

struct ForceProfile {
  std::vector<double> distances;
  std::vector<double> magnitudes;

  std::size_t peak_index() const {
    return static_cast<std::size_t>(
        std::max_element(magnitudes.begin(), magnitudes.end()) - magnitudes.begin());
  }
};

/// Pairwise repulsion magnitude 2 mu r / (1 + r^2 / N) on `steps` uniform
/// samples of [0, r_max].
inline ForceProfile force_profile(const ParamSet &params, double r_max, int steps) {
  require(std::isfinite(params.mu), "mu must be finite");
  require(std::isfinite(params.big_n) && params.big_n > 0.0, "big_n must be positive");
  require(std::isfinite(r_max) && r_max > 0.0, "force_profile: r_max must be positive");
  require(steps >= 2, "force_profile: steps must be >= 2");
  ForceProfile profile;
  profile.distances.resize(static_cast<std::size_t>(steps));
  profile.magnitudes.resize(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    double r = r_max * k / (steps - 1);
    profile.distances[k] = r;
    profile.magnitudes[k] = 2.0 * params.mu * r / (1.0 + r * r / params.big_n);
  }
  return profile;
}

} // namespace eccentric
