#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "eccentric/common.hpp"

namespace eccentric {

struct QuadratureOptions {
  double rel_tol = 1e-12;
  double abs_floor = 1e-300;
  int initial_panels = 16;
  long max_nodes = 1L << 20;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long nodes = 0;
};

namespace detail {

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel &other) const { return error < other.error; }
};

template <class F> Panel kronrod_panel(const F &f, double lo, double hi) {
  double center = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo);
  double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    double dx = half * kKronrodNodes[i];
    double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1)
      gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature. The panel with the largest
/// error estimate is halved until the summed estimate drops below
/// rel_tol * |integral|. Exceeding max_nodes throws NumericalError.
template <class F>
QuadratureResult integrate(const F &f, double lo, double hi,
                           const QuadratureOptions &options = {}) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          "integrate: interval must be finite with lo <= hi");
  if (lo == hi)
    return {};

  std::priority_queue<detail::Panel> panels;
  double value = 0.0;
  double error = 0.0;
  long nodes = 0;
  const int n0 = std::max(1, options.initial_panels);
  for (int k = 0; k < n0; ++k) {
    double a = lo + (hi - lo) * k / n0;
    double b = (k + 1 == n0) ? hi : lo + (hi - lo) * (k + 1) / n0;
    auto p = detail::kronrod_panel(f, a, b);
    nodes += 15;
    value += p.value;
    error += p.error;
    panels.push(p);
  }

  auto tolerance = [&] { return std::max(options.rel_tol * std::abs(value), options.abs_floor); };

  while (error > tolerance()) {
    if (nodes + 30 > options.max_nodes) {
      throw NumericalError("quadrature did not reach relative tolerance " +
                           std::to_string(options.rel_tol) + " within " +
                           std::to_string(options.max_nodes) + " nodes (error estimate " +
                           std::to_string(error) + ")");
    }
    auto worst = panels.top();
    panels.pop();
    double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Panel can no longer be split in floating point.
      throw NumericalError("quadrature panel collapsed to machine precision near " +
                           std::to_string(mid));
    }
    auto left = detail::kronrod_panel(f, worst.lo, mid);
    auto right = detail::kronrod_panel(f, mid, worst.hi);
    nodes += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  // Re-sum from the panels so the running-update rounding does not leak in.
  std::vector<detail::Panel> final_panels;
  final_panels.reserve(panels.size());
  while (!panels.empty()) {
    final_panels.push_back(panels.top());
    panels.pop();
  }
  std::sort(final_panels.begin(), final_panels.end(),
            [](const auto &a, const auto &b) { return a.lo < b.lo; });
  double total = 0.0;
  double total_error = 0.0;
  for (const auto &p : final_panels) {
    total += p.value;
    total_error += p.error;
  }
  if (!std::isfinite(total))
    throw NumericalError("quadrature produced a non-finite value");
  return {total, total_error, nodes};
}

} // namespace eccentric
