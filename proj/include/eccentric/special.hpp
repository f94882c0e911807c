#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "eccentric/common.hpp"

namespace eccentric {

/// log Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
inline double log_gamma(double x) {
  require(x > 0.0 && std::isfinite(x), "log_gamma: argument must be positive and finite");
  static constexpr std::array<double, 9> coeff = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  static constexpr double g = 7.0;
  if (x < 0.5) {
    // Reflection keeps the series in its accurate range.
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
           log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double sum = coeff[0];
  for (int i = 1; i < 9; ++i)
    sum += coeff[i] / (z + i);
  double t = z + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

/// Gamma(d/2) / Gamma((d-1)/2). Uses the log-gamma difference for moderate d
/// and the asymptotic series of Gamma(x + 1/2) / Gamma(x) beyond, where the
/// difference of two large logs would lose digits.
inline double gamma_ratio(int dim) {
  require(dim >= 2, "gamma_ratio: dim must be >= 2 (got " + std::to_string(dim) + ")");
  if (dim < 1000)
    return std::exp(log_gamma(0.5 * dim) - log_gamma(0.5 * (dim - 1)));
  double x = 0.5 * (dim - 1);
  double t = 1.0 / x;
  double series =
      1.0 + t * (-1.0 / 8.0 + t * (1.0 / 128.0 + t * (5.0 / 1024.0 + t * (-21.0 / 32768.0))));
  return std::sqrt(x) * series;
}

} // namespace eccentric
