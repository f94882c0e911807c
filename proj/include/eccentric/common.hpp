#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace eccentric {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Bad input: wrong shapes, out-of-range parameters, malformed files.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation that was well-posed but did not converge or blew up.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string &message) {
  if (!condition)
    throw ValidationError(message);
}

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

/// Loss parameters: latent dimension d, repulsion strength mu, softening
/// scale N and the weight lambda used when the loss is a regularizer.
struct ParamSet {
  int dim = 2;
  double mu = 1.0;
  double big_n = 1.0;
  double lambda = 0.0;

  void validate() const {
    require(dim >= 2, "dim must be >= 2 (got " + std::to_string(dim) + ")");
    require(std::isfinite(mu), "mu must be finite");
    require(std::isfinite(big_n) && big_n > 0.0, "big_n must be positive");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
  }
};

/// b points in d dimensions, one per row.
class PointBatch {
public:
  PointBatch() = default;

  explicit PointBatch(Matrix data) : data_(std::move(data)) {
    require(all_finite({data_.data(), static_cast<std::size_t>(data_.size())}),
            "point batch contains non-finite entries");
  }

  PointBatch(Eigen::Index count, Eigen::Index dim) : data_(Matrix::Zero(count, dim)) {}

  Eigen::Index count() const { return data_.rows(); }
  Eigen::Index dim() const { return data_.cols(); }

  const Matrix &matrix() const { return data_; }

  std::span<const double> row(Eigen::Index i) const {
    return {data_.data() + i * data_.cols(), static_cast<std::size_t>(data_.cols())};
  }

  bool operator==(const PointBatch &other) const {
    return data_.rows() == other.data_.rows() && data_.cols() == other.data_.cols() &&
           data_ == other.data_;
  }

private:
  Matrix data_;
};

/// Worker count from ECCENTRIC_THREADS (0 or unset = hardware concurrency).
inline unsigned thread_count() {
  unsigned n = 0;
  if (const char *env = std::getenv("ECCENTRIC_THREADS")) {
    char *end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0)
      n = static_cast<unsigned>(v);
  }
  if (n == 0)
    n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(begin, end) over contiguous chunks of [0, n). Chunks are fixed by
/// the thread count so each index is always handled by the same code path.
template <class Fn>
void parallel_for(std::size_t n, Fn &&fn, unsigned threads = thread_count()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    if (n > 0)
      fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::vector<std::exception_ptr> errors(threads);
  std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end)
      break;
    pool.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto &th : pool)
    th.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace eccentric
