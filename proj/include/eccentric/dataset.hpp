#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/random.hpp"

namespace eccentric {

/// Feature vectors (one per row, values in [0, 1]) with optional labels.
struct Dataset {
  Matrix features;
  std::vector<int> labels; // empty when unlabelled

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index width() const { return features.cols(); }
  bool labelled() const { return !labels.empty(); }

  Dataset subset(const std::vector<Eigen::Index> &rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), width());
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.features.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
    if (labelled())
      for (auto r : rows)
        out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    return out;
  }
};

namespace detail {

// Plane coordinates in roughly [-1, 1]^2 mapped into [0.1, 0.9]^2.
inline double to_unit(double v) { return std::clamp(0.5 + 0.4 * v, 0.0, 1.0); }

} // namespace detail

/// k isotropic Gaussian blobs with centres evenly spaced on a circle.
inline Dataset gaussian_mixture(int k, int n, std::uint64_t seed, double spread = 0.15) {
  require(k >= 1 && n >= 1, "gaussian-mixture: k and n must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    double angle = 2.0 * std::numbers::pi * c / k;
    ds.features(i, 0) = detail::to_unit(0.7 * std::cos(angle) + spread * rng.normal());
    ds.features(i, 1) = detail::to_unit(0.7 * std::sin(angle) + spread * rng.normal());
    ds.labels[static_cast<std::size_t>(i)] = c;
  }
  return ds;
}

/// Concentric noisy rings with radii (j + 1) / rings, j = 0..rings-1. With
/// rings = 2 these are the rings of the two-ring set.
inline Dataset noisy_ring(int n, std::uint64_t seed, int rings = 1, double noise = 0.03) {
  require(n >= 1 && rings >= 1, "noisy-ring: n and rings must be positive");
  require(noise >= 0.0, "noisy-ring: noise must be >= 0");
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int ring = static_cast<int>(rng.below(static_cast<std::uint64_t>(rings)));
    double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double r = static_cast<double>(ring + 1) / rings + noise * rng.normal();
    ds.features(i, 0) = detail::to_unit(r * std::cos(theta));
    ds.features(i, 1) = detail::to_unit(r * std::sin(theta));
    ds.labels[static_cast<std::size_t>(i)] = ring;
  }
  return ds;
}

/// Two noisy rings (radii 0.5 and 1) in the first two features, padded with
/// `nuisance_dims` independent N(0.5, nuisance_sd^2) features. The padding
/// cannot pass a 2-wide bottleneck, so reconstruction error never vanishes.
inline Dataset two_ring(int n, std::uint64_t seed, double noise = 0.03, int nuisance_dims = 6,
                        double nuisance_sd = 0.05) {
  require(nuisance_dims >= 0, "two-ring: nuisance_dims must be >= 0");
  require(nuisance_sd >= 0.0, "two-ring: nuisance_sd must be >= 0");
  Dataset rings = noisy_ring(n, seed, 2, noise);
  Dataset ds;
  ds.features.resize(n, 2 + nuisance_dims);
  ds.features.leftCols(2) = rings.features;
  Rng rng(seed ^ 0x6a09e667f3bcc908ULL);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nuisance_dims; ++k)
      ds.features(i, 2 + k) = std::clamp(0.5 + nuisance_sd * rng.normal(), 0.0, 1.0);
  ds.labels = std::move(rings.labels);
  return ds;
}

/// A planar slice of the swiss roll, t in [1.5 pi, 4.5 pi]; labels split t
/// into four equal bands.
inline Dataset swiss_roll_slice(int n, std::uint64_t seed, double noise = 0.02) {
  require(n >= 1, "swiss-roll: n must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(static_cast<std::size_t>(n));
  const double t0 = 1.5 * std::numbers::pi;
  const double t1 = 4.5 * std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    double t = rng.uniform(t0, t1);
    ds.features(i, 0) = detail::to_unit(t * std::cos(t) / t1 + noise * rng.normal());
    ds.features(i, 1) = detail::to_unit(t * std::sin(t) / t1 + noise * rng.normal());
    ds.labels[static_cast<std::size_t>(i)] = std::min(3, static_cast<int>(4.0 * (t - t0) / (t1 - t0)));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// IDX files: big-endian u32 magic, big-endian u32 dimensions, then u8 data.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

class DataError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

namespace detail {

inline std::vector<unsigned char> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char> &bytes, std::size_t offset,
                               const std::string &path) {
  if (offset + 4 > bytes.size()) {
    throw DataError("'" + path + "': truncated header, need 4 bytes at offset " +
                    std::to_string(offset) + " but file has " + std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline void check_magic(std::uint32_t got, std::uint32_t want, const std::string &path) {
  if (got != want) {
    std::ostringstream msg;
    msg << "'" << path << "': bad magic number 0x" << std::hex << got << " at offset 0 (expected 0x"
        << want << ")";
    throw DataError(msg.str());
  }
}

inline void check_payload(const std::vector<unsigned char> &bytes, std::size_t offset,
                          std::size_t need, const std::string &path) {
  if (bytes.size() < offset + need) {
    throw DataError("'" + path + "': truncated file, expected " + std::to_string(need) +
                    " data bytes from offset " + std::to_string(offset) + " but only " +
                    std::to_string(bytes.size() - std::min(bytes.size(), offset)) + " present");
  }
}

inline void put_be32(std::ofstream &out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

} // namespace detail

struct IdxImages {
  int rows = 0;
  int cols = 0;
  Matrix pixels; // items x (rows*cols), scaled to [0, 1]
};

/// Reads up to `limit` images (all when limit < 0).
inline IdxImages read_idx_images(const std::string &path, long limit = -1) {
  auto bytes = detail::read_file(path);
  detail::check_magic(detail::read_be32(bytes, 0, path), kIdxImageMagic, path);
  std::size_t count = detail::read_be32(bytes, 4, path);
  IdxImages img;
  img.rows = static_cast<int>(detail::read_be32(bytes, 8, path));
  img.cols = static_cast<int>(detail::read_be32(bytes, 12, path));
  const std::size_t pixels = static_cast<std::size_t>(img.rows) * img.cols;
  detail::check_payload(bytes, 16, count * pixels, path);
  if (limit >= 0)
    count = std::min(count, static_cast<std::size_t>(limit));
  img.pixels.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t p = 0; p < pixels; ++p)
      img.pixels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          bytes[16 + i * pixels + p] / 255.0;
  return img;
}

inline std::vector<int> read_idx_labels(const std::string &path, long limit = -1) {
  auto bytes = detail::read_file(path);
  detail::check_magic(detail::read_be32(bytes, 0, path), kIdxLabelMagic, path);
  std::size_t count = detail::read_be32(bytes, 4, path);
  detail::check_payload(bytes, 8, count, path);
  if (limit >= 0)
    count = std::min(count, static_cast<std::size_t>(limit));
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

/// Image/label pair; the two files must hold the same number of items.
inline Dataset load_idx(const std::string &images_path, const std::string &labels_path,
                        long limit = -1) {
  auto images = read_idx_images(images_path);
  Dataset ds;
  if (!labels_path.empty()) {
    ds.labels = read_idx_labels(labels_path);
    if (ds.labels.size() != static_cast<std::size_t>(images.pixels.rows())) {
      throw DataError("IDX count mismatch: '" + images_path + "' has " +
                      std::to_string(images.pixels.rows()) + " images but '" + labels_path +
                      "' has " + std::to_string(ds.labels.size()) + " labels");
    }
  }
  Eigen::Index n = images.pixels.rows();
  if (limit >= 0)
    n = std::min<Eigen::Index>(n, limit);
  ds.features = images.pixels.topRows(n);
  if (ds.labelled())
    ds.labels.resize(static_cast<std::size_t>(n));
  return ds;
}

inline void write_idx_images(const std::string &path, int rows, int cols,
                             const std::vector<std::uint8_t> &pixels) {
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  require(per > 0 && pixels.size() % per == 0, "write_idx_images: pixel count not a multiple of rows*cols");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path + "'");
  detail::put_be32(out, kIdxImageMagic);
  detail::put_be32(out, static_cast<std::uint32_t>(pixels.size() / per));
  detail::put_be32(out, static_cast<std::uint32_t>(rows));
  detail::put_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline void write_idx_labels(const std::string &path, const std::vector<std::uint8_t> &labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path + "'");
  detail::put_be32(out, kIdxLabelMagic);
  detail::put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char *>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

/// Where a dataset comes from: a named generator or an IDX file pair.
struct DatasetSource {
  std::string kind = "two-ring"; // gaussian-mixture | noisy-ring | two-ring | swiss-roll | idx
  int n = 1000;
  int k = 3;
  int rings = 1;
  double noise = 0.03;
  int nuisance_dims = 6;
  double nuisance_sd = 0.05;
  std::uint64_t seed = 0;
  std::string idx_images;
  std::string idx_labels;
  long limit = -1;
};

inline Dataset load_dataset(const DatasetSource &src) {
  if (src.kind == "gaussian-mixture")
    return gaussian_mixture(src.k, src.n, src.seed);
  if (src.kind == "noisy-ring")
    return noisy_ring(src.n, src.seed, src.rings, src.noise);
  if (src.kind == "two-ring")
    return two_ring(src.n, src.seed, src.noise, src.nuisance_dims, src.nuisance_sd);
  if (src.kind == "swiss-roll")
    return swiss_roll_slice(src.n, src.seed);
  if (src.kind == "idx") {
    require(!src.idx_images.empty(), "idx dataset needs an images file");
    return load_idx(src.idx_images, src.idx_labels, src.limit);
  }
  throw ValidationError("unknown dataset '" + src.kind +
                        "' (expected gaussian-mixture, noisy-ring, two-ring, swiss-roll or idx)");
}

} // namespace eccentric
