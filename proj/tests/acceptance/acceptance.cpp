// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (0 = all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "eccentric/alignment.hpp"
#include "eccentric/autoencoder.hpp"
#include "eccentric/cli.hpp"
#include "eccentric/kernel.hpp"
#include "eccentric/particle.hpp"
#include "eccentric/radius.hpp"
#include "eccentric/spectrum.hpp"
#include "support/oracles.hpp"

using namespace eccentric;

namespace {

int failures = 0;

void report(int id, const std::string &name, bool ok, const std::string &detail, double seconds) {
  std::printf("%s %2d %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!ok)
    ++failures;
}

std::string fmt(const char *f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void radius_thresholds() {
  Timer t;
  auto rows = sweep_radius({12, 38, 117}, 0.25);
  const double limit[] = {0.1, 0.01, 0.001};
  bool ok = rows.size() == 3;
  std::string detail;
  for (std::size_t i = 0; i < rows.size() && i < 3; ++i) {
    ok = ok && rows[i].max_percent_diff < limit[i];
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sd=%d max %.3g%% (< %g%%)", i ? ", " : "", rows[i].dim,
                  rows[i].max_percent_diff, limit[i]);
    detail += buf;
  }
  report(1, "radius thresholds", ok, detail, t.seconds());
}

void big_n_values() {
  Timer t;
  const bool exact = choose_big_n(2, 1.0) == 6.0 && choose_big_n(2, 2.5) == 1.2;
  double worst = 0.0;
  const std::pair<double, double> rows[] = {{1.0, 129.02}, {16.5, 4.00}, {64.5, 1.00}};
  for (auto [mu, want] : rows)
    worst = std::max(worst, std::abs(choose_big_n(64, mu) - want));
  report(2, "N golden values", exact && worst <= 0.005,
         std::string(exact ? "d=2 rows exact" : "d=2 rows NOT exact") + ", d=64 worst " +
             fmt("%.2e (<= 5e-3)", worst),
         t.seconds());
}

void lemma_a() {
  Timer t;
  double worst = 0.0;
  for (int d : {3, 4, 5, 8, 16, 64})
    for (double a : {0.05, 0.5, 1.0, 1.5, 1.95})
      worst = std::max(worst, std::abs(lemma_a_check(d, a) - 2.0));
  report(3, "lemma (a) moment", worst < 1e-8, fmt("worst |int u f - 2| %.2e (< 1e-8)", worst),
         t.seconds());
}

void lemma_b() {
  Timer t;
  double worst = 0.0;
  for (int d = 4; d <= 64; ++d)
    for (int k = 1; k <= 19; ++k) {
      double a = 0.1 * k;
      worst = std::max(worst, std::abs(lemma_b_argmax(d, a) - numeric_argmax(d, a)));
    }
  report(4, "lemma (b) argmax", worst < 1e-6, fmt("worst |closed - numeric| %.2e (< 1e-6)", worst),
         t.seconds());
}

double kernel_fd_error(const Matrix &z, const ParamSet &p) {
  Matrix g = batch_loss_gradient(PointBatch(z), p);
  Matrix work = z;
  double worst = 0.0;
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      work(i, k) = z(i, k) + h;
      double up = batch_loss(PointBatch(work), p);
      work(i, k) = z(i, k) - h;
      double down = batch_loss(PointBatch(work), p);
      work(i, k) = z(i, k);
      worst = std::max(worst, std::abs((up - down) / (2 * h) - g(i, k)));
    }
  return worst / g.cwiseAbs().maxCoeff();
}

double autoencoder_fd_error(const Autoencoder &ae, const Matrix &x, const ParamSet &p) {
  auto g = total_loss_gradient(x, ae, p);
  auto analytic = flatten(g.encoder);
  auto dec = flatten(g.decoder);
  analytic.insert(analytic.end(), dec.begin(), dec.end());
  auto theta = ae.encoder.flat_parameters();
  auto theta_dec = ae.decoder.flat_parameters();
  const std::size_t split = theta.size();
  theta.insert(theta.end(), theta_dec.begin(), theta_dec.end());
  Autoencoder work = ae;
  auto load = [&](const std::vector<double> &v) {
    work.encoder.set_flat_parameters(std::span<const double>(v).first(split));
    work.decoder.set_flat_parameters(std::span<const double>(v).subspan(split));
  };
  double worst = 0.0, scale = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto v = theta;
    v[i] = theta[i] + h;
    load(v);
    double up = total_loss(x, work, p).total;
    v[i] = theta[i] - h;
    load(v);
    double down = total_loss(x, work, p).total;
    worst = std::max(worst, std::abs((up - down) / (2 * h) - analytic[i]));
    scale = std::max(scale, std::abs(analytic[i]));
  }
  return worst / scale;
}

void gradient_oracles() {
  Timer t;
  std::mt19937 gen(2024);
  double kernel_worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    int d = 2 + static_cast<int>(gen() % 15);
    int b = 2 + static_cast<int>(gen() % 30);
    double mu = 1.0 + (gen() % 1000) / 1000.0 * 2.0 * d;
    Matrix z = oracle::random_matrix(b, d, 500 + inst, 0.5 + (gen() % 100) / 50.0);
    kernel_worst = std::max(kernel_worst, kernel_fd_error(z, params_with_auto_n(d, mu)));
  }
  double ae_worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    int in = 3 + static_cast<int>(gen() % 6);
    int hidden = 3 + static_cast<int>(gen() % 6);
    int latent = 2 + static_cast<int>(gen() % 3);
    Rng rng(900 + inst);
    Autoencoder ae{DenseNet::initialized(encoder_spec(in, {hidden}, latent), rng),
                   DenseNet::initialized(decoder_spec(latent, {hidden}, in), rng)};
    for (auto &b : ae.encoder.biases())
      b.setConstant(0.05);
    for (auto &b : ae.decoder.biases())
      b.setConstant(0.05);
    Matrix x = (oracle::random_matrix(6, in, 700 + inst).array() * 0.25 + 0.5).matrix();
    ParamSet p = params_with_auto_n(latent, 1.0 + (gen() % 100) / 100.0, 0.1);
    ae_worst = std::max(ae_worst, autoencoder_fd_error(ae, x, p));
  }
  bool ok = kernel_worst < 1e-6 && ae_worst < 1e-5;
  report(5, "gradient oracles", ok,
         fmt("kernel worst rel %.2e (< 1e-6), ", kernel_worst) +
             fmt("autoencoder worst rel %.2e (< 1e-5), 20 instances each", ae_worst),
         t.seconds());
}

void gram_equivalence() {
  Timer t;
  std::mt19937 gen(6);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    int d = 2 + static_cast<int>(gen() % 30);
    int b = 2 + static_cast<int>(gen() % 60);
    double mu = 1.0 + (gen() % 1000) / 1000.0 * 2.0 * d;
    Matrix z = oracle::random_matrix(b, d, 1000 + inst, 0.2 + (gen() % 100) / 25.0);
    auto p = params_with_auto_n(d, mu);
    double ours = batch_loss(PointBatch(z), p);
    double ref = oracle::gram_loss(z, p.mu, p.big_n);
    worst = std::max(worst, oracle::rel_err(ours, ref));
  }
  report(6, "reference-form equivalence", worst < 1e-10,
         fmt("worst rel %.2e over 100 batches (< 1e-10)", worst), t.seconds());
}

void particle_convergence() {
  Timer t;
  SimConfig c;
  c.params = params_with_auto_n(16, 1.0);
  c.count = 512;
  c.steps = 5000;
  c.step_size = 0.5;
  c.seed = 17;
  auto rep = simulate(c);
  const double band = 4.0 * std::sqrt(16.0 / 512.0);
  bool radius_ok = std::abs(rep.radial.mean - 4.0) < 0.04;
  bool trace_ok = std::abs(rep.spectrum.trace - 16.0) < 0.8;
  bool eig_ok = (rep.spectrum.eigenvalues.array() - 1.0).abs().maxCoeff() < band;

  SimConfig pair;
  pair.params = params_with_auto_n(3, 1.0);
  pair.count = 2;
  pair.steps = 400;
  pair.step_size = 0.5;
  pair.seed = 1;
  auto prep = simulate(pair);
  const double r_star = std::sqrt(pair.params.big_n * (4.0 * pair.params.mu - 1.0)) / 2.0;
  const Matrix &z = prep.final_batch.matrix();
  double pair_err = std::max({std::abs(z.row(0).norm() - r_star), std::abs(z.row(1).norm() - r_star),
                              (z.row(0) + z.row(1)).norm()});
  bool ok = radius_ok && trace_ok && eig_ok && pair_err < 1e-6;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "mean radius %.4f (4 +- 1%%), trace %.3f (16 +- 5%%), eig in [%.3f, %.3f] "
                "(1 +- %.3f), pair err %.1e (< 1e-6)",
                rep.radial.mean, rep.spectrum.trace, rep.spectrum.eigenvalues.minCoeff(),
                rep.spectrum.eigenvalues.maxCoeff(), band, pair_err);
  report(7, "particle convergence", ok, buf, t.seconds());
}

void force_profile_peak() {
  Timer t;
  bool ok = true;
  std::string detail;
  for (auto [mu, n] : {std::pair{1.0, 129.016}, std::pair{64.5, 1.0}}) {
    ParamSet p{64, mu, n, 0.0};
    const int steps = 1001;
    const double r_max = 4.0 * std::sqrt(n);
    auto prof = force_profile(p, r_max, steps);
    const double grid = r_max / (steps - 1);
    double off = std::abs(prof.distances[prof.peak_index()] - std::sqrt(n));
    ok = ok && off <= grid;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s(mu=%g, N=%g) |argmax - sqrt N| %.2e <= step %.2e",
                  detail.empty() ? "" : ", ", mu, n, off, grid);
    detail += buf;
  }
  report(8, "force profile peak", ok, detail, t.seconds());
}

Matrix separated(int n, int d, std::uint32_t seed) {
  Matrix m = oracle::random_matrix(n, d, seed);
  m.rowwise() -= m.colwise().mean();
  double s = 1.0;
  for (int k = d - 1; k >= 0; --k, s *= 1.6)
    m.col(k) *= s / std::sqrt(m.col(k).squaredNorm() / (n - 1));
  return m;
}

Matrix signed_columns(const Matrix &m, const std::vector<int> &perm, const std::vector<int> &signs) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = signs[i] * m.col(perm[i]);
  return out;
}

void alignment_recovery() {
  Timer t;
  int cases = 0, recovered = 0;
  for (int d = 1; d <= 5; ++d) {
    Matrix e1 = separated(120, d, 40 + d);
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      for (int mask = 0; mask < (1 << d); ++mask) {
        std::vector<int> signs(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
          signs[i] = (mask >> i) & 1 ? -1 : 1;
        Matrix e2 = signed_columns(e1, perm, signs);
        auto truth = oracle::exact_signed_perms(e1, e2);
        auto res = align(Embedding{e1}, Embedding{e2});
        bool ok = truth.size() == 1 && res.converged && res.aligned1.coords == res.aligned2.coords;
        for (int i = 0; ok && i < d; ++i) {
          int src = res.q.perm[i];
          ok = res.p.perm[i] == truth[0].perm[src] &&
               res.p.signs[i] == res.q.signs[i] * truth[0].signs[src];
        }
        ++cases;
        recovered += ok;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  int high_ok = 0;
  const int high_cases = 5;
  for (int c = 0; c < high_cases; ++c) {
    const int n = 400, d = 64;
    Matrix base = oracle::random_matrix(n, d, 60 + c);
    for (int k = 0; k < d; ++k)
      base.col(k) *= 3.0 * std::pow(0.97, k);
    std::mt19937 gen(70 + c);
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<int> signs(d);
    for (auto &s : signs)
      s = gen() % 2 ? 1 : -1;
    Matrix e2 = signed_columns(base, perm, signs) + oracle::random_matrix(n, d, 80 + c, 0.3 + 0.2 * c);
    auto res = align(Embedding{base}, Embedding{e2});
    bool nonneg = res.corr_after.diagonal().minCoeff() >= 0.0;
    bool more = res.corr_after.diagonal().cwiseAbs().sum() > res.corr_before.diagonal().cwiseAbs().sum();
    high_ok += nonneg && more;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "d<=5 exhaustive %d/%d recovered; d=64 %d/%d with diag >= 0 and "
                "larger diagonal mass", recovered, cases, high_ok, high_cases);
  report(9, "alignment recovery", recovered == cases && high_ok == high_cases, buf, t.seconds());
}

void toy_autoencoder() {
  Timer t;
  Dataset data = two_ring(1000, 7);
  auto run = [&](double lambda, std::uint64_t seed) {
    TrainConfig c;
    c.encoder = encoder_spec(data.width(), {32, 32}, 2);
    c.decoder = decoder_spec(2, {32, 32}, data.width());
    c.params = params_with_auto_n(2, 1.0, lambda);
    c.epochs = 800;
    c.learning_rate = 5e-3;
    c.seed = seed;
    return train(c, data).embedding;
  };
  const double lo = 0.7 * std::sqrt(2.0), hi = 1.3 * std::sqrt(2.0);
  bool ok = true;
  double worst_frac = 1.0, worst_ratio = 1e9, worst_spec = 0.0;
  std::vector<Vector> spectra;
  for (std::uint64_t seed : {1, 2}) {
    auto tight = run(0.1, seed);
    auto loose = run(0.001, seed);
    Eigen::VectorXd r = tight.matrix().rowwise().norm();
    double frac = static_cast<double>(std::count_if(r.begin(), r.end(),
                                                    [&](double v) { return v >= lo && v <= hi; })) /
                  static_cast<double>(r.size());
    double ratio = radial_stats(loose).std / radial_stats(tight).std;
    worst_frac = std::min(worst_frac, frac);
    worst_ratio = std::min(worst_ratio, ratio);
    spectra.push_back(spectrum(tight).eigenvalues);
  }
  worst_spec = (spectra[0] - spectra[1]).cwiseAbs().maxCoeff();
  ok = worst_frac >= 0.95 && worst_ratio >= 2.0 && worst_spec < 0.15;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "in-band fraction %.3f (>= 0.95), radial std ratio %.2f (>= 2), seed spectra diff "
                "%.3f (< 0.15)",
                worst_frac, worst_ratio, worst_spec);
  report(10, "toy autoencoder", ok, buf, t.seconds());
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void cli_determinism() {
  Timer t;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "eccentric_acceptance";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs = {
      {"solve-radius", "--dim", "38", "--mu", "3", "--auto-n"},
      {"sweep-radius", "--dims", "12", "--mu-step", "0.5"},
      {"force-profile", "--dim", "8", "--mu", "1", "--auto-n"},
      {"lemma-check", "--dim", "16", "--a", "0.5"},
      {"simulate", "--dim", "4", "--mu", "1", "--auto-n", "--count", "64", "--steps", "300",
       "--seed", "5"},
      {"train", "--dim", "2", "--mu", "1", "--auto-n", "--n", "300", "--epochs", "5", "--seed", "3"},
      {"sample", "--dim", "3", "--n", "50", "--seed", "9"},
  };
  int identical = 0, total = 0;
  std::ostringstream sink;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::string> hashes[2];
    for (int rep = 0; rep < 2; ++rep) {
      auto args = runs[i];
      fs::path dir = root / (std::to_string(i) + "_" + std::to_string(rep));
      args.insert(args.end(), {"--out-dir", dir.string()});
      if (cli::run(args, sink, sink) != 0)
        break;
      for (const auto &entry : fs::directory_iterator(dir))
        if (entry.path().filename() != "manifest.json")
          hashes[rep].push_back(entry.path().filename().string() + ":" +
                                cli::sha256_hex(slurp(entry.path())));
      std::sort(hashes[rep].begin(), hashes[rep].end());
    }
    ++total;
    identical += !hashes[0].empty() && hashes[0] == hashes[1];
  }
  fs::remove_all(root);
  report(11, "cli determinism", identical == total,
         std::to_string(identical) + "/" + std::to_string(total) +
             " subcommands byte-identical across repeated runs",
         t.seconds());
}

} // namespace

int main() {
  radius_thresholds();
  big_n_values();
  lemma_a();
  lemma_b();
  gradient_oracles();
  gram_equivalence();
  particle_convergence();
  force_profile_peak();
  alignment_recovery();
  toy_autoencoder();
  cli_determinism();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
