#pragma once

// Command-line front end. Every subcommand turns a resolved RunConfig into a
// list of named outputs; the dispatcher writes them to --out-dir (all
// outputs plus manifest.json), --out FILE (the first output plus
// FILE.manifest.json) or standard output (the first output only).
//
// Exit codes: 0 success, 1 bad input or usage, 2 numerical failure or a
// failed --verify.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "eccentric/alignment.hpp"
#include "eccentric/analysis.hpp"
#include "eccentric/autoencoder.hpp"
#include "eccentric/config.hpp"
#include "eccentric/csv.hpp"
#include "eccentric/dataset.hpp"
#include "eccentric/kernel.hpp"
#include "eccentric/particle.hpp"
#include "eccentric/radius.hpp"
#include "eccentric/spectrum.hpp"

namespace eccentric::cli {

using json = nlohmann::ordered_json;

struct Output {
  std::string name;
  std::string content;
};

struct Command {
  std::string name;
  std::string summary;
  Schema schema;
  std::function<std::vector<Output>(const RunConfig &, std::ostream &)> run;
};

inline std::string sha256_hex(const std::string &data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

namespace detail {

inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

inline json vector_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

inline KeySpec key(std::string name, ValueType type, std::optional<std::string> fallback,
                   std::string help, bool required = false) {
  return KeySpec{std::move(name), type, required, std::move(fallback), std::move(help)};
}

inline KeySpec required_key(std::string name, ValueType type, std::string help) {
  return KeySpec{std::move(name), type, true, std::nullopt, std::move(help)};
}

inline Schema param_keys(bool with_lambda = false) {
  Schema s = {
      required_key("dim", ValueType::integer, "latent dimension d"),
      required_key("mu", ValueType::real, "repulsion strength"),
      key("big-n", ValueType::real, std::nullopt, "softening scale N"),
      key("auto-n", ValueType::boolean, "false", "derive N from (dim, mu)"),
  };
  if (with_lambda)
    s.push_back(key("lambda", ValueType::real, "0.1", "regularizer weight"));
  return s;
}

inline Schema dataset_keys() {
  return {
      key("dataset", ValueType::text, "two-ring",
          "gaussian-mixture | noisy-ring | two-ring | swiss-roll | idx"),
      key("n", ValueType::integer, "1000", "items for synthetic datasets"),
      key("k", ValueType::integer, "3", "gaussian-mixture components"),
      key("rings", ValueType::integer, "1", "noisy-ring ring count"),
      key("noise", ValueType::real, "0.03", "ring radial noise"),
      key("nuisance-dims", ValueType::integer, "6", "two-ring padding features"),
      key("nuisance-sd", ValueType::real, "0.05", "two-ring padding feature std"),
      key("idx-images", ValueType::text, std::nullopt, "IDX image file"),
      key("idx-labels", ValueType::text, std::nullopt, "IDX label file"),
      key("limit", ValueType::integer, "-1", "keep the first items of an IDX file (-1 = all)"),
  };
}

inline Schema join(Schema a, const Schema &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline ParamSet params_from(const RunConfig &cfg) {
  ParamSet p;
  p.dim = static_cast<int>(cfg.integer("dim"));
  p.mu = cfg.real("mu");
  if (cfg.has("lambda"))
    p.lambda = cfg.real("lambda");
  const bool auto_n = cfg.boolean("auto-n");
  require(!(auto_n && cfg.has("big-n")), "give either --big-n or --auto-n, not both");
  require(auto_n || cfg.has("big-n"), "missing required key 'big-n' (or pass --auto-n)");
  if (auto_n) {
    require(p.dim >= 2, "dim must be >= 2 (got " + std::to_string(p.dim) + ")");
    p = params_with_auto_n(p.dim, p.mu, p.lambda);
  } else {
    p.big_n = cfg.real("big-n");
  }
  p.validate();
  return p;
}

inline DatasetSource dataset_from(const RunConfig &cfg) {
  DatasetSource src;
  src.kind = cfg.text("dataset");
  src.n = static_cast<int>(cfg.integer("n"));
  src.k = static_cast<int>(cfg.integer("k"));
  src.rings = static_cast<int>(cfg.integer("rings"));
  src.noise = cfg.real("noise");
  src.nuisance_dims = static_cast<int>(cfg.integer("nuisance-dims"));
  src.nuisance_sd = cfg.real("nuisance-sd");
  src.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  if (cfg.has("idx-images"))
    src.idx_images = cfg.text("idx-images");
  if (cfg.has("idx-labels"))
    src.idx_labels = cfg.text("idx-labels");
  src.limit = cfg.integer("limit");
  return src;
}

inline Embedding read_embedding(const std::string &path, std::vector<int> *labels = nullptr) {
  auto m = read_matrix_csv(path);
  require(m.values.rows() >= 1, "'" + path + "' holds no rows");
  if (labels)
    *labels = m.labels;
  return Embedding{std::move(m.values)};
}

inline json spectrum_json(const SpectrumReport &s) {
  json j;
  j["eigenvalues"] = vector_json(s.eigenvalues);
  j["trace"] = s.trace;
  j["mean"] = vector_json(s.mean);
  j["condition"] = s.eigenvalues[s.eigenvalues.size() - 1] > 0.0 ? json(s.condition()) : json();
  return j;
}

inline json signed_perm_json(const SignedPermutation &s) {
  return json{{"permutation", s.perm}, {"signs", s.signs}};
}

// ---------------------------------------------------------------------------

inline std::vector<Output> solve_radius_cmd(const RunConfig &cfg) {
  const int dim = static_cast<int>(cfg.integer("dim"));
  RadiusProblem{dim, 1.0, 1.0}.validate();
  ParamSet p = params_from(cfg);
  auto sol = solve_radius(p.dim, p.mu, p.big_n);
  json j;
  j["dim"] = p.dim;
  j["mu"] = p.mu;
  j["big_n"] = p.big_n;
  j["rho"] = sol.rho;
  j["sqrt_dim"] = std::sqrt(static_cast<double>(p.dim));
  j["percent_diff"] = percent_deviation_from_sqrt_dim(sol.rho, p.dim);
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  j["quadrature_points"] = sol.quadrature_points;
  j["bracket"] = {sol.bracket_lo, sol.bracket_hi};
  return {{"radius.json", dump(j)}};
}

inline std::vector<Output> sweep_radius_cmd(const RunConfig &cfg) {
  auto rows = sweep_radius(cfg.int_list("dims"), cfg.real("mu-step"));
  CsvWriter w({"d", "max_percent_diff"});
  for (const auto &r : rows)
    w.row({std::to_string(r.dim), format_double(r.max_percent_diff)});
  return {{"sweep.csv", w.str()}};
}

inline std::vector<Output> force_profile_cmd(const RunConfig &cfg) {
  ParamSet p = params_from(cfg);
  double r_max = cfg.has("r-max") ? cfg.real("r-max") : 4.0 * std::sqrt(p.big_n);
  auto prof = force_profile(p, r_max, static_cast<int>(cfg.integer("steps")));
  CsvWriter w({"r", "magnitude"});
  for (std::size_t k = 0; k < prof.distances.size(); ++k)
    w.row(std::vector<double>{prof.distances[k], prof.magnitudes[k]});
  return {{"force_profile.csv", w.str()}};
}

inline std::vector<Output> lemma_check_cmd(const RunConfig &cfg) {
  const int dim = static_cast<int>(cfg.integer("dim"));
  const double a = cfg.real("a");
  require(dim >= 3, "lemma checks require dim >= 3 (got " + std::to_string(dim) + ")");
  json j;
  j["dim"] = dim;
  j["a"] = a;
  j["integral_u_f"] = lemma_a_check(dim, a);
  if (dim >= 4) {
    double u = lemma_b_argmax(dim, a);
    j["closed_form_argmax"] = u;
    j["numeric_argmax"] = numeric_argmax(dim, a);
    j["a_round_trip"] = lemma_b_a_of_u(dim, u);
  }
  return {{"lemma.json", dump(j)}};
}

inline std::vector<Output> simulate_cmd(const RunConfig &cfg) {
  SimConfig sc;
  sc.params = params_from(cfg);
  sc.count = static_cast<int>(cfg.integer("count"));
  sc.steps = static_cast<int>(cfg.integer("steps"));
  sc.step_size = cfg.real("step-size");
  sc.init_scale = cfg.real("init-scale");
  sc.record_every = static_cast<int>(cfg.integer("record-every"));
  sc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  auto rep = simulate(sc);
  json j;
  j["dim"] = sc.params.dim;
  j["mu"] = sc.params.mu;
  j["big_n"] = sc.params.big_n;
  j["count"] = sc.count;
  j["steps"] = sc.steps;
  j["radial_mean"] = rep.radial.mean;
  j["radial_std"] = rep.radial.std;
  j["final_loss"] = rep.loss_trace.back();
  j["spectrum"] = spectrum_json(rep.spectrum);
  CsvWriter loss({"step", "loss"});
  for (std::size_t k = 0; k < rep.loss_steps.size(); ++k)
    loss.row({std::to_string(rep.loss_steps[k]), format_double(rep.loss_trace[k])});
  return {{"summary.json", dump(j)},
          {"points.csv", matrix_csv(rep.final_batch.matrix(), "z")},
          {"loss.csv", loss.str()}};
}

inline TrainConfig train_config_from(const RunConfig &cfg, int input_width) {
  TrainConfig tc;
  tc.params = params_from(cfg);
  auto hidden = cfg.int_list("hidden");
  tc.encoder = encoder_spec(input_width, hidden, tc.params.dim);
  std::vector<int> reversed(hidden.rbegin(), hidden.rend());
  tc.decoder = decoder_spec(tc.params.dim, reversed, input_width);
  tc.batch_size = static_cast<int>(cfg.integer("batch-size"));
  tc.epochs = static_cast<int>(cfg.integer("epochs"));
  tc.learning_rate = cfg.real("lr");
  tc.weight_decay = cfg.real("weight-decay");
  tc.adam_beta1 = cfg.real("beta1");
  tc.adam_beta2 = cfg.real("beta2");
  tc.adam_epsilon = cfg.real("epsilon");
  tc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  return tc;
}

inline std::vector<Output> train_cmd(const RunConfig &cfg) {
  Dataset data = load_dataset(dataset_from(cfg));
  TrainConfig tc = train_config_from(cfg, static_cast<int>(data.width()));
  auto rep = train(tc, data);
  CsvWriter trace({"epoch", "recon", "reg"});
  for (std::size_t e = 0; e < rep.recon_trace.size(); ++e)
    trace.row({std::to_string(e + 1), format_double(rep.recon_trace[e]),
               format_double(rep.reg_trace[e])});
  auto radial = radial_stats(rep.embedding);
  json j;
  j["items"] = data.size();
  j["latent_dim"] = tc.params.dim;
  j["big_n"] = tc.params.big_n;
  j["final_recon"] = rep.recon_trace.empty() ? json() : json(rep.recon_trace.back());
  j["final_reg"] = rep.reg_trace.empty() ? json() : json(rep.reg_trace.back());
  j["radial_mean"] = radial.mean;
  j["radial_std"] = radial.std;
  j["spectrum"] = spectrum_json(spectrum(rep.embedding));
  return {{"summary.json", dump(j)},
          {"model.eae", checkpoint_bytes(rep.model)},
          {"trace.csv", trace.str()},
          {"embedding.csv", matrix_csv(rep.embedding.matrix(), "z",
                                       data.labelled() ? &data.labels : nullptr)}};
}

inline std::vector<Output> encode_cmd(const RunConfig &cfg) {
  Autoencoder ae = load_checkpoint(cfg.text("model"));
  Dataset data = load_dataset(dataset_from(cfg));
  auto z = encode_dataset(ae, data);
  return {{"embedding.csv",
           matrix_csv(z.matrix(), "z", data.labelled() ? &data.labels : nullptr)}};
}

inline std::vector<Output> spectrum_cmd(const RunConfig &cfg) {
  auto batch = PointBatch(read_embedding(cfg.text("input")).coords);
  auto rep = spectrum(batch);
  Matrix vecs = rep.eigenvectors;
  return {{"spectrum.json", dump(spectrum_json(rep))},
          {"eigenvectors.csv", matrix_csv(vecs, "v")},
          {"principal.csv", matrix_csv(to_principal_embedding(batch, rep).coords, "p")}};
}

inline Embedding maybe_principal(Embedding e, bool principal) {
  if (!principal)
    return e;
  return to_principal_embedding(PointBatch(std::move(e.coords)));
}

inline std::vector<Output> align_cmd(const RunConfig &cfg) {
  const bool principal = cfg.boolean("principal");
  auto e1 = maybe_principal(read_embedding(cfg.text("input1")), principal);
  auto e2 = maybe_principal(read_embedding(cfg.text("input2")), principal);
  auto res = align(e1, e2);
  json j;
  j["p"] = signed_perm_json(res.p);
  j["q"] = signed_perm_json(res.q);
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["diagonal_before"] = vector_json(res.corr_before.diagonal());
  j["diagonal_after"] = vector_json(res.corr_after.diagonal());
  return {{"alignment.json", dump(j)},
          {"corr_before.csv", matrix_csv(Matrix(res.corr_before), "c")},
          {"corr_after.csv", matrix_csv(Matrix(res.corr_after), "c")},
          {"aligned1.csv", matrix_csv(res.aligned1.coords, "p")},
          {"aligned2.csv", matrix_csv(res.aligned2.coords, "q")}};
}

inline std::vector<Output> metrics_cmd(const RunConfig &cfg) {
  auto m = similarity_metrics(read_embedding(cfg.text("input1")),
                              read_embedding(cfg.text("input2")));
  json j;
  j["rms_distance"] = m.rms_distance;
  j["mean_cosine"] = m.mean_cosine;
  j["mean_angle_deg"] = m.mean_angle_deg;
  j["zero_rows"] = m.zero_rows;
  return {{"metrics.json", dump(j)}};
}

inline std::vector<Output> sample_cmd(const RunConfig &cfg, std::ostream &err) {
  auto mode = parse_sample_mode(cfg.text("mode"));
  std::optional<PointBatch> ref;
  if (mode == SampleMode::matched) {
    require(cfg.has("reference"), "matched sampling needs --reference FILE");
    ref = PointBatch(read_embedding(cfg.text("reference")).coords);
  }
  int dim = cfg.has("dim") ? static_cast<int>(cfg.integer("dim"))
                           : (ref ? static_cast<int>(ref->dim()) : -1);
  require(dim >= 1, "missing required key 'dim'");
  auto res = sample_latents(mode, ref ? &*ref : nullptr, static_cast<int>(cfg.integer("n")), dim,
                            static_cast<std::uint64_t>(cfg.integer("seed")));
  if (res.rank_deficient)
    err << "warning: reference has fewer than dim + 1 items; covariance factor is rank deficient\n";
  return {{"samples.csv", matrix_csv(res.samples.matrix(), "z")}};
}

inline std::vector<Output> knn_cmd(const RunConfig &cfg) {
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  auto train_e = read_embedding(cfg.text("train"), &train_labels);
  auto test_e = read_embedding(cfg.text("test"), &test_labels);
  require(!train_labels.empty(), "knn: training CSV needs a final 'label' column");
  const bool scored = !test_labels.empty();
  auto res = knn_classify(train_e.coords, train_labels, test_e.coords,
                          static_cast<int>(cfg.integer("k")), scored ? &test_labels : nullptr);
  json j;
  j["k"] = cfg.integer("k");
  j["train_items"] = train_e.items();
  j["test_items"] = test_e.items();
  j["error_rate"] = scored ? json(res.error_rate) : json();
  CsvWriter w({"item", "predicted"});
  for (std::size_t i = 0; i < res.predictions.size(); ++i)
    w.row({std::to_string(i), std::to_string(res.predictions[i])});
  return {{"knn.json", dump(j)}, {"predictions.csv", w.str()}};
}

inline std::vector<Output> decode_components_cmd(const RunConfig &cfg) {
  Autoencoder ae = load_checkpoint(cfg.text("model"));
  auto batch = PointBatch(read_embedding(cfg.text("input")).coords);
  auto spec = spectrum(batch);
  Matrix out = decode_eigen_components(ae.decoder, spec, cfg.real("scale"));
  std::vector<std::string> header{"component", "sign"};
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    header.push_back("x" + std::to_string(j));
  CsvWriter w(header);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    std::vector<std::string> cells{std::to_string(r / 2), r % 2 == 0 ? "+" : "-"};
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      cells.push_back(format_double(out(r, j)));
    w.row(cells);
  }
  return {{"components.csv", w.str()}};
}

inline Schema common_keys() {
  return {
      key("seed", ValueType::integer, "0", "seed for every random draw"),
      key("out-dir", ValueType::text, std::nullopt, "write all outputs and manifest.json here"),
      key("out", ValueType::text, std::nullopt, "write the primary output to this file"),
      key("verify", ValueType::boolean, "false", "recompute and compare with the manifest"),
  };
}

} // namespace detail

inline const std::vector<Command> &commands() {
  using detail::join;
  using detail::key;
  using detail::required_key;
  static const std::vector<Command> table = [] {
    using Fn = std::vector<Output> (*)(const RunConfig &);
    auto quiet = [](Fn f) {
      return [f](const RunConfig &cfg, std::ostream &) { return f(cfg); };
    };
    std::vector<Command> t;
    t.push_back({"solve-radius", "stationary sphere radius for (dim, mu, N)",
                 detail::param_keys(), quiet(detail::solve_radius_cmd)});
    t.push_back({"sweep-radius", "worst |rho - sqrt(d)| / sqrt(d) over the mu grid per d",
                 {required_key("dims", ValueType::int_list, "comma-separated dimensions"),
                  key("mu-step", ValueType::real, "0.25", "mu grid spacing")},
                 quiet(detail::sweep_radius_cmd)});
    t.push_back({"force-profile", "pairwise repulsion magnitude against distance",
                 join(detail::param_keys(),
                      {key("r-max", ValueType::real, std::nullopt, "largest distance (4 sqrt(N))"),
                       key("steps", ValueType::integer, "1001", "samples including r = 0")}),
                 quiet(detail::force_profile_cmd)});
    t.push_back({"lemma-check", "density moment and argmax checks at (dim, a)",
                 {required_key("dim", ValueType::integer, "dimension"),
                  required_key("a", ValueType::real, "density parameter in (0, 2)")},
                 quiet(detail::lemma_check_cmd)});
    t.push_back({"simulate", "gradient descent of a free point cloud on the loss",
                 join(detail::param_keys(),
                      {key("count", ValueType::integer, "512", "points"),
                       key("steps", ValueType::integer, "5000", "gradient steps"),
                       key("step-size", ValueType::real, "0.5", "step size"),
                       key("init-scale", ValueType::real, "0.01", "std of the initial cloud"),
                       key("record-every", ValueType::integer, "50", "loss sampling interval")}),
                 quiet(detail::simulate_cmd)});
    t.push_back({"train", "train a dense autoencoder with the loss as regularizer",
                 join(join(detail::param_keys(true), detail::dataset_keys()),
                      {key("hidden", ValueType::int_list, "32,32", "encoder hidden widths"),
                       key("batch-size", ValueType::integer, "100", "minibatch size"),
                       key("epochs", ValueType::integer, "100", "training epochs"),
                       key("lr", ValueType::real, "0.0001", "learning rate"),
                       key("weight-decay", ValueType::real, "0.000001", "decoupled weight decay"),
                       key("beta1", ValueType::real, "0.9", "Adam beta1"),
                       key("beta2", ValueType::real, "0.999", "Adam beta2"),
                       key("epsilon", ValueType::real, "1e-8", "Adam epsilon")}),
                 quiet(detail::train_cmd)});
    t.push_back({"encode", "encode a dataset with a trained checkpoint",
                 join({required_key("model", ValueType::text, "checkpoint file")},
                      detail::dataset_keys()),
                 quiet(detail::encode_cmd)});
    t.push_back({"spectrum", "covariance spectrum and principal coordinates of a CSV",
                 {required_key("input", ValueType::text, "latent CSV")}, quiet(detail::spectrum_cmd)});
    t.push_back({"align", "signed-permutation alignment of two embeddings",
                 {required_key("input1", ValueType::text, "first embedding CSV"),
                  required_key("input2", ValueType::text, "second embedding CSV"),
                  key("principal", ValueType::boolean, "true",
                      "rotate each input onto its principal components first")},
                 quiet(detail::align_cmd)});
    t.push_back({"metrics", "RMS distance, mean cosine and mean angle between embeddings",
                 {required_key("input1", ValueType::text, "first embedding CSV"),
                  required_key("input2", ValueType::text, "second embedding CSV")},
                 quiet(detail::metrics_cmd)});
    t.push_back({"sample", "standard or matched Gaussian latent samples",
                 {key("mode", ValueType::text, "standard", "standard | matched"),
                  key("n", ValueType::integer, "1000", "samples"),
                  key("dim", ValueType::integer, std::nullopt, "latent dim"),
                  key("reference", ValueType::text, std::nullopt, "reference latent CSV")},
                 detail::sample_cmd});
    t.push_back({"knn", "k-nearest-neighbour classification of embeddings",
                 {required_key("train", ValueType::text, "labelled training CSV"),
                  required_key("test", ValueType::text, "test CSV (labels optional)"),
                  key("k", ValueType::integer, "5", "neighbours")},
                 quiet(detail::knn_cmd)});
    t.push_back({"decode-components", "decode mean +/- scaled principal directions",
                 {required_key("model", ValueType::text, "checkpoint file"),
                  required_key("input", ValueType::text, "latent CSV for the spectrum"),
                  key("scale", ValueType::real, "2", "multiple of each component's std")},
                 quiet(detail::decode_components_cmd)});
    for (auto &c : t)
      c.schema = join(c.schema, detail::common_keys());
    return t;
  }();
  return table;
}

inline std::string usage() {
  std::ostringstream u;
  u << "usage: eccentric <subcommand> [--config FILE] [--key value ...]\n\nsubcommands:\n";
  for (const auto &c : commands())
    u << "  " << std::left << std::setw(18) << c.name << c.summary << "\n";
  u << "\nrun 'eccentric <subcommand> --help' for its keys\n";
  return u.str();
}

inline std::string command_help(const Command &c) {
  std::ostringstream u;
  u << "usage: eccentric " << c.name << " [--config FILE] [--key value ...]\n" << c.summary
    << "\n\nkeys:\n";
  for (const auto &k : c.schema) {
    u << "  --" << std::left << std::setw(14) << k.name << k.help << " (" << type_name(k.type);
    if (k.required)
      u << ", required";
    else if (k.fallback)
      u << ", default " << *k.fallback;
    u << ")\n";
  }
  return u.str();
}

namespace detail {

inline bool is_boolean_key(const Schema &s, const std::string &name) {
  for (const auto &k : s)
    if (k.name == name)
      return k.type == ValueType::boolean;
  return false;
}

inline json manifest_json(const RunConfig &cfg, const std::vector<Output> &outputs) {
  json j;
  j["subcommand"] = cfg.subcommand;
  json config = json::object();
  for (const auto &[k, v] : cfg.values())
    if (k != "verify")
      config[k] = v;
  j["config"] = config;
  json files = json::array();
  for (const auto &o : outputs)
    files.push_back({{"name", o.name}, {"sha256", sha256_hex(o.content)}});
  j["outputs"] = files;
  return j;
}

inline void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw ValidationError("cannot write '" + path.string() + "'");
  f << content;
  if (!f)
    throw ValidationError("failed writing '" + path.string() + "'");
}

inline std::string read_file_text(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Compares freshly computed outputs with the stored manifest and files.
inline bool verify(const json &fresh, const std::filesystem::path &manifest_path,
                   const std::vector<std::filesystem::path> &files,
                   const std::vector<Output> &outputs, std::ostream &err) {
  json stored = json::parse(read_file_text(manifest_path));
  bool ok = true;
  if (stored != fresh) {
    err << "verify: manifest " << manifest_path.string() << " differs from the recomputed run\n";
    ok = false;
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!std::filesystem::exists(files[i])) {
      err << "verify: missing output " << files[i].string() << "\n";
      ok = false;
    } else if (read_file_text(files[i]) != outputs[i].content) {
      err << "verify: " << files[i].string() << " differs from the recomputed output\n";
      ok = false;
    }
  }
  return ok;
}

} // namespace detail

/// Runs one subcommand; args excludes the program name.
inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  if (args.empty()) {
    err << usage();
    return 1;
  }
  if (args[0] == "--help" || args[0] == "help") {
    out << usage();
    return 0;
  }
  const Command *cmd = nullptr;
  for (const auto &c : commands())
    if (c.name == args[0])
      cmd = &c;
  if (!cmd) {
    err << "unknown subcommand '" << args[0] << "'\n\n" << usage();
    return 1;
  }

  try {
    KeyValues flags;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string &a = args[i];
      if (a == "--help") {
        out << command_help(*cmd);
        return 0;
      }
      if (a.rfind("--", 0) != 0 || a.size() == 2)
        throw ConfigError("unexpected argument '" + a + "'");
      std::string name = a.substr(2);
      std::string value;
      bool inline_value = false;
      if (auto eq = name.find('='); eq != std::string::npos) {
        value = name.substr(eq + 1);
        name = name.substr(0, eq);
        inline_value = true;
      }
      if (!inline_value) {
        bool next_is_value = i + 1 < args.size() && args[i + 1].rfind("--", 0) != 0;
        if (detail::is_boolean_key(cmd->schema, name) && !next_is_value) {
          value = "true";
        } else {
          if (i + 1 >= args.size())
            throw ConfigError("flag --" + name + " needs a value");
          value = args[++i];
        }
      }
      if (name == "config")
        config_path = value;
      else
        flags.emplace_back(name, value);
    }
    KeyValues file_values = config_path.empty() ? KeyValues{} : read_config_file(config_path);
    RunConfig cfg = RunConfig::resolve(cmd->name, cmd->schema, file_values, flags);
    for (const auto &w : cfg.warnings)
      err << "warning: " << w << "\n";
    require(!(cfg.has("out") && cfg.has("out-dir")), "give either --out or --out-dir, not both");

    auto outputs = cmd->run(cfg, err);
    const bool verify = cfg.boolean("verify");

    if (!cfg.has("out") && !cfg.has("out-dir")) {
      require(!verify, "--verify needs --out or --out-dir");
      out << outputs.front().content;
      return 0;
    }

    namespace fs = std::filesystem;
    std::vector<Output> written;
    std::vector<fs::path> paths;
    fs::path manifest_path;
    if (cfg.has("out-dir")) {
      fs::path dir = cfg.text("out-dir");
      written = outputs;
      for (const auto &o : outputs)
        paths.push_back(dir / o.name);
      manifest_path = dir / "manifest.json";
      if (!verify)
        fs::create_directories(dir);
    } else {
      fs::path file = cfg.text("out");
      written = {outputs.front()};
      paths = {file};
      manifest_path = file.string() + ".manifest.json";
    }
    json manifest = detail::manifest_json(cfg, written);
    if (verify) {
      if (!detail::verify(manifest, manifest_path, paths, written, err))
        return 2;
      out << "verified " << written.size() << " output(s) against " << manifest_path.string()
          << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < written.size(); ++i)
      detail::write_file(paths[i], written[i].content);
    detail::write_file(manifest_path, detail::dump(manifest));
    return 0;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n\n" << command_help(*cmd);
    return 1;
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception &e) {
    err << "error: malformed manifest: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, char **argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace eccentric::cli
