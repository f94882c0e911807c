#pragma once

// Dense autoencoder trained on
//   loss = recon + lambda * l_{mu,N}(latent codes of the minibatch),
// recon = mean over the batch of |x - decode(encode(x))|^2.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eccentric/common.hpp"
#include "eccentric/dataset.hpp"
#include "eccentric/kernel.hpp"
#include "eccentric/network.hpp"
#include "eccentric/random.hpp"

namespace eccentric {

struct Autoencoder {
  DenseNet encoder;
  DenseNet decoder;

  Matrix encode(const Matrix &x) const { return encoder.forward(x); }
  Matrix reconstruct(const Matrix &x) const { return decoder.forward(encoder.forward(x)); }
};

/// Hidden layers use leaky ReLU(0.1); the encoder ends linear and the decoder
/// ends in a sigmoid so reconstructions live in [0, 1].
inline DenseNetSpec encoder_spec(int input, const std::vector<int> &hidden, int latent) {
  DenseNetSpec s;
  s.widths.push_back(input);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(latent);
  s.activations.assign(hidden.size(), Activation::leaky_relu);
  s.activations.push_back(Activation::identity);
  return s;
}

inline DenseNetSpec decoder_spec(int latent, const std::vector<int> &hidden, int output) {
  DenseNetSpec s;
  s.widths.push_back(latent);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(output);
  s.activations.assign(hidden.size(), Activation::leaky_relu);
  s.activations.push_back(Activation::sigmoid);
  return s;
}

struct TrainConfig {
  DenseNetSpec encoder;
  DenseNetSpec decoder;
  ParamSet params; // dim = latent width
  int batch_size = 100;
  int epochs = 1;
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    encoder.validate();
    decoder.validate();
    params.validate();
    require(encoder.output_width() == params.dim && decoder.input_width() == params.dim,
            "encoder output and decoder input widths must equal the latent dim " +
                std::to_string(params.dim));
    require(decoder.output_width() == encoder.input_width(),
            "decoder output width must equal the encoder input width");
    require(batch_size >= 2, "batch_size must be >= 2 (the regularizer needs pairs)");
    require(epochs >= 0, "epochs must be >= 0");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(weight_decay >= 0.0, "weight_decay must be >= 0");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "Adam betas must lie in [0, 1)");
    require(adam_epsilon > 0.0, "adam_epsilon must be positive");
  }
};

// reg is left at 0 when lambda is 0; the term is not evaluated.
struct LossParts {
  double recon = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct AutoencoderGrad {
  LossParts loss;
  DenseGrad encoder;
  DenseGrad decoder;
};

inline LossParts total_loss(const Matrix &batch, const Autoencoder &ae, const ParamSet &params) {
  require(batch.rows() >= 2, "total_loss needs a batch of at least 2 items");
  Matrix z = ae.encoder.forward(batch);
  Matrix recon = ae.decoder.forward(z);
  LossParts parts;
  parts.recon = (recon - batch).rowwise().squaredNorm().mean();
  if (params.lambda != 0.0)
    parts.reg = batch_loss(PointBatch(std::move(z)), params);
  parts.total = parts.recon + params.lambda * parts.reg;
  return parts;
}

/// Loss and its gradient with respect to every encoder and decoder
/// parameter, by one reverse pass through decoder then encoder.
inline AutoencoderGrad total_loss_gradient(const Matrix &batch, const Autoencoder &ae,
                                           const ParamSet &params) {
  require(batch.rows() >= 2, "total_loss needs a batch of at least 2 items");
  const double b = static_cast<double>(batch.rows());
  auto enc = ae.encoder.forward_cached(batch);
  auto dec = ae.decoder.forward_cached(enc.output);

  AutoencoderGrad g;
  Matrix residual = dec.output - batch;
  g.loss.recon = residual.rowwise().squaredNorm().mean();
  PointBatch latent(enc.output);
  if (params.lambda != 0.0)
    g.loss.reg = batch_loss(latent, params);
  g.loss.total = g.loss.recon + params.lambda * g.loss.reg;

  Matrix grad_recon = (2.0 / b) * residual;
  Matrix grad_latent = ae.decoder.backward(dec, grad_recon, g.decoder);
  if (params.lambda != 0.0)
    grad_latent += params.lambda * batch_loss_gradient(latent, params, 1);
  ae.encoder.backward(enc, grad_latent, g.encoder);
  return g;
}

/// Adam with weight decay applied directly to the parameters, separately
/// from the adaptive gradient step.
class AdamW {
public:
  AdamW(std::size_t size, double lr, double beta1, double beta2, double eps, double decay)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), decay_(decay), m_(size, 0.0),
        v_(size, 0.0) {}

  void step(std::vector<double> &params, const std::vector<double> &grad) {
    require(params.size() == m_.size() && grad.size() == m_.size(), "AdamW: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      double mhat = m_[i] / c1;
      double vhat = v_[i] / c2;
      params[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + decay_ * params[i]);
    }
  }

private:
  double lr_, beta1_, beta2_, eps_, decay_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainReport {
  std::vector<double> recon_trace; // per-epoch mean
  std::vector<double> reg_trace;
  Autoencoder model;
  PointBatch embedding; // encoded held-out set
};

inline Autoencoder initial_autoencoder(const TrainConfig &config) {
  Rng rng(config.seed);
  Autoencoder ae;
  ae.encoder = DenseNet::initialized(config.encoder, rng);
  ae.decoder = DenseNet::initialized(config.decoder, rng);
  return ae;
}

inline PointBatch encode_dataset(const Autoencoder &ae, const Dataset &data) {
  if (data.size() == 0)
    return PointBatch(Matrix(0, ae.encoder.spec().output_width()));
  return PointBatch(ae.encode(data.features));
}

/// Minibatch training; each epoch visits a seeded shuffle of the data in
/// floor(n / batch_size) full batches. The held-out set (or the training set
/// when none is given) is encoded at the end.
inline TrainReport train(const TrainConfig &config, const Dataset &data,
                         const Dataset *held_out = nullptr) {
  config.validate();
  require(data.width() == config.encoder.input_width(),
          "dataset width " + std::to_string(data.width()) + " does not match encoder input " +
              std::to_string(config.encoder.input_width()));
  require(data.size() >= config.batch_size, "dataset is smaller than one batch");

  TrainReport report;
  report.model = initial_autoencoder(config);
  Autoencoder &ae = report.model;

  const std::size_t enc_size = config.encoder.parameter_count();
  std::vector<double> theta = ae.encoder.flat_parameters();
  {
    auto dec = ae.decoder.flat_parameters();
    theta.insert(theta.end(), dec.begin(), dec.end());
  }
  AdamW opt(theta.size(), config.learning_rate, config.adam_beta1, config.adam_beta2,
            config.adam_epsilon, config.weight_decay);

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<Eigen::Index>(i);
  const Eigen::Index batches = data.size() / config.batch_size;
  Matrix batch(config.batch_size, data.width());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double recon_sum = 0.0;
    double reg_sum = 0.0;
    for (Eigen::Index s = 0; s < batches; ++s) {
      for (Eigen::Index r = 0; r < config.batch_size; ++r)
        batch.row(r) = data.features.row(order[static_cast<std::size_t>(s * config.batch_size + r)]);
      auto g = total_loss_gradient(batch, ae, config.params);
      if (!std::isfinite(g.loss.total)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(s));
      }
      recon_sum += g.loss.recon;
      reg_sum += g.loss.reg;
      auto grad = flatten(g.encoder);
      auto dec_grad = flatten(g.decoder);
      grad.insert(grad.end(), dec_grad.begin(), dec_grad.end());
      opt.step(theta, grad);
      ae.encoder.set_flat_parameters(std::span<const double>(theta).first(enc_size));
      ae.decoder.set_flat_parameters(std::span<const double>(theta).subspan(enc_size));
    }
    report.recon_trace.push_back(recon_sum / static_cast<double>(batches));
    report.reg_trace.push_back(reg_sum / static_cast<double>(batches));
  }
  report.embedding = encode_dataset(ae, held_out ? *held_out : data);
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoint: "EAE1", then per network (encoder, decoder) a little-endian u32
// width count, the u32 widths, and the float64 parameters layer by layer
// (weights row-major out x in, then biases). Activations are not stored; a
// loaded model uses the encoder_spec / decoder_spec layout.

namespace detail {

inline void put_le32(std::ostream &out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

inline void put_le64(std::ostream &out, double value) {
  std::uint64_t v;
  std::memcpy(&v, &value, sizeof v);
  for (int k = 0; k < 8; ++k)
    out.put(static_cast<char>(v >> (8 * k)));
}

inline std::uint32_t get_le32(std::istream &in, const std::string &path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4))
    throw DataError("'" + path + "': truncated checkpoint");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline double get_le64(std::istream &in, const std::string &path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char *>(b), 8))
    throw DataError("'" + path + "': truncated checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k)
    v |= std::uint64_t{b[k]} << (8 * k);
  double out;
  std::memcpy(&out, &v, sizeof out);
  return out;
}

inline void write_net(std::ostream &out, const DenseNet &net) {
  put_le32(out, static_cast<std::uint32_t>(net.spec().widths.size()));
  for (int w : net.spec().widths)
    put_le32(out, static_cast<std::uint32_t>(w));
  for (double v : net.flat_parameters())
    put_le64(out, v);
}

inline DenseNet read_net(std::istream &in, const std::string &path, bool is_encoder) {
  std::uint32_t count = get_le32(in, path);
  if (count < 2 || count > 64)
    throw DataError("'" + path + "': implausible layer count " + std::to_string(count));
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < count; ++i)
    widths.push_back(static_cast<int>(get_le32(in, path)));
  std::vector<int> hidden(widths.begin() + 1, widths.end() - 1);
  DenseNetSpec spec = is_encoder ? encoder_spec(widths.front(), hidden, widths.back())
                                 : decoder_spec(widths.front(), hidden, widths.back());
  DenseNet net(spec);
  std::vector<double> flat(spec.parameter_count());
  for (double &v : flat)
    v = get_le64(in, path);
  net.set_flat_parameters(flat);
  return net;
}

} // namespace detail

inline void save_checkpoint(const std::string &path, const Autoencoder &ae) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path + "'");
  out.write("EAE1", 4);
  detail::write_net(out, ae.encoder);
  detail::write_net(out, ae.decoder);
}

inline std::string checkpoint_bytes(const Autoencoder &ae) {
  std::ostringstream out(std::ios::binary);
  out.write("EAE1", 4);
  detail::write_net(out, ae.encoder);
  detail::write_net(out, ae.decoder);
  return out.str();
}

inline Autoencoder load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EAE1", 4) != 0)
    throw DataError("'" + path + "': bad checkpoint magic at offset 0 (expected EAE1)");
  Autoencoder ae;
  ae.encoder = detail::read_net(in, path, true);
  ae.decoder = detail::read_net(in, path, false);
  return ae;
}

} // namespace eccentric
