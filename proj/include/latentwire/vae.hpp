// Copyright 2026 The LatentWire Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Convolutional variational autoencoder over channel-stacked spectrograms.
//
// Encoder: stem conv -> `stages` x (stride-2 conv, residual blocks) ->
// linear heads for mu and log-variance. Decoder mirrors it with transposed
// convolutions and ends in a sigmoid so reconstructions live in [0, 1].
// The model is templated on the scalar so the same network runs in float
// for training and in double for gradient checks.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "latentwire/adam.hpp"
#include "latentwire/autodiff.hpp"
#include "latentwire/dsp.hpp"

namespace latentwire::vae {

using ad::Index;
using ad::Shape;

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

struct VaeConfig {
  int latent_dim = 64;
  int in_channels = 26;
  int f_model = 128;
  int t_model = 32;
  int base_channels = 16;
  int blocks_per_stage = 1;
  int stages = 4;

  void validate() const {
    if (latent_dim < 1 || in_channels < 1 || base_channels < 1 || blocks_per_stage < 0 || stages < 1) {
      throw ValidationError("vae config: latent_dim, in_channels, base_channels and stages must be >= 1");
    }
    const int div = 1 << stages;
    if (f_model % div != 0 || t_model % div != 0 || f_model < div || t_model < div) {
      throw ValidationError("vae config: input " + std::to_string(f_model) + "x" + std::to_string(t_model) +
                            " must be divisible by 2^stages = " + std::to_string(div));
    }
  }
  Index input_size() const { return static_cast<Index>(in_channels) * f_model * t_model; }
  int stage_channels(int s) const { return base_channels << s; }
  int bottleneck_channels() const { return stage_channels(stages - 1); }
  Index bottleneck_size() const {
    return static_cast<Index>(bottleneck_channels()) * (f_model >> stages) * (t_model >> stages);
  }
  friend bool operator==(const VaeConfig&, const VaeConfig&) = default;
};

struct Ratio {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

// Input element count over latent size, in lowest terms.
inline Ratio compression_ratio(const VaeConfig& cfg) {
  const std::int64_t in = cfg.input_size();
  const std::int64_t g = std::gcd(in, static_cast<std::int64_t>(cfg.latent_dim));
  return {in / g, cfg.latent_dim / g};
}

struct EncoderOutput {
  Eigen::VectorXd mu;
  Eigen::VectorXd logvar;
};

struct LossBreakdown {
  double kl = 0;
  double recon = 0;
  double total = 0;
};

// Named parameter list with stable addresses once built.
template <typename Scalar>
class ParameterSet {
 public:
  ad::Parameter<Scalar>& add(std::string name, ad::Tensor<Scalar> value, bool trainable = true) {
    if (index_.count(name)) throw ValidationError("duplicate parameter " + name);
    index_[name] = params_.size();
    params_.push_back({std::move(name), std::move(value), {}, trainable});
    return params_.back();
  }
  ad::Parameter<Scalar>& operator[](const std::string& name) { return params_.at(lookup(name)); }
  const ad::Parameter<Scalar>& operator[](const std::string& name) const { return params_.at(lookup(name)); }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<ad::Parameter<Scalar>>& all() { return params_; }
  const std::vector<ad::Parameter<Scalar>>& all() const { return params_; }
  bool empty() const { return params_.empty(); }
  void clear() {
    params_.clear();
    index_.clear();
  }
  Index value_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter " + name);
    return it->second;
  }

  std::vector<ad::Parameter<Scalar>> params_;
  std::map<std::string, std::size_t> index_;
};

template <typename Scalar>
class VaeModel {
 public:
  using Var = ad::Var<Scalar>;
  using Tape = ad::Tape<Scalar>;
  using TensorT = ad::Tensor<Scalar>;

  struct Encoded {
    Var mu;
    Var logvar;
  };

  VaeModel() = default;

  // He-normal weights, zero biases, batch-norm gamma 1 / beta 0.
  static VaeModel init(const VaeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    VaeModel m;
    m.config_ = cfg;
    m.has_decoder_ = true;
    std::mt19937_64 rng(seed);
    Builder enc{m.encoder_, rng};
    Builder dec{m.decoder_, rng};

    enc.conv("enc.stem", cfg.in_channels, cfg.base_channels, 3);
    enc.bn("enc.stem.bn", cfg.base_channels);
    for (int s = 0; s < cfg.stages; ++s) {
      const int cin = s == 0 ? cfg.base_channels : cfg.stage_channels(s - 1);
      const int c = cfg.stage_channels(s);
      const std::string p = "enc.stage" + std::to_string(s);
      enc.conv(p + ".down", cin, c, 4);
      enc.bn(p + ".down.bn", c);
      for (int b = 0; b < cfg.blocks_per_stage; ++b) enc.res_block(p + ".res" + std::to_string(b), c);
    }
    enc.linear("enc.mu", cfg.bottleneck_size(), cfg.latent_dim);
    enc.linear("enc.logvar", cfg.bottleneck_size(), cfg.latent_dim);

    dec.linear("dec.fc", cfg.latent_dim, cfg.bottleneck_size());
    for (int s = cfg.stages - 1; s >= 0; --s) {
      const int c = cfg.stage_channels(s);
      const int cout = s == 0 ? cfg.base_channels : cfg.stage_channels(s - 1);
      const std::string p = "dec.stage" + std::to_string(s);
      for (int b = 0; b < cfg.blocks_per_stage; ++b) dec.res_block(p + ".res" + std::to_string(b), c);
      dec.conv_transpose(p + ".up", c, cout, 4);
      dec.bn(p + ".up.bn", cout);
    }
    dec.conv("dec.head", cfg.base_channels, cfg.in_channels, 3);
    return m;
  }

  const VaeConfig& config() const { return config_; }
  bool has_decoder() const { return has_decoder_; }
  ParameterSet<Scalar>& encoder() { return encoder_; }
  const ParameterSet<Scalar>& encoder() const { return encoder_; }
  ParameterSet<Scalar>& decoder() { return decoder_; }
  const ParameterSet<Scalar>& decoder() const { return decoder_; }

  // Rebuilds a model from stored parameters (used by the model file reader).
  static VaeModel from_parameters(const VaeConfig& cfg, ParameterSet<Scalar> enc, ParameterSet<Scalar> dec,
                                  bool has_decoder) {
    cfg.validate();
    VaeModel m;
    m.config_ = cfg;
    m.encoder_ = std::move(enc);
    m.decoder_ = std::move(dec);
    m.has_decoder_ = has_decoder;
    const VaeModel reference = init(cfg, 0);
    m.check_against(reference);
    return m;
  }

  VaeModel encoder_only() const {
    VaeModel m;
    m.config_ = config_;
    m.encoder_ = encoder_;
    m.has_decoder_ = false;
    return m;
  }

  template <typename T>
  VaeModel<T> cast() const {
    ParameterSet<T> enc, dec;
    for (const auto& p : encoder_.all()) enc.add(p.name, p.value.template cast<T>(), p.trainable);
    for (const auto& p : decoder_.all()) dec.add(p.name, p.value.template cast<T>(), p.trainable);
    return VaeModel<T>::from_parameters(config_, std::move(enc), std::move(dec), has_decoder_);
  }

  std::vector<ad::Parameter<Scalar>*> trainable_parameters() {
    std::vector<ad::Parameter<Scalar>*> out;
    for (auto* set : {&encoder_, &decoder_})
      for (auto& p : set->all())
        if (p.trainable) out.push_back(&p);
    return out;
  }

  void zero_grad() {
    for (auto* p : trainable_parameters()) p->zero_grad();
  }

  // x: [N, C, F, T]. Training mode uses batch statistics and updates the
  // running statistics; otherwise the model is read-only.
  Encoded encode(Tape& tape, const Var& x, bool training) {
    const auto& xs = x.shape();
    if (xs.size() != 4 || xs[1] != config_.in_channels || xs[2] != config_.f_model || xs[3] != config_.t_model) {
      throw ShapeError("encode: expected input [N, " + std::to_string(config_.in_channels) + ", " +
                       std::to_string(config_.f_model) + ", " + std::to_string(config_.t_model) + "], got " +
                       ad::shape_string(xs));
    }
    Layers L{tape, encoder_, training};
    Var h = ad::relu(L.bn("enc.stem.bn", L.conv("enc.stem", x, 1, 1)));
    for (int s = 0; s < config_.stages; ++s) {
      const std::string p = "enc.stage" + std::to_string(s);
      h = ad::relu(L.bn(p + ".down.bn", L.conv(p + ".down", h, 2, 1)));
      for (int b = 0; b < config_.blocks_per_stage; ++b) h = L.res_block(p + ".res" + std::to_string(b), h);
    }
    const Index n = xs[0];
    Var flat = ad::reshape(h, {n, config_.bottleneck_size()});
    Var mu = L.linear("enc.mu", flat);
    Var logvar = ad::clamp(L.linear("enc.logvar", flat), Scalar(kLogvarMin), Scalar(kLogvarMax));
    return {mu, logvar};
  }

  // z: [N, latent_dim] -> [N, C, F, T] in (0, 1).
  Var decode(Tape& tape, const Var& z, bool training) {
    if (!has_decoder_) throw KindError("decode: model has no decoder (encoder-only)");
    if (z.shape().size() != 2 || z.shape()[1] != config_.latent_dim) {
      throw ShapeError("decode: expected latent [N, " + std::to_string(config_.latent_dim) + "], got " +
                       ad::shape_string(z.shape()));
    }
    Layers L{tape, decoder_, training};
    const Index n = z.shape()[0];
    Var h = ad::relu(ad::reshape(L.linear("dec.fc", z), {n, config_.bottleneck_channels(),
                                                           config_.f_model >> config_.stages,
                                                           config_.t_model >> config_.stages}));
    for (int s = config_.stages - 1; s >= 0; --s) {
      const std::string p = "dec.stage" + std::to_string(s);
      for (int b = 0; b < config_.blocks_per_stage; ++b) h = L.res_block(p + ".res" + std::to_string(b), h);
      h = ad::relu(L.bn(p + ".up.bn", L.conv_transpose(p + ".up", h, 2, 1)));
    }
    return ad::sigmoid(L.conv("dec.head", h, 1, 1));
  }

 private:
  struct Builder {
    ParameterSet<Scalar>& set;
    std::mt19937_64& rng;

    TensorT he(Shape shape, Index fan_in) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      TensorT t(std::move(shape));
      for (Index i = 0; i < t.size(); ++i) t.values[i] = static_cast<Scalar>(normal(rng));
      return t;
    }
    void conv(const std::string& p, Index cin, Index cout, Index k) {
      set.add(p + ".w", he({cout, cin, k, k}, cin * k * k));
      set.add(p + ".b", TensorT::zeros({cout}));
    }
    void conv_transpose(const std::string& p, Index cin, Index cout, Index k) {
      set.add(p + ".w", he({cin, cout, k, k}, cin * k * k));
      set.add(p + ".b", TensorT::zeros({cout}));
    }
    void linear(const std::string& p, Index in, Index out) {
      set.add(p + ".w", he({out, in}, in));
      set.add(p + ".b", TensorT::zeros({out}));
    }
    void bn(const std::string& p, Index c) {
      set.add(p + ".gamma", TensorT::constant({c}, Scalar(1)));
      set.add(p + ".beta", TensorT::zeros({c}));
      set.add(p + ".running_mean", TensorT::zeros({c}), false);
      set.add(p + ".running_var", TensorT::constant({c}, Scalar(1)), false);
    }
    void res_block(const std::string& p, Index c) {
      conv(p + ".conv1", c, c, 3);
      bn(p + ".bn1", c);
      conv(p + ".conv2", c, c, 3);
      bn(p + ".bn2", c);
    }
  };

  struct Layers {
    Tape& tape;
    ParameterSet<Scalar>& set;
    bool training;

    Var bind(const std::string& name) {
      auto& p = set[name];
      return tape.recording() ? tape.param(p) : tape.constant(p.value);
    }
    Var conv(const std::string& p, const Var& x, Index stride, Index pad) {
      return ad::conv2d(x, bind(p + ".w"), bind(p + ".b"), stride, pad);
    }
    Var conv_transpose(const std::string& p, const Var& x, Index stride, Index pad) {
      return ad::conv2d_transpose(x, bind(p + ".w"), bind(p + ".b"), stride, pad);
    }
    Var linear(const std::string& p, const Var& x) { return ad::linear(x, bind(p + ".w"), bind(p + ".b")); }
    Var bn(const std::string& p, const Var& x) {
      ad::BatchNormOptions<Scalar> opt;
      opt.training = training;
      return ad::batch_norm(x, bind(p + ".gamma"), bind(p + ".beta"), set[p + ".running_mean"].value,
                            set[p + ".running_var"].value, opt);
    }
    Var res_block(const std::string& p, const Var& x) {
      Var h = ad::relu(bn(p + ".bn1", conv(p + ".conv1", x, 1, 1)));
      h = bn(p + ".bn2", conv(p + ".conv2", h, 1, 1));
      return ad::relu(x + h);
    }
  };

  void check_against(const VaeModel& reference) const {
    auto check = [](const ParameterSet<Scalar>& got, const ParameterSet<Scalar>& want, bool required) {
      if (!required) {
        if (!got.empty()) throw ValidationError("encoder-only model carries decoder parameters");
        return;
      }
      if (got.all().size() != want.all().size()) {
        throw ValidationError("model has " + std::to_string(got.all().size()) + " parameters, config implies " +
                              std::to_string(want.all().size()));
      }
      for (const auto& p : want.all()) {
        if (!got.contains(p.name)) throw ValidationError("model is missing parameter " + p.name);
        if (got[p.name].value.shape != p.value.shape) {
          throw ShapeError("parameter " + p.name + " has shape " + ad::shape_string(got[p.name].value.shape) +
                           ", config implies " + ad::shape_string(p.value.shape));
        }
      }
    };
    check(encoder_, reference.encoder_, true);
    check(decoder_, reference.decoder_, has_decoder_);
  }

  VaeConfig config_;
  ParameterSet<Scalar> encoder_;
  ParameterSet<Scalar> decoder_;
  bool has_decoder_ = false;
};

// ---------------------------------------------------------------------------
// Losses on the tape.

// z = mu + exp(logvar / 2) * noise
template <typename Scalar>
ad::Var<Scalar> reparameterize(const ad::Var<Scalar>& mu, const ad::Var<Scalar>& logvar,
                               const ad::Var<Scalar>& noise) {
  return mu + ad::exp(ad::scale(logvar, Scalar(0.5))) * noise;
}

// Sum over the batch of 0.5 * sum_i (mu_i^2 + sigma_i^2 - 1 - log sigma_i^2).
template <typename Scalar>
ad::Var<Scalar> kl_divergence(const ad::Var<Scalar>& mu, const ad::Var<Scalar>& logvar) {
  auto terms = ad::add_scalar(mu * mu + ad::exp(logvar) - logvar, Scalar(-1));
  return ad::scale(ad::sum(terms), Scalar(0.5));
}

// Sum of squared errors.
template <typename Scalar>
ad::Var<Scalar> recon_loss(const ad::Var<Scalar>& x, const ad::Var<Scalar>& x_hat) {
  auto d = x_hat - x;
  return ad::sum(d * d);
}

// ---------------------------------------------------------------------------
// Plain-value helpers.

inline double kl_divergence(const EncoderOutput& out) {
  return 0.5 * (out.mu.array().square() + out.logvar.array().exp() - 1.0 - out.logvar.array()).sum();
}

inline Eigen::VectorXd reparameterize(const EncoderOutput& out, const Eigen::VectorXd& noise) {
  if (noise.size() != out.mu.size()) {
    throw ShapeError("reparameterize: noise length " + std::to_string(noise.size()) + " != latent " +
                     std::to_string(out.mu.size()));
  }
  return out.mu.array() + (0.5 * out.logvar.array()).exp() * noise.array();
}

template <typename A, typename B>
double recon_loss(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& x_hat) {
  if (x.size() != x_hat.size()) {
    throw ShapeError("recon_loss: " + std::to_string(x.size()) + " vs " + std::to_string(x_hat.size()) +
                     " elements");
  }
  return (x.derived().template cast<double>().array() - x_hat.derived().template cast<double>().array())
      .square()
      .sum();
}

// Stacks spectrograms into an [N, C, F, T] tensor, checking dims.
template <typename Scalar>
ad::Tensor<Scalar> make_batch(const VaeConfig& cfg, const std::vector<const dsp::Spectrogram*>& items) {
  ad::Tensor<Scalar> t({static_cast<Index>(items.size()), cfg.in_channels, cfg.f_model, cfg.t_model});
  const Index per = cfg.input_size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& s = *items[i];
    if (s.channels != cfg.in_channels || s.freq_bins != cfg.f_model || s.time_frames != cfg.t_model) {
      throw ShapeError("spectrogram " + std::to_string(s.channels) + "x" + std::to_string(s.freq_bins) + "x" +
                       std::to_string(s.time_frames) + " does not match model input " +
                       std::to_string(cfg.in_channels) + "x" + std::to_string(cfg.f_model) + "x" +
                       std::to_string(cfg.t_model));
    }
    t.values.segment(static_cast<Index>(i) * per, per) = s.values.template cast<Scalar>();
  }
  return t;
}

// Inference-mode encode; one EncoderOutput per input. Inputs are pushed
// through the network in chunks to bound activation memory.
template <typename Scalar>
std::vector<EncoderOutput> encode_batch(const VaeModel<Scalar>& model, const std::vector<const dsp::Spectrogram*>& xs,
                                        std::size_t chunk = 64) {
  // Inference reads parameters only; the cast lets encode() share the
  // training code path.
  auto& m = const_cast<VaeModel<Scalar>&>(model);
  const Index n = model.config().latent_dim;
  std::vector<EncoderOutput> out(xs.size());
  for (std::size_t first = 0; first < xs.size(); first += chunk) {
    const std::size_t last = std::min(xs.size(), first + chunk);
    std::vector<const dsp::Spectrogram*> part(xs.begin() + static_cast<long>(first), xs.begin() + static_cast<long>(last));
    ad::Tape<Scalar> tape(false);
    auto enc = m.encode(tape, tape.constant(make_batch<Scalar>(model.config(), part)), false);
    for (std::size_t i = first; i < last; ++i) {
      const Index off = static_cast<Index>(i - first) * n;
      out[i].mu = enc.mu.value().values.segment(off, n).template cast<double>();
      out[i].logvar = enc.logvar.value().values.segment(off, n).template cast<double>();
    }
  }
  return out;
}

template <typename Scalar>
EncoderOutput encode(const VaeModel<Scalar>& model, const dsp::Spectrogram& x) {
  return encode_batch(model, {&x}).front();
}

// The latent sent downstream: the posterior mean.
template <typename Scalar>
Eigen::VectorXd compress(const VaeModel<Scalar>& model, const dsp::Spectrogram& x) {
  return encode(model, x).mu;
}

// Inference-mode reconstruction from latents [N, latent_dim].
template <typename Scalar>
ad::Tensor<Scalar> decode(const VaeModel<Scalar>& model, const ad::Tensor<Scalar>& z) {
  ad::Tape<Scalar> tape(false);
  auto& m = const_cast<VaeModel<Scalar>&>(model);
  return m.decode(tape, tape.constant(z), false).value();
}

template <typename Scalar>
struct LossResult {
  LossBreakdown breakdown;
  ad::Var<Scalar> total;  // batch mean of kl_weight * KL + recon, on the tape
};

// Records the weighted ELBO loss for a batch on `tape`. Noise is drawn from
// `rng` (one standard normal per latent entry).
template <typename Scalar>
LossResult<Scalar> total_loss(VaeModel<Scalar>& model, ad::Tape<Scalar>& tape, const ad::Tensor<Scalar>& batch,
                              double kl_weight, std::mt19937_64& rng, bool training) {
  if (kl_weight < 0) throw ValidationError("total_loss: kl weight must be >= 0");
  if (batch.shape.empty() || batch.shape[0] == 0) throw ValidationError("total_loss: empty batch");
  const Index n = batch.shape[0];
  auto x = tape.constant(batch);
  auto enc = model.encode(tape, x, training);
  ad::Tensor<Scalar> noise({n, model.config().latent_dim});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < noise.size(); ++i) noise.values[i] = static_cast<Scalar>(normal(rng));
  auto z = reparameterize(enc.mu, enc.logvar, tape.constant(std::move(noise)));
  auto x_hat = model.decode(tape, z, training);
  auto kl = kl_divergence(enc.mu, enc.logvar);
  auto recon = recon_loss(x, x_hat);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  auto total = ad::scale(ad::scale(kl, static_cast<Scalar>(kl_weight)) + recon, inv_n);

  LossResult<Scalar> r{{}, total};
  r.breakdown.kl = static_cast<double>(kl.value().item()) / static_cast<double>(n);
  r.breakdown.recon = static_cast<double>(recon.value().item()) / static_cast<double>(n);
  r.breakdown.total = kl_weight * r.breakdown.kl + r.breakdown.recon;
  return r;
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 128;
  double kl_weight = 0.1;
  int patience = 10;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;

  void validate() const {
    if (kl_weight < 0) throw ValidationError("train: kl weight must be >= 0");
    if (patience < 1) throw ValidationError("train: patience must be >= 1");
    if (batch_size < 1 || max_epochs < 1) throw ValidationError("train: batch size and max epochs must be >= 1");
    if (validation_fraction < 0 || validation_fraction >= 1) {
      throw ValidationError("train: validation fraction must be in [0, 1)");
    }
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  LossBreakdown train;
  LossBreakdown validation;
};

template <typename Scalar>
struct TrainResult {
  VaeModel<Scalar> model;  // best-validation snapshot
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

// Mean loss over `items` in inference mode with a fixed noise stream.
template <typename Scalar>
LossBreakdown evaluate_loss(const VaeModel<Scalar>& model, const std::vector<const dsp::Spectrogram*>& items,
                            double kl_weight, std::uint64_t noise_seed, int batch_size) {
  auto& m = const_cast<VaeModel<Scalar>&>(model);
  std::mt19937_64 rng(noise_seed);
  LossBreakdown acc;
  for (std::size_t first = 0; first < items.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(items.size(), first + static_cast<std::size_t>(batch_size));
    std::vector<const dsp::Spectrogram*> chunk(items.begin() + static_cast<long>(first),
                                               items.begin() + static_cast<long>(last));
    ad::Tape<Scalar> tape(false);
    auto r = total_loss(m, tape, make_batch<Scalar>(model.config(), chunk), kl_weight, rng, false);
    const double w = static_cast<double>(chunk.size());
    acc.kl += r.breakdown.kl * w;
    acc.recon += r.breakdown.recon * w;
  }
  acc.kl /= static_cast<double>(items.size());
  acc.recon /= static_cast<double>(items.size());
  acc.total = kl_weight * acc.kl + acc.recon;
  return acc;
}

// Adam on mini-batches with early stopping on validation total loss.
// Incomplete trailing batches are skipped. With validation_fraction 0 the
// training set doubles as the validation set.
template <typename Scalar>
TrainResult<Scalar> train(const std::vector<dsp::Spectrogram>& dataset, const TrainConfig& cfg,
                          const VaeConfig& vcfg, const std::function<void(const EpochStats&)>& on_epoch = {}) {
  cfg.validate();
  vcfg.validate();
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(cfg.seed + 1);
  std::shuffle(order.begin(), order.end(), split_rng);

  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(dataset.size())));
  if (cfg.validation_fraction > 0 && n_val == 0) n_val = 1;
  std::vector<const dsp::Spectrogram*> val, train_set;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : train_set).push_back(&dataset[order[i]]);
  if (train_set.size() < static_cast<std::size_t>(cfg.batch_size)) {
    throw ValidationError("train: " + std::to_string(train_set.size()) + " training items, fewer than one batch of " +
                          std::to_string(cfg.batch_size));
  }
  if (val.empty()) val = train_set;

  TrainResult<Scalar> result{VaeModel<Scalar>::init(vcfg, cfg.seed), {}, 0};
  VaeModel<Scalar> model = result.model;
  ad::AdamState<Scalar> adam;
  adam.lr = static_cast<Scalar>(cfg.lr);
  std::mt19937_64 shuffle_rng(cfg.seed + 2);
  std::mt19937_64 noise_rng(cfg.seed + 3);
  const std::uint64_t val_noise_seed = cfg.seed + 4;

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t first = 0; first + bs <= train_set.size(); first += bs) {
      std::vector<const dsp::Spectrogram*> chunk(train_set.begin() + static_cast<long>(first),
                                                 train_set.begin() + static_cast<long>(first + bs));
      model.zero_grad();
      ad::Tape<Scalar> tape(true);
      auto r = total_loss(model, tape, make_batch<Scalar>(vcfg, chunk), cfg.kl_weight, noise_rng, true);
      tape.backward(r.total);
      auto params = model.trainable_parameters();
      ad::adam_step<Scalar>(std::span<ad::Parameter<Scalar>* const>(params), adam);
      stats.train.kl += r.breakdown.kl;
      stats.train.recon += r.breakdown.recon;
      ++batches;
    }
    stats.train.kl /= static_cast<double>(batches);
    stats.train.recon /= static_cast<double>(batches);
    stats.train.total = cfg.kl_weight * stats.train.kl + stats.train.recon;
    stats.validation = evaluate_loss(model, val, cfg.kl_weight, val_noise_seed, cfg.batch_size);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stats.validation.total < best) {
      best = stats.validation.total;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace latentwire::vae
