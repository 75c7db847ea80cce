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


#include "latentwire/model_file.hpp"

#include <cmath>
#include <limits>

#include "latentwire/error.hpp"

namespace latentwire::model_file {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'W', 'M', 'D'};

Bytes frame(ModelKind kind, quant::Precision precision, std::uint64_t config_hash, const Bytes& payload) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u8(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(static_cast<std::uint8_t>(precision));
  w.u8(0);
  w.u64(config_hash);
  w.u64(payload.size());
  w.bytes(payload);
  w.u32(crc32(w.data()));
  return w.take();
}

void write_config(ByteWriter& w, const vae::VaeConfig& c) {
  for (int v : {c.latent_dim, c.in_channels, c.f_model, c.t_model, c.base_channels, c.blocks_per_stage, c.stages}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
}

vae::VaeConfig read_config(ByteReader& r) {
  vae::VaeConfig c;
  for (int* v : {&c.latent_dim, &c.in_channels, &c.f_model, &c.t_model, &c.base_channels, &c.blocks_per_stage,
                 &c.stages}) {
    *v = static_cast<int>(r.u32());
  }
  return c;
}

void write_tensor_header(ByteWriter& w, const std::string& name, bool trainable, const ad::Shape& shape) {
  w.str16(name);
  w.u8(trainable ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
}

struct TensorHeader {
  std::string name;
  bool trainable;
  ad::Shape shape;
};

TensorHeader read_tensor_header(ByteReader& r) {
  TensorHeader t;
  t.name = r.str16();
  t.trainable = r.u8() != 0;
  const auto rank = r.u8();
  for (int i = 0; i < rank; ++i) t.shape.push_back(static_cast<ad::Index>(r.u32()));
  return t;
}

Bytes vae_payload_f32(const vae::VaeModel<float>& model) {
  ByteWriter w;
  write_config(w, model.config());
  w.u32(quant::weights_checksum(model));
  w.u32(static_cast<std::uint32_t>(model.encoder().all().size()));
  w.u32(static_cast<std::uint32_t>(model.decoder().all().size()));
  for (const auto* set : {&model.encoder(), &model.decoder()})
    for (const auto& p : set->all()) {
      write_tensor_header(w, p.name, p.trainable, p.value.shape);
      for (ad::Index i = 0; i < p.value.size(); ++i) w.f32(p.value.values[i]);
    }
  return w.take();
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::VaeFull: return "vae-full";
    case ModelKind::VaeEncoder: return "vae-encoder";
    case ModelKind::Gbdt: return "gbdt";
  }
  return "unknown";
}

Bytes encode(const vae::VaeModel<float>& model, std::uint64_t config_hash) {
  return frame(model.has_decoder() ? ModelKind::VaeFull : ModelKind::VaeEncoder, quant::Precision::F32, config_hash,
               vae_payload_f32(model));
}

Bytes encode(const quant::QuantizedModel& model, std::uint64_t config_hash) {
  ByteWriter w;
  write_config(w, model.config);
  w.u32(model.source_checksum);
  w.u32(static_cast<std::uint32_t>(model.encoder.size()));
  w.u32(static_cast<std::uint32_t>(model.has_decoder ? model.decoder.size() : 0));
  auto put = [&](const std::vector<quant::QuantizedTensor>& ts) {
    for (const auto& t : ts) {
      write_tensor_header(w, t.name, t.trainable, t.shape);
      for (auto b : t.bits) w.u16(b);
    }
  };
  put(model.encoder);
  if (model.has_decoder) put(model.decoder);
  return frame(model.has_decoder ? ModelKind::VaeFull : ModelKind::VaeEncoder, quant::Precision::F16, config_hash,
               w.data());
}

Bytes encode(const gbdt::GbdtModel& model, std::uint64_t config_hash) {
  ByteWriter w;
  const auto& p = model.params;
  w.u32(static_cast<std::uint32_t>(p.n_estimators));
  w.u32(static_cast<std::uint32_t>(p.max_depth));
  w.f64(p.eta);
  w.f64(p.reg_lambda);
  w.f64(p.reg_alpha);
  w.f64(p.scale_pos_weight.value_or(std::numeric_limits<double>::quiet_NaN()));
  w.u32(static_cast<std::uint32_t>(p.early_stopping_rounds));
  w.f64(p.min_child_weight);
  w.f64(p.min_split_gain);
  w.u32(static_cast<std::uint32_t>(model.feature_count));
  w.f64(model.base_margin);
  w.f64(model.pos_weight);
  w.u32(static_cast<std::uint32_t>(model.best_round));
  w.u32(static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& t : model.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.weight);
    }
  }
  return frame(ModelKind::Gbdt, quant::Precision::F64, config_hash, w.data());
}

Header decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize + 4) throw ParseError("model file truncated (" + std::to_string(bytes.size()) + " bytes)");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw ParseError("not a model file (bad magic)");
  Header h;
  h.version = bytes[4];
  if (h.version != kFormatVersion) {
    throw VersionError("model file version " + std::to_string(h.version) + " unsupported (supported versions: 1)");
  }
  ByteReader r(bytes.subspan(5));
  const auto kind = r.u8();
  const auto precision = r.u8();
  r.u8();
  h.config_hash = r.u64();
  const auto payload = r.u64();
  if (payload != bytes.size() - kHeaderSize - 4) {
    throw IntegrityError("model file payload length " + std::to_string(payload) + " does not match file size");
  }
  ByteReader tail(bytes.subspan(bytes.size() - 4));
  if (tail.u32() != crc32(bytes.first(bytes.size() - 4))) throw IntegrityError("model file CRC mismatch");
  if (kind > 2) throw ParseError("unknown model kind " + std::to_string(kind));
  if (precision > 2) throw ParseError("unknown precision tag " + std::to_string(precision));
  h.kind = static_cast<ModelKind>(kind);
  h.precision = static_cast<quant::Precision>(precision);
  return h;
}

vae::VaeModel<float> StoredVae::working_model() const {
  if (const auto* m = std::get_if<vae::VaeModel<float>>(&model)) return *m;
  return quant::dequantize(std::get<quant::QuantizedModel>(model));
}

StoredVae decode_vae(std::span<const std::uint8_t> bytes) {
  const Header h = decode_header(bytes);
  if (h.kind == ModelKind::Gbdt) throw KindError("expected a VAE model file, found kind gbdt");
  ByteReader r(bytes.subspan(kHeaderSize, bytes.size() - kHeaderSize - 4));
  const vae::VaeConfig cfg = read_config(r);
  cfg.validate();
  const std::uint32_t checksum = r.u32();
  const std::uint32_t n_enc = r.u32();
  const std::uint32_t n_dec = r.u32();
  const bool has_decoder = h.kind == ModelKind::VaeFull;
  if (!has_decoder && n_dec != 0) throw ParseError("encoder-only model file lists decoder tensors");

  StoredVae out{h, vae::VaeModel<float>{}};
  if (h.precision == quant::Precision::F16) {
    quant::QuantizedModel q;
    q.config = cfg;
    q.has_decoder = has_decoder;
    q.source_checksum = checksum;
    for (std::uint32_t i = 0; i < n_enc + n_dec; ++i) {
      auto th = read_tensor_header(r);
      quant::QuantizedTensor t{th.name, th.shape, {}, th.trainable};
      t.bits.resize(static_cast<std::size_t>(ad::numel(th.shape)));
      for (auto& b : t.bits) b = r.u16();
      (i < n_enc ? q.encoder : q.decoder).push_back(std::move(t));
    }
    quant::dequantize(q);  // validates names and shapes against the config
    out.model = std::move(q);
  } else if (h.precision == quant::Precision::F32) {
    vae::ParameterSet<float> enc, dec;
    for (std::uint32_t i = 0; i < n_enc + n_dec; ++i) {
      auto th = read_tensor_header(r);
      ad::Tensor<float> t(th.shape);
      for (ad::Index k = 0; k < t.size(); ++k) t.values[k] = r.f32();
      (i < n_enc ? enc : dec).add(th.name, std::move(t), th.trainable);
    }
    out.model = vae::VaeModel<float>::from_parameters(cfg, std::move(enc), std::move(dec), has_decoder);
  } else {
    throw ParseError("VAE model files are f32 or f16");
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after VAE payload");
  return out;
}

gbdt::GbdtModel decode_gbdt(std::span<const std::uint8_t> bytes, Header* header) {
  const Header h = decode_header(bytes);
  if (h.kind != ModelKind::Gbdt) {
    throw KindError(std::string("expected a gbdt model file, found kind ") + to_string(h.kind));
  }
  if (header) *header = h;
  ByteReader r(bytes.subspan(kHeaderSize, bytes.size() - kHeaderSize - 4));
  gbdt::GbdtModel m;
  auto& p = m.params;
  p.n_estimators = static_cast<int>(r.u32());
  p.max_depth = static_cast<int>(r.u32());
  p.eta = r.f64();
  p.reg_lambda = r.f64();
  p.reg_alpha = r.f64();
  const double spw = r.f64();
  if (!std::isnan(spw)) p.scale_pos_weight = spw;
  p.early_stopping_rounds = static_cast<int>(r.u32());
  p.min_child_weight = r.f64();
  p.min_split_gain = r.f64();
  m.feature_count = static_cast<int>(r.u32());
  m.base_margin = r.f64();
  m.pos_weight = r.f64();
  m.best_round = static_cast<int>(r.u32());
  const auto trees = r.u32();
  for (std::uint32_t t = 0; t < trees; ++t) {
    gbdt::Tree tree;
    const auto nodes = r.u32();
    for (std::uint32_t k = 0; k < nodes; ++k) {
      gbdt::TreeNode n;
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.weight = r.f64();
      const bool bad_child = !n.is_leaf() && (n.left <= static_cast<int>(k) || n.right <= static_cast<int>(k) ||
                                              n.left >= static_cast<int>(nodes) || n.right >= static_cast<int>(nodes));
      if (bad_child || n.feature >= m.feature_count) throw ParseError("gbdt tree " + std::to_string(t) + " is malformed");
      tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw ParseError("gbdt tree " + std::to_string(t) + " has no nodes");
    m.trees.push_back(std::move(tree));
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after gbdt payload");
  return m;
}

Header peek_model(const std::filesystem::path& path) { return decode_header(read_file(path)); }

StoredVae load_vae(const std::filesystem::path& path) { return decode_vae(read_file(path)); }

gbdt::GbdtModel load_gbdt(const std::filesystem::path& path, Header* header) {
  return decode_gbdt(read_file(path), header);
}

}  // namespace latentwire::model_file
