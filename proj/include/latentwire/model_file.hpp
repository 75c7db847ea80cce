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

// Model file layout (little-endian):
//
//   0   4  magic "LWMD"
//   4   1  format version (0x01)
//   5   1  kind       0 = vae-full, 1 = vae-encoder, 2 = gbdt
//   6   1  precision  0 = f32, 1 = f16, 2 = f64
//   7   1  reserved (0)
//   8   8  config hash
//  16   8  payload length P
//  24   P  payload
//  24+P 4  CRC-32 of bytes [0, 24+P)
//
// VAE payload: 7 x u32 config (latent_dim, in_channels, f_model, t_model,
// base_channels, blocks_per_stage, stages), u32 source checksum, u32 encoder
// tensor count, u32 decoder tensor count, then per tensor: u16 name length,
// name, u8 trainable, u8 rank, rank x u32 dims, values at the file precision.
//
// GBDT payload: params (u32 n_estimators, u32 max_depth, f64 eta, f64
// reg_lambda, f64 reg_alpha, f64 scale_pos_weight or NaN, u32
// early_stopping_rounds, f64 min_child_weight, f64 min_split_gain), u32
// feature count, f64 base margin, f64 pos weight, u32 best round, u32 tree
// count, then per tree u32 node count and per node i32 feature, f64
// threshold, i32 left, i32 right, f64 weight.

#include <cstdint>
#include <filesystem>
#include <variant>

#include "latentwire/binary_io.hpp"
#include "latentwire/gbdt.hpp"
#include "latentwire/quant.hpp"

namespace latentwire::model_file {

inline constexpr std::uint8_t kFormatVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 24;

enum class ModelKind : std::uint8_t { VaeFull = 0, VaeEncoder = 1, Gbdt = 2 };
const char* to_string(ModelKind kind);

struct Header {
  std::uint8_t version = kFormatVersion;
  ModelKind kind = ModelKind::VaeFull;
  quant::Precision precision = quant::Precision::F32;
  std::uint64_t config_hash = 0;
};

Bytes encode(const vae::VaeModel<float>& model, std::uint64_t config_hash);
Bytes encode(const quant::QuantizedModel& model, std::uint64_t config_hash);
Bytes encode(const gbdt::GbdtModel& model, std::uint64_t config_hash);

// Validates magic, version and CRC. Throws ParseError, VersionError or
// IntegrityError.
Header decode_header(std::span<const std::uint8_t> bytes);

// A stored VAE at its stored precision.
struct StoredVae {
  Header header;
  std::variant<vae::VaeModel<float>, quant::QuantizedModel> model;

  // Float weights for computation (dequantized when stored as f16).
  vae::VaeModel<float> working_model() const;
};

// Throws KindError when the bytes hold a different kind.
StoredVae decode_vae(std::span<const std::uint8_t> bytes);
gbdt::GbdtModel decode_gbdt(std::span<const std::uint8_t> bytes, Header* header = nullptr);

template <typename Model>
void save_model(const Model& model, const std::filesystem::path& path, std::uint64_t config_hash) {
  write_file(path, encode(model, config_hash));
}

Header peek_model(const std::filesystem::path& path);
StoredVae load_vae(const std::filesystem::path& path);
gbdt::GbdtModel load_gbdt(const std::filesystem::path& path, Header* header = nullptr);

}  // namespace latentwire::model_file
