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

#include <cstdint>
#include <string>
#include <vector>

#include "latentwire/vae.hpp"

namespace latentwire::quant {

enum class Precision : std::uint8_t { F32 = 0, F16 = 1, F64 = 2 };

const char* to_string(Precision p);

// Largest finite half-precision value.
inline constexpr float kHalfMax = 65504.0f;

// Round-to-nearest-even into IEEE binary16. Magnitudes above kHalfMax
// saturate to +-kHalfMax and set *saturated. NaN throws ValidationError.
std::uint16_t to_half_bits(float value, bool* saturated = nullptr);
float from_half_bits(std::uint16_t bits);

// to_half_bits followed by from_half_bits.
inline float round_trip_half(float value, bool* saturated = nullptr) {
  return from_half_bits(to_half_bits(value, saturated));
}

struct QuantizedTensor {
  std::string name;
  ad::Shape shape;
  std::vector<std::uint16_t> bits;
  bool trainable = true;
};

// Half-precision snapshot of a VAE. Weights are expanded back to float for
// computation.
struct QuantizedModel {
  Precision precision = Precision::F16;
  vae::VaeConfig config;
  bool has_decoder = true;
  std::vector<QuantizedTensor> encoder;
  std::vector<QuantizedTensor> decoder;
  std::uint32_t source_checksum = 0;  // CRC-32 of the float32 weights quantized
  std::size_t saturated = 0;          // weights clipped to +-kHalfMax
};

// CRC-32 over every parameter's float32 bytes in storage order.
std::uint32_t weights_checksum(const vae::VaeModel<float>& model);

QuantizedModel quantize(const vae::VaeModel<float>& model);
vae::VaeModel<float> dequantize(const QuantizedModel& model);

// The encoder half of a model; encode() on it matches the full model.
inline vae::VaeModel<float> extract_encoder(const vae::VaeModel<float>& model) { return model.encoder_only(); }

std::vector<vae::EncoderOutput> quantized_encode(const QuantizedModel& model,
                                                 const std::vector<const dsp::Spectrogram*>& xs);

// (1 - after / before) * 100.
double size_reduction_percent(std::uint64_t before_bytes, std::uint64_t after_bytes);

}  // namespace latentwire::quant
