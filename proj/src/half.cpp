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


#include <Eigen/Core>
#include <bit>
#include <cmath>
#include <iostream>

#include "latentwire/binary_io.hpp"
#include "latentwire/quant.hpp"

namespace latentwire::quant {

const char* to_string(Precision p) {
  switch (p) {
    case Precision::F32: return "f32";
    case Precision::F16: return "f16";
    case Precision::F64: return "f64";
  }
  return "unknown";
}

std::uint16_t to_half_bits(float value, bool* saturated) {
  if (std::isnan(value)) throw ValidationError("cannot quantize NaN weight (corrupt model)");
  bool clipped = false;
  if (std::abs(value) > kHalfMax) {
    value = std::copysign(kHalfMax, value);
    clipped = true;
  }
  if (saturated) *saturated = clipped;
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(value));
}

float from_half_bits(std::uint16_t bits) {
  return static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
}

std::uint32_t weights_checksum(const vae::VaeModel<float>& model) {
  ByteWriter w;
  for (const auto* set : {&model.encoder(), &model.decoder()})
    for (const auto& p : set->all())
      for (Eigen::Index i = 0; i < p.value.size(); ++i) w.f32(p.value.values[i]);
  return crc32(w.data());
}

namespace {

std::vector<QuantizedTensor> pack(const vae::ParameterSet<float>& set, std::size_t& saturated) {
  std::vector<QuantizedTensor> out;
  for (const auto& p : set.all()) {
    QuantizedTensor q{p.name, p.value.shape, {}, p.trainable};
    q.bits.resize(static_cast<std::size_t>(p.value.size()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      bool clipped = false;
      q.bits[static_cast<std::size_t>(i)] = to_half_bits(p.value.values[i], &clipped);
      saturated += clipped;
    }
    out.push_back(std::move(q));
  }
  return out;
}

vae::ParameterSet<float> unpack(const std::vector<QuantizedTensor>& tensors) {
  vae::ParameterSet<float> set;
  for (const auto& q : tensors) {
    ad::Tensor<float> t(q.shape);
    if (static_cast<std::size_t>(t.size()) != q.bits.size()) {
      throw ShapeError("quantized tensor " + q.name + " has " + std::to_string(q.bits.size()) +
                       " values for shape " + ad::shape_string(q.shape));
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.values[i] = from_half_bits(q.bits[static_cast<std::size_t>(i)]);
    set.add(q.name, std::move(t), q.trainable);
  }
  return set;
}

}  // namespace

QuantizedModel quantize(const vae::VaeModel<float>& model) {
  QuantizedModel q;
  q.config = model.config();
  q.has_decoder = model.has_decoder();
  q.source_checksum = weights_checksum(model);
  q.encoder = pack(model.encoder(), q.saturated);
  q.decoder = pack(model.decoder(), q.saturated);
  if (q.saturated > 0) {
    std::cerr << "warning: " << q.saturated << " weight(s) exceeded the half-precision range and were saturated to "
              << kHalfMax << "\n";
  }
  return q;
}

vae::VaeModel<float> dequantize(const QuantizedModel& model) {
  return vae::VaeModel<float>::from_parameters(model.config, unpack(model.encoder), unpack(model.decoder),
                                               model.has_decoder);
}

std::vector<vae::EncoderOutput> quantized_encode(const QuantizedModel& model,
                                                 const std::vector<const dsp::Spectrogram*>& xs) {
  if (model.precision != Precision::F16) throw ValidationError("quantized_encode: model is not half precision");
  QuantizedModel encoder_part = model;
  encoder_part.decoder.clear();
  encoder_part.has_decoder = false;
  return vae::encode_batch(dequantize(encoder_part), xs);
}

double size_reduction_percent(std::uint64_t before_bytes, std::uint64_t after_bytes) {
  if (before_bytes == 0) return 0.0;
  return (1.0 - static_cast<double>(after_bytes) / static_cast<double>(before_bytes)) * 100.0;
}

}  // namespace latentwire::quant
