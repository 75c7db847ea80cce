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


#include "latentwire/frame.hpp"

#include <algorithm>
#include <cmath>

#include "latentwire/error.hpp"

namespace latentwire::edgewire {

namespace {

std::size_t value_width(quant::Precision p) { return p == quant::Precision::F16 ? 2 : 4; }

bool supported_precision(std::uint8_t tag) { return tag == 0 || tag == 1; }

}  // namespace

std::size_t frame_size(std::size_t patient_id_length, std::size_t latent_dim, quant::Precision precision) {
  return 21 + patient_id_length + latent_dim * value_width(precision);
}

LatentFrame make_frame(std::string patient_id, std::uint64_t window_index, const Eigen::VectorXd& latent,
                       quant::Precision precision) {
  LatentFrame f{std::move(patient_id), window_index, precision, {}};
  f.values.reserve(static_cast<std::size_t>(latent.size()));
  for (Eigen::Index i = 0; i < latent.size(); ++i) {
    const auto v = static_cast<float>(latent[i]);
    f.values.push_back(precision == quant::Precision::F16 ? quant::round_trip_half(v) : v);
  }
  return f;
}

void append_frame(Bytes& out, const LatentFrame& frame) {
  if (frame.patient_id.size() > kMaxPatientId) throw ValidationError("patient_id longer than 255 bytes");
  if (frame.values.size() > 0xFFFF) throw ValidationError("latent_dim exceeds 65535");
  if (!supported_precision(static_cast<std::uint8_t>(frame.precision))) {
    throw ValidationError(std::string("frames carry f32 or f16, not ") + quant::to_string(frame.precision));
  }
  ByteWriter w;
  w.bytes(kFrameMagic);
  w.u8(kFrameVersion);
  w.u8(static_cast<std::uint8_t>(frame.precision));
  w.str8(frame.patient_id);
  w.u64(frame.window_index);
  w.u16(static_cast<std::uint16_t>(frame.values.size()));
  for (float v : frame.values) {
    if (!std::isfinite(v)) throw ValidationError("latent values must be finite");
    if (frame.precision == quant::Precision::F16) {
      w.u16(quant::to_half_bits(v));
    } else {
      w.f32(v);
    }
  }
  w.u32(crc32(w.data()));
  out.insert(out.end(), w.data().begin(), w.data().end());
}

Bytes encode_frame(const LatentFrame& frame) {
  Bytes out;
  append_frame(out, frame);
  return out;
}

const char* to_string(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::Ok: return "ok";
    case DecodeStatus::NeedMore: return "need-more";
    case DecodeStatus::ProtocolError: return "protocol";
    case DecodeStatus::IntegrityError: return "integrity";
    case DecodeStatus::VersionError: return "version";
  }
  return "unknown";
}

DecodeResult try_decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  const std::size_t have_magic = std::min<std::size_t>(bytes.size(), 4);
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(have_magic), kFrameMagic)) {
    r.status = DecodeStatus::ProtocolError;
    r.message = "bad frame magic";
    return r;
  }
  if (bytes.size() < 7) return r;
  if (bytes[4] != kFrameVersion) {
    r.status = DecodeStatus::VersionError;
    r.message = "frame version " + std::to_string(bytes[4]) + " unsupported (supported versions: 1)";
    return r;
  }
  if (!supported_precision(bytes[5])) {
    r.status = DecodeStatus::ProtocolError;
    r.message = "unknown precision tag " + std::to_string(bytes[5]);
    return r;
  }
  const auto precision = static_cast<quant::Precision>(bytes[5]);
  const std::size_t id_len = bytes[6];
  if (bytes.size() < 17 + id_len) return r;
  const std::size_t dim = bytes[15 + id_len] | (static_cast<std::size_t>(bytes[16 + id_len]) << 8);
  const std::size_t size = frame_size(id_len, dim, precision);
  if (bytes.size() < size) return r;

  ByteReader crc_reader(bytes.subspan(size - 4, 4));
  if (crc_reader.u32() != crc32(bytes.first(size - 4))) {
    r.status = DecodeStatus::IntegrityError;
    r.consumed = size;
    r.message = "frame CRC mismatch";
    return r;
  }
  ByteReader in(bytes.subspan(6, size - 10));
  LatentFrame f;
  f.precision = precision;
  f.patient_id = in.str8();
  f.window_index = in.u64();
  in.u16();
  f.values.resize(dim);
  for (auto& v : f.values) v = precision == quant::Precision::F16 ? quant::from_half_bits(in.u16()) : in.f32();
  r.status = DecodeStatus::Ok;
  r.consumed = size;
  r.frame = std::move(f);
  return r;
}

namespace {

[[noreturn]] void raise(const DecodeResult& r, std::size_t offset) {
  const std::string where = " at byte " + std::to_string(offset);
  switch (r.status) {
    case DecodeStatus::ProtocolError: throw ProtocolError(r.message + where);
    case DecodeStatus::IntegrityError: throw IntegrityError(r.message + where);
    case DecodeStatus::VersionError: throw VersionError(r.message + where);
    default: throw ParseError("truncated frame" + where);
  }
}

}  // namespace

LatentFrame decode_frame(std::span<const std::uint8_t> bytes) {
  auto r = try_decode_frame(bytes);
  if (r.status != DecodeStatus::Ok) raise(r, 0);
  if (r.consumed != bytes.size()) throw ParseError(std::to_string(bytes.size() - r.consumed) + " trailing bytes after frame");
  return std::move(*r.frame);
}

std::vector<LatentFrame> decode_frames(std::span<const std::uint8_t> bytes) {
  std::vector<LatentFrame> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto r = try_decode_frame(bytes.subspan(pos));
    if (r.status != DecodeStatus::Ok) raise(r, pos);
    pos += r.consumed;
    out.push_back(std::move(*r.frame));
  }
  return out;
}

std::size_t find_magic(std::span<const std::uint8_t> bytes, std::size_t from) {
  if (from >= bytes.size()) return bytes.size();
  const auto it = std::search(bytes.begin() + static_cast<std::ptrdiff_t>(from), bytes.end(), std::begin(kFrameMagic),
                              std::end(kFrameMagic));
  return static_cast<std::size_t>(it - bytes.begin());
}

}  // namespace latentwire::edgewire
