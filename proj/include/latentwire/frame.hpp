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

// LatentFrame wire format, version 0x01, little-endian:
//
//   offset  size  field
//   0       4     magic "LWLF"
//   4       1     version (0x01)
//   5       1     precision tag (0 = f32, 1 = f16)
//   6       1     patient_id length L
//   7       L     patient_id bytes
//   7+L     8     window_index (u64)
//   15+L    2     latent_dim D (u16)
//   17+L    D*w   latent values, w = 4 (f32) or 2 (f16)
//   17+L+Dw 4     CRC-32 of every preceding byte
//
// Frame size is therefore 21 + L + D*w.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentwire/binary_io.hpp"
#include "latentwire/quant.hpp"

namespace latentwire::edgewire {

inline constexpr std::uint8_t kFrameVersion = 0x01;
inline constexpr std::uint8_t kFrameMagic[4] = {'L', 'W', 'L', 'F'};
inline constexpr std::size_t kMaxPatientId = 255;

struct LatentFrame {
  std::string patient_id;
  std::uint64_t window_index = 0;
  quant::Precision precision = quant::Precision::F16;
  // Values as they travel: already rounded to half precision for f16 frames.
  std::vector<float> values;

  friend bool operator==(const LatentFrame&, const LatentFrame&) = default;
};

std::size_t frame_size(std::size_t patient_id_length, std::size_t latent_dim, quant::Precision precision);
inline std::size_t frame_size(const LatentFrame& f) {
  return frame_size(f.patient_id.size(), f.values.size(), f.precision);
}

// Rounds values to the frame precision so decode(encode(frame)) == frame.
LatentFrame make_frame(std::string patient_id, std::uint64_t window_index, const Eigen::VectorXd& latent,
                       quant::Precision precision = quant::Precision::F16);

// Throws ValidationError for a patient_id over 255 bytes, more than 65535
// values, an unsupported precision or non-finite values.
Bytes encode_frame(const LatentFrame& frame);
void append_frame(Bytes& out, const LatentFrame& frame);

enum class DecodeStatus { Ok, NeedMore, ProtocolError, IntegrityError, VersionError };
const char* to_string(DecodeStatus status);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  // Bytes the frame occupied (Ok and IntegrityError); 0 otherwise.
  std::size_t consumed = 0;
  std::optional<LatentFrame> frame;
  std::string message;
};

// Decodes the frame at the start of `bytes`. Never throws.
DecodeResult try_decode_frame(std::span<const std::uint8_t> bytes);

// Exactly one frame. Throws ProtocolError, IntegrityError, VersionError, or
// ParseError on truncation or trailing bytes.
LatentFrame decode_frame(std::span<const std::uint8_t> bytes);
// A concatenation of frames (a latent file).
std::vector<LatentFrame> decode_frames(std::span<const std::uint8_t> bytes);

// Offset of the next magic at or after `from`, or bytes.size() when absent.
std::size_t find_magic(std::span<const std::uint8_t> bytes, std::size_t from);

}  // namespace latentwire::edgewire
