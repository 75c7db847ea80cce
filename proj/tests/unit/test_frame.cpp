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


#include <gtest/gtest.h>

#include <random>

#include "latentwire/error.hpp"
#include "latentwire/frame.hpp"

namespace lw = latentwire;
namespace ew = latentwire::edgewire;
using lw::quant::Precision;

namespace {

Eigen::VectorXd random_latent(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0, 2);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n(rng);
  return v;
}

ew::LatentFrame random_frame(std::mt19937_64& rng) {
  std::string id(rng() % 40, 'x');
  for (auto& c : id) c = static_cast<char>(rng() % 256);  // any bytes
  const int dim = static_cast<int>(rng() % 300);
  const auto precision = rng() % 2 ? Precision::F16 : Precision::F32;
  return ew::make_frame(id, rng(), random_latent(rng, dim), precision);
}

}  // namespace

TEST(Frame, RoundTrip64DimF16) {
  std::mt19937_64 rng(1);
  const auto f = ew::make_frame("chb01", 42, random_latent(rng, 64), Precision::F16);
  const auto bytes = ew::encode_frame(f);
  EXPECT_EQ(bytes.size(), 21u + 5 + 128);
  EXPECT_EQ(ew::decode_frame(bytes), f);
}

TEST(Frame, Layout) {
  ew::LatentFrame f;
  f.patient_id = "AB";
  f.window_index = 0x0102030405060708ULL;
  f.precision = Precision::F32;
  f.values = {1.0f};
  const auto b = ew::encode_frame(f);
  ASSERT_EQ(b.size(), 21u + 2 + 4);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "LWLF");
  EXPECT_EQ(b[4], 0x01);
  EXPECT_EQ(b[5], 0x00);
  EXPECT_EQ(b[6], 2);
  EXPECT_EQ(b[7], 'A');
  EXPECT_EQ(b[9], 0x08);   // little-endian window index
  EXPECT_EQ(b[16], 0x01);
  EXPECT_EQ(b[17], 0x01);  // latent_dim
  EXPECT_EQ(b[18], 0x00);
  EXPECT_EQ(b[22], 0x3f);  // 1.0f = 0x3f800000
  EXPECT_EQ(lw::crc32(std::span(b).first(b.size() - 4)),
            static_cast<std::uint32_t>(b[23] | b[24] << 8 | b[25] << 16 | static_cast<std::uint32_t>(b[26]) << 24));
}

// Bytes produced independently with Python struct ('<e' halves) and zlib.crc32.
TEST(Frame, MatchesReferenceBytes) {
  Eigen::VectorXd v(4);
  v << 1.0, -2.0, 0.5, 0.0;
  const lw::Bytes want{0x4c, 0x57, 0x4c, 0x46, 0x01, 0x01, 0x05, 0x63, 0x68, 0x62, 0x30, 0x31,
                       0x2a, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x04, 0x00, 0x00, 0x3c,
                       0x00, 0xc0, 0x00, 0x38, 0x00, 0x00, 0xe0, 0x2a, 0x4a, 0xfe};
  EXPECT_EQ(ew::encode_frame(ew::make_frame("chb01", 42, v)), want);
}

TEST(Frame, SizeFormula) {
  for (std::size_t l : {0u, 1u, 255u}) {
    for (std::size_t d : {0u, 16u, 64u, 256u}) {
      EXPECT_EQ(ew::frame_size(l, d, Precision::F16), 21 + l + 2 * d);
      EXPECT_EQ(ew::frame_size(l, d, Precision::F32), 21 + l + 4 * d);
    }
  }
  // 100 frames of 64-dim f16 with an empty id.
  EXPECT_EQ(100 * ew::frame_size(0, 64, Precision::F16), 100u * (17 + 128 + 4));
}

TEST(Frame, ZeroLengthPatientId) {
  const auto f = ew::make_frame("", 0, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(ew::decode_frame(ew::encode_frame(f)), f);
}

TEST(Frame, ThousandRandomFramesRoundTrip) {
  std::mt19937_64 rng(2);
  lw::Bytes stream;
  std::vector<ew::LatentFrame> frames;
  for (int i = 0; i < 1000; ++i) {
    frames.push_back(random_frame(rng));
    const auto b = ew::encode_frame(frames.back());
    ASSERT_EQ(b.size(), ew::frame_size(frames.back()));
    ASSERT_EQ(ew::decode_frame(b), frames.back()) << "frame " << i;
    ew::append_frame(stream, frames.back());
  }
  EXPECT_EQ(ew::decode_frames(stream), frames);
}

TEST(Frame, F16ValuesAreRoundedOnConstruction) {
  Eigen::VectorXd v(2);
  v << 0.1, 70000.0;
  const auto f = ew::make_frame("p", 1, v, Precision::F16);
  EXPECT_EQ(f.values[0], lw::quant::round_trip_half(0.1f));
  EXPECT_EQ(f.values[1], 65504.0f);
}

TEST(Frame, EverySingleByteFlipIsDetected) {
  std::mt19937_64 rng(3);
  const auto f = ew::make_frame("chb01", 1234, random_latent(rng, 64), Precision::F16);
  const auto good = ew::encode_frame(f);
  int integrity = 0, header = 0;
  for (std::size_t pos = 0; pos < good.size(); ++pos) {
    for (int x = 1; x < 256; ++x) {
      auto bad = good;
      bad[pos] ^= static_cast<std::uint8_t>(x);
      const auto r = ew::try_decode_frame(bad);
      ASSERT_NE(r.status, ew::DecodeStatus::Ok) << "byte " << pos << " xor " << x;
      (r.status == ew::DecodeStatus::IntegrityError ? integrity : header) += 1;
    }
  }
  EXPECT_GT(integrity, 0);
  EXPECT_GT(header, 0);
}

TEST(Frame, HeaderErrors) {
  const auto good = ew::encode_frame(ew::make_frame("p", 1, Eigen::VectorXd::Ones(4)));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(ew::try_decode_frame(bad).status, ew::DecodeStatus::ProtocolError);
  EXPECT_THROW(ew::decode_frame(bad), lw::ProtocolError);
  bad = good;
  bad[4] = 0x02;
  EXPECT_EQ(ew::try_decode_frame(bad).status, ew::DecodeStatus::VersionError);
  EXPECT_THROW(ew::decode_frame(bad), lw::VersionError);
  bad = good;
  bad[10] ^= 0x40;
  const auto r = ew::try_decode_frame(bad);
  EXPECT_EQ(r.status, ew::DecodeStatus::IntegrityError);
  EXPECT_EQ(r.consumed, good.size());
  EXPECT_THROW(ew::decode_frame(bad), lw::IntegrityError);
}

TEST(Frame, TruncationNeedsMore) {
  const auto good = ew::encode_frame(ew::make_frame("patient", 9, Eigen::VectorXd::Ones(8)));
  for (std::size_t n = 0; n < good.size(); ++n) {
    EXPECT_EQ(ew::try_decode_frame(std::span(good).first(n)).status, ew::DecodeStatus::NeedMore) << n;
  }
  EXPECT_THROW(ew::decode_frame(std::span(good).first(good.size() - 1)), lw::ParseError);
  auto extra = good;
  extra.push_back(0);
  EXPECT_THROW(ew::decode_frame(extra), lw::ParseError);
}

TEST(Frame, EncodeRejectsInvalidFrames) {
  auto f = ew::make_frame(std::string(256, 'a'), 0, Eigen::VectorXd::Ones(1));
  EXPECT_THROW(ew::encode_frame(f), lw::ValidationError);
  f = ew::make_frame(std::string(255, 'a'), 0, Eigen::VectorXd::Ones(1));
  EXPECT_NO_THROW(ew::encode_frame(f));
  f.values[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(ew::encode_frame(f), lw::ValidationError);
  f.values.assign(65536, 0.0f);
  EXPECT_THROW(ew::encode_frame(f), lw::ValidationError);
}

TEST(Frame, FindMagic) {
  lw::Bytes b{1, 2, 'L', 'W', 'L', 'F', 9};
  EXPECT_EQ(ew::find_magic(b, 0), 2u);
  EXPECT_EQ(ew::find_magic(b, 3), b.size());
}
