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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "latentwire/dsp.hpp"
#include "latentwire/error.hpp"

namespace lw = latentwire;
namespace dsp = latentwire::dsp;

namespace {

// Direct O(n^2) DFT of one windowed frame.
std::vector<std::complex<double>> naive_dft(const Eigen::VectorXd& x) {
  const auto n = x.size();
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    for (Eigen::Index j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -2 * std::numbers::pi * k * j / n);
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

Eigen::VectorXd noise(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::VectorXd x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

dsp::Spectrogram ramp(int channels, int bins, int frames) {
  dsp::Spectrogram s{channels, bins, frames, Eigen::ArrayXf(channels * bins * frames), {}};
  for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values[i] = static_cast<float>(i + 1);
  return s;
}

}  // namespace

TEST(Stft, SinusoidPeaksAtItsBin) {
  const dsp::StftConfig cfg{64, 32, dsp::WindowFn::Rect};
  for (int k : {1, 5, 17, 31}) {
    Eigen::VectorXd x(640);
    for (Eigen::Index n = 0; n < x.size(); ++n) x[n] = std::sin(2 * std::numbers::pi * k * n / 64.0);
    const auto X = dsp::stft(x, cfg);
    EXPECT_EQ(X.rows(), 33);
    EXPECT_EQ(X.cols(), (640 - 64) / 32 + 1);
    for (Eigen::Index t = 0; t < X.cols(); ++t) {
      Eigen::Index arg;
      X.col(t).cwiseAbs().maxCoeff(&arg);
      EXPECT_EQ(arg, k);
    }
  }
}

TEST(Stft, ConstantSignalOnlyInDcBin) {
  const auto X = dsp::stft(Eigen::VectorXd::Constant(256, 2.5), {64, 64, dsp::WindowFn::Rect});
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    EXPECT_NEAR(std::abs(X(0, t)), 2.5 * 64, 1e-9);
    EXPECT_LT(X.col(t).tail(X.rows() - 1).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Stft, ParsevalAgainstDirectDft) {
  const dsp::StftConfig cfg{32, 32, dsp::WindowFn::Rect};
  const auto x = noise(32 * 5, 4);
  const auto X = dsp::stft(x, cfg);
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    const Eigen::VectorXd frame = x.segment(t * 32, 32);
    const auto ref = naive_dft(frame);
    for (Eigen::Index k = 0; k < X.rows(); ++k) EXPECT_LT(std::abs(X(k, t) - ref[static_cast<std::size_t>(k)]), 1e-9);
    // Half spectrum: DC and Nyquist once, the rest twice.
    double energy = std::norm(X(0, t)) + std::norm(X(16, t));
    for (Eigen::Index k = 1; k < 16; ++k) energy += 2 * std::norm(X(k, t));
    EXPECT_NEAR(energy, 32 * frame.squaredNorm(), 1e-8 * energy);
  }
}

TEST(Stft, HannMatchesDirectDft) {
  const dsp::StftConfig cfg{16, 8, dsp::WindowFn::Hann};
  const auto x = noise(64, 5);
  const auto X = dsp::stft(x, cfg);
  const auto w = dsp::analysis_window(16, dsp::WindowFn::Hann);
  EXPECT_EQ(w[0], 0.0);
  for (Eigen::Index t = 0; t < X.cols(); ++t) {
    const Eigen::VectorXd frame = x.segment(t * 8, 16).cwiseProduct(w);
    const auto ref = naive_dft(frame);
    for (Eigen::Index k = 0; k < X.rows(); ++k) EXPECT_LT(std::abs(X(k, t) - ref[static_cast<std::size_t>(k)]), 1e-9);
  }
}

TEST(Stft, ScalesLinearly) {
  const dsp::StftConfig cfg{32, 16, dsp::WindowFn::Hann};
  const auto x = noise(200, 6);
  const auto X = dsp::stft(x, cfg);
  const auto Y = dsp::stft(3.5 * x, cfg);
  EXPECT_LT((Y - 3.5 * X).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Stft, Errors) {
  EXPECT_THROW(dsp::stft(Eigen::VectorXd::Zero(10), {32, 16, dsp::WindowFn::Hann}), lw::ShapeError);
  EXPECT_THROW(dsp::validate({30, 15, dsp::WindowFn::Hann}), lw::ValidationError);
  EXPECT_THROW(dsp::validate({32, 0, dsp::WindowFn::Hann}), lw::ValidationError);
}

TEST(Spectrogram, ZeroWindowIsZero) {
  const auto s = dsp::to_spectrogram(lw::ingest::SampleMatrix::Zero(3, 256), {64, 32, dsp::WindowFn::Hann});
  EXPECT_EQ(s.channels, 3);
  EXPECT_EQ(s.freq_bins, 33);
  EXPECT_EQ(s.time_frames, 7);
  EXPECT_TRUE((s.values == 0).all());
}

TEST(Spectrogram, PerChannelRangeAndDeterminism) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(0, 1);
  lw::ingest::SampleMatrix m(4, 512);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng) * static_cast<float>(1 + i % 4);
  const dsp::StftConfig cfg{64, 32, dsp::WindowFn::Hann};
  const auto a = dsp::to_spectrogram(m, cfg);
  const auto b = dsp::to_spectrogram(m, cfg);
  EXPECT_TRUE((a.values == b.values).all());
  const auto plane = static_cast<Eigen::Index>(a.freq_bins) * a.time_frames;
  for (int c = 0; c < 4; ++c) {
    const auto ch = a.values.segment(c * plane, plane);
    EXPECT_GE(ch.minCoeff(), 0.0f);
    EXPECT_FLOAT_EQ(ch.maxCoeff(), 1.0f);
    EXPECT_FLOAT_EQ(ch.minCoeff(), 0.0f);
  }
}

TEST(Spectrogram, ArgmaxUnchangedUnderChannelScaling) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> g(0, 1);
  lw::ingest::SampleMatrix m(2, 512);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  const dsp::StftConfig cfg{64, 32, dsp::WindowFn::Hann};
  const auto a = dsp::to_spectrogram(m, cfg);
  lw::ingest::SampleMatrix scaled = m;
  scaled.row(1) *= 7.0f;
  const auto b = dsp::to_spectrogram(scaled, cfg);
  const auto plane = static_cast<Eigen::Index>(a.freq_bins) * a.time_frames;
  for (int c = 0; c < 2; ++c) {
    Eigen::Index ia, ib;
    a.values.segment(c * plane, plane).maxCoeff(&ia);
    b.values.segment(c * plane, plane).maxCoeff(&ib);
    EXPECT_EQ(ia, ib);
  }
  EXPECT_TRUE((a.values.head(plane) == b.values.head(plane)).all());
}

TEST(Spectrogram, LabelCarried) {
  lw::ingest::LabeledWindow w{0, 4, lw::ingest::SampleMatrix::Ones(1, 128), lw::ingest::Label::Seizure};
  EXPECT_EQ(dsp::to_spectrogram(w, {32, 32, dsp::WindowFn::Hann}).label, lw::ingest::Label::Seizure);
}

TEST(Spectrogram, ShapeDependsOnlyOnDims) {
  const dsp::StftConfig cfg{32, 16, dsp::WindowFn::Hann};
  for (std::uint64_t seed : {1, 2, 3}) {
    auto x = noise(300, seed);
    lw::ingest::SampleMatrix m(2, 300);
    m.row(0) = x.cast<float>().transpose();
    m.row(1) = (x * 0.0).cast<float>().transpose();
    const auto s = dsp::resize_to_model(dsp::to_spectrogram(m, cfg), 16, 16);
    EXPECT_EQ(s.size(), 2 * 16 * 16);
  }
}

TEST(Resize, PadsSixLeftSevenRight) {
  const auto src = ramp(2, 129, 19);
  const auto out = dsp::resize_to_model(src, 128, 32);
  EXPECT_EQ(out.freq_bins, 128);
  EXPECT_EQ(out.time_frames, 32);
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < 128; ++f) {
      for (int t = 0; t < 6; ++t) EXPECT_EQ(out.at(c, f, t), 0.0f);
      for (int t = 0; t < 19; ++t) EXPECT_EQ(out.at(c, f, 6 + t), src.at(c, f, t));
      for (int t = 25; t < 32; ++t) EXPECT_EQ(out.at(c, f, t), 0.0f);
    }
}

TEST(Resize, IdentityWhenDimsMatch) {
  const auto src = ramp(3, 16, 8);
  const auto out = dsp::resize_to_model(src, 16, 8);
  EXPECT_TRUE((out.values == src.values).all());
}

TEST(Resize, CentredCropMatchesSlice) {
  for (int frames : {33, 40, 41}) {
    const auto src = ramp(2, 20, frames);
    const auto out = dsp::resize_to_model(src, 16, 32);
    const int first = (frames - 32) / 2;
    for (int c = 0; c < 2; ++c)
      for (int f = 0; f < 16; ++f)
        for (int t = 0; t < 32; ++t) EXPECT_EQ(out.at(c, f, t), src.at(c, f, first + t));
  }
}

TEST(Resize, TooManyBinsErrors) {
  EXPECT_THROW(dsp::resize_to_model(ramp(1, 8, 8), 16, 8), lw::ValidationError);
}
