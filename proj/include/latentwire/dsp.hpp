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

#include <Eigen/Core>
#include <complex>
#include <filesystem>
#include <optional>

#include "latentwire/ingest.hpp"

namespace latentwire::dsp {

enum class WindowFn { Hann, Rect };

struct StftConfig {
  int fft_size = 256;
  int hop = 128;
  WindowFn window_fn = WindowFn::Hann;
};

// freq_bins x time_frames.
using ComplexMatrix = Eigen::MatrixXcd;

// Channel-stacked magnitude image. values is laid out (channel, freq, time)
// with time fastest, which is the NCHW layout the model consumes.
struct Spectrogram {
  int channels = 0;
  int freq_bins = 0;
  int time_frames = 0;
  Eigen::ArrayXf values;
  std::optional<ingest::Label> label;

  float at(int c, int f, int t) const {
    return values[(static_cast<Eigen::Index>(c) * freq_bins + f) * time_frames + t];
  }
  float& at(int c, int f, int t) {
    return values[(static_cast<Eigen::Index>(c) * freq_bins + f) * time_frames + t];
  }
  Eigen::Index size() const { return values.size(); }
};

void validate(const StftConfig& cfg);

// Periodic analysis window of length n.
Eigen::VectorXd analysis_window(int n, WindowFn fn);

// Unnormalized forward DFT per frame: X[k, t] = sum_n w[n] x[t*hop + n] e^{-2 pi i k n / N}.
// Frames never run past the end of the signal. Throws ShapeError if the
// signal is shorter than one frame.
ComplexMatrix stft(const Eigen::Ref<const Eigen::VectorXd>& signal, const StftConfig& cfg);

inline int stft_frames(Eigen::Index length, const StftConfig& cfg) {
  return static_cast<int>((length - cfg.fft_size) / cfg.hop + 1);
}

// Per channel: |STFT| -> log1p -> min-max to [0,1]. Constant channels map
// to all zeros (range guarded by 1e-8).
Spectrogram to_spectrogram(const ingest::LabeledWindow& window, const StftConfig& cfg);
Spectrogram to_spectrogram(const ingest::SampleMatrix& samples, const StftConfig& cfg);

// Keep the lowest f_model bins; zero-pad (floor half left) or centre-crop time.
Spectrogram resize_to_model(const Spectrogram& spec, int f_model, int t_model);

// 8-bit portable graymap of one channel, highest frequency on the top row.
void write_pgm(const Spectrogram& spec, int channel, const std::filesystem::path& path);

}  // namespace latentwire::dsp
