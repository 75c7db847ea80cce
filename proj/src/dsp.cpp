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


#include "latentwire/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "latentwire/error.hpp"

namespace latentwire::dsp {

namespace {
constexpr double kRangeGuard = 1e-8;
}

void validate(const StftConfig& cfg) {
  if (cfg.fft_size <= 0 || (cfg.fft_size & (cfg.fft_size - 1)) != 0) {
    throw ValidationError("fft_size must be a power of two, got " + std::to_string(cfg.fft_size));
  }
  if (cfg.hop <= 0 || cfg.hop > cfg.fft_size) {
    throw ValidationError("hop must satisfy 0 < hop <= fft_size, got " + std::to_string(cfg.hop));
  }
}

Eigen::VectorXd analysis_window(int n, WindowFn fn) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = fn == WindowFn::Hann ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n) : 1.0;
  }
  return w;
}

ComplexMatrix stft(const Eigen::Ref<const Eigen::VectorXd>& signal, const StftConfig& cfg) {
  validate(cfg);
  if (signal.size() < cfg.fft_size) {
    throw ShapeError("stft: signal of " + std::to_string(signal.size()) +
                     " samples is shorter than fft_size " + std::to_string(cfg.fft_size));
  }
  const int frames = stft_frames(signal.size(), cfg);
  const int bins = cfg.fft_size / 2 + 1;
  const Eigen::VectorXd window = analysis_window(cfg.fft_size, cfg.window_fn);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  std::vector<std::complex<double>> spectrum;
  ComplexMatrix out(bins, frames);
  for (int t = 0; t < frames; ++t) {
    const Eigen::Index first = static_cast<Eigen::Index>(t) * cfg.hop;
    for (int n = 0; n < cfg.fft_size; ++n) frame[n] = window[n] * signal[first + n];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < bins; ++k) out(k, t) = spectrum[static_cast<std::size_t>(k)];
  }
  return out;
}

Spectrogram to_spectrogram(const ingest::SampleMatrix& samples, const StftConfig& cfg) {
  validate(cfg);
  Spectrogram spec;
  spec.channels = static_cast<int>(samples.rows());
  spec.freq_bins = cfg.fft_size / 2 + 1;
  if (samples.cols() < cfg.fft_size) {
    throw ShapeError("window of " + std::to_string(samples.cols()) + " samples is shorter than fft_size");
  }
  spec.time_frames = stft_frames(samples.cols(), cfg);
  const Eigen::Index plane = static_cast<Eigen::Index>(spec.freq_bins) * spec.time_frames;
  spec.values.resize(spec.channels * plane);

  for (int c = 0; c < spec.channels; ++c) {
    const Eigen::VectorXd signal = samples.row(c).transpose().cast<double>();
    const ComplexMatrix x = stft(signal, cfg);
    // Row-major copy so the plane is (freq, time) with time fastest.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mag =
        x.cwiseAbs().array().log1p().matrix();
    const double lo = mag.minCoeff();
    const double range = std::max(mag.maxCoeff() - lo, kRangeGuard);
    mag = ((mag.array() - lo) / range).matrix();
    spec.values.segment(c * plane, plane) =
        Eigen::Map<const Eigen::ArrayXd>(mag.data(), plane).cast<float>();
  }
  return spec;
}

Spectrogram to_spectrogram(const ingest::LabeledWindow& window, const StftConfig& cfg) {
  Spectrogram spec = to_spectrogram(window.samples, cfg);
  spec.label = window.label;
  return spec;
}

Spectrogram resize_to_model(const Spectrogram& spec, int f_model, int t_model) {
  if (f_model < 1 || t_model < 1) throw ValidationError("model dims must be positive");
  if (f_model > spec.freq_bins) {
    throw ValidationError("resize_to_model: f_model " + std::to_string(f_model) + " exceeds " +
                          std::to_string(spec.freq_bins) + " frequency bins");
  }
  Spectrogram out;
  out.channels = spec.channels;
  out.freq_bins = f_model;
  out.time_frames = t_model;
  out.label = spec.label;
  out.values = Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(spec.channels) * f_model * t_model);

  // dst column d reads source column d + shift.
  const int shift = spec.time_frames >= t_model ? (spec.time_frames - t_model) / 2
                                                 : -((t_model - spec.time_frames) / 2);
  for (int c = 0; c < spec.channels; ++c)
    for (int f = 0; f < f_model; ++f)
      for (int t = 0; t < t_model; ++t) {
        const int src = t + shift;
        if (src >= 0 && src < spec.time_frames) out.at(c, f, t) = spec.at(c, f, src);
      }
  return out;
}

void write_pgm(const Spectrogram& spec, int channel, const std::filesystem::path& path) {
  if (channel < 0 || channel >= spec.channels) throw ValidationError("channel out of range");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << spec.time_frames << ' ' << spec.freq_bins << "\n255\n";
  for (int f = spec.freq_bins - 1; f >= 0; --f)
    for (int t = 0; t < spec.time_frames; ++t) {
      const float v = std::clamp(spec.at(channel, f, t), 0.0f, 1.0f);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
}

}  // namespace latentwire::dsp
