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


#include "latentwire/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "latentwire/error.hpp"

namespace latentwire::ingest {

namespace {

// One period of the spike-wave complex, phase in [0, 1): a sharp negative
// spike followed by a slow positive wave.
double spike_wave(double phase) {
  const double spike = -std::exp(-std::pow((phase - 0.15) / 0.04, 2.0));
  const double wave = (phase >= 0.35 && phase < 0.95)
                          ? 0.6 * std::sin(std::numbers::pi * (phase - 0.35) / 0.6)
                          : 0.0;
  return spike + wave;
}

double spike_wave_rms() {
  constexpr int kSteps = 10000;
  double acc = 0;
  for (int i = 0; i < kSteps; ++i) {
    const double v = spike_wave((i + 0.5) / kSteps);
    acc += v * v;
  }
  return std::sqrt(acc / kSteps);
}

// Paul Kellet's refined pink-noise filter over white Gaussian input,
// normalised to unit RMS.
void fill_pink(Eigen::Ref<Eigen::RowVectorXf> row, std::mt19937_64& rng) {
  std::normal_distribution<double> white(0.0, 1.0);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  Eigen::RowVectorXd tmp(row.size());
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double w = white(rng);
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    tmp[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  tmp.array() -= tmp.mean();
  const double rms = std::sqrt(tmp.squaredNorm() / static_cast<double>(tmp.size()));
  row = (tmp / (rms > 0 ? rms : 1.0)).cast<float>();
}

}  // namespace

SynthDataset synth_dataset(const SynthConfig& config, std::uint64_t seed) {
  if (config.duration_s <= 0 || config.channel_count < 1 || config.sample_rate_hz <= 0) {
    throw ValidationError("synth config needs positive duration, channels and rate");
  }
  if (config.seizure_count < 0 || (config.seizure_count > 0 && config.seizure_duration_s < kMinSeizureSeconds)) {
    throw ValidationError("synthetic seizures must last at least 10 s");
  }
  const double free_s = config.duration_s - config.seizure_count * config.seizure_duration_s -
                        (config.seizure_count + 1) * config.min_gap_s;
  if (config.seizure_count > 0 && free_s < 0) {
    throw ValidationError("cannot fit " + std::to_string(config.seizure_count) + " seizures of " +
                          std::to_string(config.seizure_duration_s) + " s with " +
                          std::to_string(config.min_gap_s) + " s gaps into " +
                          std::to_string(config.duration_s) + " s");
  }

  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(std::llround(config.duration_s * config.sample_rate_hz));
  SampleMatrix samples(config.channel_count, n);
  for (Eigen::Index c = 0; c < samples.rows(); ++c) fill_pink(samples.row(c), rng);

  std::vector<SeizureEvent> events;
  if (config.seizure_count > 0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> weights(static_cast<std::size_t>(config.seizure_count) + 1);
    double total = 0;
    for (auto& w : weights) total += (w = unit(rng) + 1e-3);
    double cursor = 0;
    for (int s = 0; s < config.seizure_count; ++s) {
      cursor += config.min_gap_s + std::floor(free_s * weights[static_cast<std::size_t>(s)] / total);
      events.push_back({cursor, cursor + config.seizure_duration_s});
      cursor += config.seizure_duration_s;
    }
  }

  const double scale = config.seizure_amplitude / spike_wave_rms();
  for (const auto& e : events) {
    const auto first = static_cast<Eigen::Index>(std::llround(e.onset_s * config.sample_rate_hz));
    const auto last = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::llround(e.offset_s * config.sample_rate_hz)));
    for (Eigen::Index i = first; i < last; ++i) {
      const double t = static_cast<double>(i - first) / config.sample_rate_hz;
      const double phase = t * config.spike_wave_hz - std::floor(t * config.spike_wave_hz);
      samples.col(i).array() += static_cast<float>(scale * spike_wave(phase));
    }
  }
  return {Recording(config.patient_id, config.sample_rate_hz, std::move(samples)), std::move(events)};
}

}  // namespace latentwire::ingest
