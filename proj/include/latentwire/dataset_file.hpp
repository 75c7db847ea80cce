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

// Pipeline artifacts between CLI stages.
//
// Spectrogram dataset ("LWSD", version 0x01, little-endian): magic, u8
// version, u64 config hash, str16 patient_id, u32 channels, u32 freq bins,
// u32 time frames, u32 item count, then per item f64 window start, u8 label,
// i32 event group and the f32 values; CRC-32 of all preceding bytes.
//
// Latent file: concatenated LatentFrames (the wire format) with a JSON
// sidecar "<file>.meta.json" holding labels, groups and the config hash.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentwire/dsp.hpp"
#include "latentwire/frame.hpp"
#include "latentwire/gbdt.hpp"

namespace latentwire {

struct SpectrogramDataset {
  std::uint64_t config_hash = 0;
  std::string patient_id;
  std::vector<dsp::Spectrogram> items;  // labels set
  std::vector<double> window_starts;
  std::vector<int> groups;

  std::vector<int> labels() const;
};

// Segments, labels and transforms a recording into model-sized
// spectrograms, with each window's nearest event as its group.
SpectrogramDataset build_dataset(const ingest::Recording& recording, const std::vector<ingest::SeizureEvent>& events,
                                 const ingest::WindowSpec& window, const dsp::StftConfig& stft, int f_model,
                                 int t_model);

void save_dataset(const SpectrogramDataset& ds, const std::filesystem::path& path);
SpectrogramDataset load_dataset(const std::filesystem::path& path);

struct LatentMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t model_hash = 0;  // config hash stored in the encoder file
  std::string patient_id;
  int latent_dim = 0;
  std::string precision;
  std::vector<int> labels;
  std::vector<int> groups;
};

std::filesystem::path meta_path(const std::filesystem::path& latent_file);
void save_latent_meta(const LatentMeta& meta, const std::filesystem::path& latent_file);
LatentMeta load_latent_meta(const std::filesystem::path& latent_file);

// Frames as a feature matrix (one row per frame, in file order).
gbdt::FeatureMatrix frames_to_features(const std::vector<edgewire::LatentFrame>& frames);
// Flattened spectrogram values, one row per item.
gbdt::FeatureMatrix flatten(const std::vector<dsp::Spectrogram>& items);

// Header "f0,...,f{n-1},label", one row per sample.
void write_feature_csv(const gbdt::FeatureMatrix& x, const std::vector<int>& labels,
                       const std::filesystem::path& path);

}  // namespace latentwire
