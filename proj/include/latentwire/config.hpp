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
#include <filesystem>
#include <string>

#include "latentwire/dsp.hpp"
#include "latentwire/gbdt.hpp"
#include "latentwire/quant.hpp"
#include "latentwire/synth.hpp"
#include "latentwire/vae.hpp"

namespace latentwire {

enum class SplitBy { Window, Event };
const char* to_string(SplitBy s);
SplitBy parse_split_by(const std::string& text);

struct PipelineConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path models_dir = "models";
  std::filesystem::path reports_dir = "reports";

  ingest::SynthConfig synth;
  std::string recording_start = "00:00:00";
  ingest::WindowSpec window;
  dsp::StftConfig stft;
  vae::VaeConfig vae;
  vae::TrainConfig train;
  gbdt::GbdtParams gbdt;
  int folds = 10;
  SplitBy split_by = SplitBy::Event;
  double threshold = 0.5;
  double early_stopping_fraction = 0.1;
  quant::Precision wire_precision = quant::Precision::F16;
  std::string listen;  // empty: environment or default
  std::string profile = "jetson";
  std::uint64_t seed = 0;

  void validate() const;
};

// Unknown keys are rejected so typos surface. Throws ParseError or
// ValidationError.
PipelineConfig config_from_json(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg, int indent = 2);

// FNV-1a of the canonical JSON of every setting that affects artifacts
// (paths, listen address and device profile excluded).
std::uint64_t config_hash(const PipelineConfig& cfg);
std::string hash_hex(std::uint64_t hash);

// Seeds derived per stage so stages can be rerun independently.
inline std::uint64_t stage_seed(const PipelineConfig& cfg, std::uint64_t stage) {
  return cfg.seed * 0x9E3779B97F4A7C15ULL + stage;
}

}  // namespace latentwire
