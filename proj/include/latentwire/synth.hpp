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
#include <string>
#include <vector>

#include "latentwire/ingest.hpp"

namespace latentwire::ingest {

// Settings for the synthetic EEG-like generator. Durations in seconds.
struct SynthConfig {
  std::string patient_id = "SYN1";
  double duration_s = 300;
  int channel_count = 26;
  int sample_rate_hz = 256;
  int seizure_count = 2;
  double seizure_duration_s = 30;
  double min_gap_s = 10;          // non-seizure margin around every seizure
  double spike_wave_hz = 3.0;
  double seizure_amplitude = 3.0; // relative to the background RMS
};

struct SynthDataset {
  Recording recording;
  std::vector<SeizureEvent> events;
};

// Pink-noise background with a spike-wave burst superimposed on all channels
// during each seizure. Seizure onsets are whole seconds. Identical (config,
// seed) gives bit-identical output. Throws ValidationError when the
// seizures plus gaps do not fit in the duration.
SynthDataset synth_dataset(const SynthConfig& config, std::uint64_t seed);

}  // namespace latentwire::ingest
