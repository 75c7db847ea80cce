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
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace latentwire::edgewire {

// Measured totals for one run on a board, in Joules.
struct MeasuredEnergy {
  double compute_j = 0;
  double tx_j = 0;
  double raw_tx_j = 0;
};

// Either a linear model (power x time, transfer time = bytes / rate) or, in
// replication mode, fixed measured totals.
struct DeviceProfile {
  std::string name;
  double compute_power_w = 0;
  double tx_power_w = 0;
  double tx_rate_bytes_per_s = 0;
  std::optional<MeasuredEnergy> measured;
  // Average board power in the compressed and raw pipelines, when known.
  std::optional<double> compressed_power_w;
  std::optional<double> raw_power_w;

  void validate() const;
};

DeviceProfile jetson_profile();
DeviceProfile raspi_profile();
// JSON with "name", "compute_power_w", "tx_power_w", "tx_rate_bytes_per_s",
// optionally "measured": {"compute_j", "tx_j", "raw_tx_j"} and
// "compressed_power_w" / "raw_power_w".
DeviceProfile load_profile(const std::filesystem::path& path);
// "jetson", "raspi" or "custom:<path>".
DeviceProfile profile_by_name(const std::string& spec);

struct EnergyReport {
  double compute_j = 0;
  double tx_j = 0;
  double total_j = 0;
  double raw_tx_j = 0;
  // (raw_tx_j - total_j) / raw_tx_j * 100; 0 when raw_tx_j is 0.
  double savings_pct = 0;
  std::optional<double> compressed_power_w;
  std::optional<double> raw_power_w;
};

EnergyReport estimate_energy(const DeviceProfile& profile, std::uint64_t compressed_bytes, std::uint64_t raw_bytes,
                             double compute_s);

// Reference pack: 27,000 mAh at 5 V.
inline constexpr double kReferenceBatteryWh = 135.0;

// battery_wh / (duty x power_w); nullopt ("n/a") when the draw is zero.
std::optional<double> battery_life_hours(double battery_wh, double power_w, double duty = 1.0);
// "34 h 10 min" style (minutes rounded to nearest), or "n/a".
std::string format_hours(std::optional<double> hours);

struct BenchStats {
  int repetitions = 0;
  double min_s = 0;
  double median_s = 0;
  double p95_s = 0;
  // bytes / median_s for transfer stages.
  std::optional<double> bytes_per_s;
};

inline constexpr int kBenchWarmups = 2;

// Nearest-rank order statistics of the samples.
BenchStats summarize(std::vector<double> samples_s, std::optional<std::uint64_t> bytes = {});
// Times `stage` repetitions times after kBenchWarmups unrecorded runs.
// Requires repetitions >= 3.
BenchStats bench(const std::function<void()>& stage, int repetitions, std::optional<std::uint64_t> bytes = {});

}  // namespace latentwire::edgewire
