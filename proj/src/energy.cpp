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


#include "latentwire/energy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "latentwire/error.hpp"

namespace latentwire::edgewire {

void DeviceProfile::validate() const {
  if (measured) {
    if (measured->compute_j < 0 || measured->tx_j < 0 || measured->raw_tx_j <= 0) {
      throw ValidationError("profile '" + name + "': measured energies must be non-negative with raw_tx_j > 0");
    }
    return;
  }
  if (!(compute_power_w > 0 && tx_power_w > 0 && tx_rate_bytes_per_s > 0)) {
    throw ValidationError("profile '" + name + "': powers and transfer rate must be positive");
  }
}

// Board figures measured with a power monitor over one full evaluation run.
DeviceProfile jetson_profile() {
  DeviceProfile p;
  p.name = "jetson";
  p.compute_power_w = 2.64;
  p.tx_power_w = 2.64;
  p.tx_rate_bytes_per_s = 1.0e6;
  p.measured = MeasuredEnergy{9.67, 282.56, 399.48};
  p.compressed_power_w = 2.64;
  p.raw_power_w = 3.95;
  return p;
}

DeviceProfile raspi_profile() {
  DeviceProfile p;
  p.name = "raspi";
  p.compute_power_w = 3.66;
  p.tx_power_w = 3.66;
  p.tx_rate_bytes_per_s = 1.0e6;
  p.measured = MeasuredEnergy{68.89, 140.71, 243.92};
  p.compressed_power_w = 3.66;
  p.raw_power_w = 4.00;
  return p;
}

DeviceProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("profile " + path.string() + ": " + e.what());
  }
  DeviceProfile p;
  try {
    p.name = j.value("name", path.stem().string());
    p.compute_power_w = j.value("compute_power_w", 0.0);
    p.tx_power_w = j.value("tx_power_w", 0.0);
    p.tx_rate_bytes_per_s = j.value("tx_rate_bytes_per_s", 0.0);
    if (j.contains("measured")) {
      const auto& m = j.at("measured");
      p.measured = MeasuredEnergy{m.at("compute_j").get<double>(), m.at("tx_j").get<double>(),
                                  m.at("raw_tx_j").get<double>()};
    }
    if (j.contains("compressed_power_w")) p.compressed_power_w = j.at("compressed_power_w").get<double>();
    if (j.contains("raw_power_w")) p.raw_power_w = j.at("raw_power_w").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("profile " + path.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

DeviceProfile profile_by_name(const std::string& spec) {
  if (spec == "jetson") return jetson_profile();
  if (spec == "raspi") return raspi_profile();
  if (spec.rfind("custom:", 0) == 0 && spec.size() > 7) return load_profile(spec.substr(7));
  throw ValidationError("unknown profile '" + spec + "' (expected jetson, raspi or custom:<path>)");
}

EnergyReport estimate_energy(const DeviceProfile& profile, std::uint64_t compressed_bytes, std::uint64_t raw_bytes,
                             double compute_s) {
  EnergyReport r;
  if (profile.measured) {
    r.compute_j = profile.measured->compute_j;
    r.tx_j = profile.measured->tx_j;
    r.raw_tx_j = profile.measured->raw_tx_j;
  } else {
    r.compute_j = profile.compute_power_w * compute_s;
    r.tx_j = profile.tx_power_w * static_cast<double>(compressed_bytes) / profile.tx_rate_bytes_per_s;
    r.raw_tx_j = profile.tx_power_w * static_cast<double>(raw_bytes) / profile.tx_rate_bytes_per_s;
  }
  r.total_j = r.compute_j + r.tx_j;
  r.savings_pct = r.raw_tx_j > 0 ? (r.raw_tx_j - r.total_j) / r.raw_tx_j * 100.0 : 0.0;
  r.compressed_power_w = profile.compressed_power_w;
  r.raw_power_w = profile.raw_power_w;
  return r;
}

std::optional<double> battery_life_hours(double battery_wh, double power_w, double duty) {
  if (!(battery_wh > 0)) throw ValidationError("battery capacity must be positive");
  if (duty < 0 || duty > 1) throw ValidationError("duty cycle must be in [0, 1]");
  const double draw = duty * power_w;
  if (draw <= 0) return std::nullopt;
  return battery_wh / draw;
}

std::string format_hours(std::optional<double> hours) {
  if (!hours) return "n/a";
  auto minutes = static_cast<long long>(std::llround(*hours * 60.0));
  return std::to_string(minutes / 60) + " h " + std::to_string(minutes % 60) + " min";
}

BenchStats summarize(std::vector<double> samples_s, std::optional<std::uint64_t> bytes) {
  if (samples_s.empty()) throw ValidationError("no timing samples");
  std::sort(samples_s.begin(), samples_s.end());
  auto rank = [&](double q) {
    const auto n = samples_s.size();
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    return samples_s[std::clamp<std::size_t>(k, 1, n) - 1];
  };
  BenchStats s;
  s.repetitions = static_cast<int>(samples_s.size());
  s.min_s = samples_s.front();
  s.median_s = rank(0.5);
  s.p95_s = rank(0.95);
  if (bytes && s.median_s > 0) s.bytes_per_s = static_cast<double>(*bytes) / s.median_s;
  return s;
}

BenchStats bench(const std::function<void()>& stage, int repetitions, std::optional<std::uint64_t> bytes) {
  if (repetitions < 3) throw ValidationError("bench needs at least 3 repetitions");
  for (int i = 0; i < kBenchWarmups; ++i) stage();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    stage();
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return summarize(std::move(samples), bytes);
}

}  // namespace latentwire::edgewire
