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
#include <filesystem>
#include <fstream>

#include "latentwire/energy.hpp"
#include "latentwire/error.hpp"

namespace lw = latentwire;
namespace ew = latentwire::edgewire;

TEST(Energy, JetsonReplication) {
  const auto r = ew::estimate_energy(ew::jetson_profile(), 0, 0, 0);
  EXPECT_NEAR(r.total_j, 292.23, 1e-9);
  EXPECT_EQ(r.total_j, r.compute_j + r.tx_j);
  EXPECT_NEAR(r.savings_pct, 26.8, 0.05);
  EXPECT_NEAR(r.savings_pct, (399.48 - 292.23) / 399.48 * 100, 1e-12);
}

TEST(Energy, RaspiReplication) {
  const auto r = ew::estimate_energy(ew::raspi_profile(), 0, 0, 0);
  EXPECT_NEAR(r.total_j, 209.60, 1e-9);
  EXPECT_NEAR(r.savings_pct, 14.1, 0.05);
}

TEST(Energy, ParametricModel) {
  ew::DeviceProfile p;
  p.name = "lab";
  p.compute_power_w = 2.0;
  p.tx_power_w = 4.0;
  p.tx_rate_bytes_per_s = 1000;
  p.validate();
  const auto r = ew::estimate_energy(p, 500, 2000, 0.25);
  EXPECT_DOUBLE_EQ(r.compute_j, 0.5);
  EXPECT_DOUBLE_EQ(r.tx_j, 2.0);
  EXPECT_DOUBLE_EQ(r.raw_tx_j, 8.0);
  EXPECT_DOUBLE_EQ(r.total_j, 2.5);
  EXPECT_DOUBLE_EQ(r.savings_pct, 68.75);
  // Fewer bytes at equal rate and power always cost less to send.
  EXPECT_LT(ew::estimate_energy(p, 499, 2000, 0).tx_j, ew::estimate_energy(p, 500, 2000, 0).tx_j);
}

TEST(Energy, Degenerate) {
  ew::DeviceProfile p;
  p.compute_power_w = 1;
  p.tx_power_w = 1;
  p.tx_rate_bytes_per_s = 1;
  const auto r = ew::estimate_energy(p, 0, 1000, 0);
  EXPECT_EQ(r.total_j, 0.0);
  EXPECT_EQ(r.savings_pct, 100.0);
  EXPECT_EQ(ew::estimate_energy(p, 0, 0, 0).savings_pct, 0.0);
  p.tx_rate_bytes_per_s = 0;
  EXPECT_THROW(p.validate(), lw::ValidationError);
}

TEST(Battery, ReferencePack) {
  const auto raw = ew::battery_life_hours(ew::kReferenceBatteryWh, 3.95);
  const auto compressed = ew::battery_life_hours(ew::kReferenceBatteryWh, 2.64);
  ASSERT_TRUE(raw && compressed);
  EXPECT_NEAR(*raw, 34.0 + 10.0 / 60, 2.0 / 60);
  EXPECT_NEAR(*compressed, 51.0 + 14.0 / 60, 10.0 / 60);
  EXPECT_EQ(ew::format_hours(compressed), "51 h 8 min");
  EXPECT_EQ(ew::format_hours(raw), "34 h 11 min");
}

TEST(Battery, ZeroDutyAndLinearity) {
  EXPECT_FALSE(ew::battery_life_hours(135, 2.64, 0.0));
  EXPECT_EQ(ew::format_hours(std::nullopt), "n/a");
  for (double wh : {1.0, 135.0, 1e4}) {
    EXPECT_EQ(*ew::battery_life_hours(2 * wh, 2.64, 0.3), 2 * *ew::battery_life_hours(wh, 2.64, 0.3));
  }
  EXPECT_THROW(ew::battery_life_hours(0, 1), lw::ValidationError);
  EXPECT_THROW(ew::battery_life_hours(1, 1, 1.5), lw::ValidationError);
  EXPECT_EQ(ew::format_hours(2.0 - 1e-9), "2 h 0 min");
}

TEST(Bench, OrderStatistics) {
  const auto s = ew::summarize({5, 1, 4, 2, 3, 9, 7, 8, 6, 10}, 100);
  EXPECT_EQ(s.repetitions, 10);
  EXPECT_EQ(s.min_s, 1);
  EXPECT_EQ(s.median_s, 5);
  EXPECT_EQ(s.p95_s, 10);
  ASSERT_TRUE(s.bytes_per_s);
  EXPECT_EQ(*s.bytes_per_s, 20);
  EXPECT_FALSE(ew::summarize({1, 2, 3}).bytes_per_s);
}

TEST(Bench, WarmupsExcludedAndMedianBelowP95) {
  int calls = 0;
  const auto s = ew::bench([&] { ++calls; }, 5);
  EXPECT_EQ(calls, 5 + ew::kBenchWarmups);
  EXPECT_EQ(s.repetitions, 5);
  EXPECT_LE(s.min_s, s.median_s);
  EXPECT_LE(s.median_s, s.p95_s);
  EXPECT_THROW(ew::bench([] {}, 2), lw::ValidationError);
}

TEST(Bench, NoOpStable) {
  volatile int sink = 0;
  auto stage = [&] {
    for (int i = 0; i < 20000; ++i) sink = sink + i;
  };
  const double a = ew::bench(stage, 31).median_s;
  const double b = ew::bench(stage, 31).median_s;
  ASSERT_GT(a, 0);
  ASSERT_GT(b, 0);
  EXPECT_LT(std::max(a, b) / std::min(a, b), 10.0);
}

TEST(Profile, ByName) {
  EXPECT_EQ(ew::profile_by_name("jetson").name, "jetson");
  EXPECT_EQ(ew::profile_by_name("raspi").name, "raspi");
  EXPECT_THROW(ew::profile_by_name("pi5"), lw::ValidationError);
  EXPECT_THROW(ew::profile_by_name("custom:"), lw::ValidationError);
}

TEST(Profile, CustomJson) {
  const auto dir = std::filesystem::temp_directory_path() / "latentwire_energy_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "board.json";
  std::ofstream(path) << R"({"name": "board", "compute_power_w": 1.5, "tx_power_w": 3, "tx_rate_bytes_per_s": 1e5,
                             "raw_power_w": 4})";
  const auto p = ew::profile_by_name("custom:" + path.string());
  EXPECT_EQ(p.name, "board");
  EXPECT_EQ(p.tx_rate_bytes_per_s, 1e5);
  EXPECT_FALSE(p.measured);
  ASSERT_TRUE(p.raw_power_w);
  EXPECT_EQ(*p.raw_power_w, 4);
  std::ofstream(path) << R"({"compute_power_w": -1, "tx_power_w": 3, "tx_rate_bytes_per_s": 1})";
  EXPECT_THROW(ew::load_profile(path), lw::ValidationError);
  std::ofstream(path) << "{";
  EXPECT_THROW(ew::load_profile(path), lw::ParseError);
  EXPECT_THROW(ew::load_profile(dir / "missing.json"), lw::IoError);
  std::filesystem::remove_all(dir);
}
