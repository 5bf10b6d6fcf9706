// Copyright 2026 The bessarb Authors
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

#include <bessarb/core.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace bessarb::testing {

inline Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline Timestamp ts(const char* s) { return *parse_timestamp(s); }

/// Battery with unit power and capacity and lossless conversion.
inline BatteryConfig unit_battery(double cycles = 1.0) {
  BatteryConfig b;
  b.max_power_mw = 1;
  b.capacity_mwh = 1;
  b.eta_charge = 1;
  b.eta_discharge = 1;
  b.max_daily_cycles = cycles;
  b.soc_initial_mwh = 0;
  b.soc_terminal_mwh = 0;
  return b;
}

inline DeliveryGrid hours(int n, Date day = ymd(2025, 1, 6)) { return DeliveryGrid::partial(day, 60, n); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bessarb_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream(p) << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace bessarb::testing
