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

// Generates one synthetic market day and compares a few strategies for the
// three reference batteries.

#include <bessarb/bessarb.hpp>

#include <iomanip>
#include <iostream>

int main() {
  using namespace bessarb;
  const Date day{std::chrono::year{2025}, std::chrono::month{6}, std::chrono::day{2}};
  const auto data = generate_synthetic_day(SynthConfig{}, day);
  DayQuotes quotes(data, day, 0, QuoteConfig{});

  std::cout << "day " << format_date(day) << ", " << data.ticks(15).size() << " quarter-hour trades\n\n";
  std::cout << std::left << std::setw(22) << "strategy";
  for (const char* b : {"1h", "2h", "4h"}) std::cout << std::right << std::setw(10) << b;
  std::cout << '\n';
  for (const char* id : {"DA", "ID_AUCT", "DA|ID_AUCT", "ID_ROLL", "DA|ID_AUCT|ID_ROLL", "IDFULL"}) {
    std::cout << std::left << std::setw(22) << id;
    for (const char* b : {"1h", "2h", "4h"}) {
      auto spec = StrategySpec::parse(id, battery_preset(b), b);
      auto rec = run_strategy(spec, day, data, quotes);
      std::cout << std::right << std::setw(10) << csv::num(rec.total_eur, 2);
    }
    std::cout << '\n';
  }
  std::cout << "\n(EUR per day; IDFULL is an index benchmark and not tradable)\n";
}
