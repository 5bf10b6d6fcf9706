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

// Rolling intrinsic trading: at every trading time re-optimize the whole
// remaining day against the current bid/ask curve, starting from the
// position built so far, and lock in the value of the residual trades.
// Periods whose delivery has started are frozen; their charge counts against
// the daily cycle budget and their net energy is added to the realized SoC.

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/csv.hpp>
#include <bessarb/optimizer.hpp>
#include <bessarb/quotes.hpp>

#include <ostream>
#include <vector>

namespace bessarb {

struct RollingOptions {
  /// Products stop trading this long before delivery start.
  int lead_minutes = 0;
  /// Skip the solve when the quotes of every tradable product equal those of
  /// the last solved step. Re-optimizing at unchanged prices cannot gain
  /// (trade costs are sublinear), so the step value is exactly zero.
  bool skip_unchanged_quotes = true;
  OptimizerOptions optimizer;
};

struct RollingState {
  Position position;
  double realized_charge_mwh = 0.0;
  double soc_realized_mwh = 0.0;
  double accumulated_value_eur = 0.0;
  std::size_t current_trading_index = 0;
};

struct RollingStep {
  Timestamp trading_time{};
  double objective_eur = 0.0;
  double traded_mwh = 0.0;
  double soc_realized_mwh = 0.0;
  double realized_charge_mwh = 0.0;
  std::size_t tradable_products = 0;
  bool solved = false;
};

struct RollingResult {
  double total_value_eur = 0.0;
  Position final_position;
  std::vector<RollingStep> steps;
  double traded_mwh = 0.0;
  double final_soc_mwh = 0.0;
};

/// A step failed; since keeping the current position is always feasible this
/// signals an internal inconsistency.
class RollingError : public Error {
 public:
  RollingError(std::size_t step, const std::string& what)
      : Error("rolling step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline RollingResult run_rolling_intrinsic(const BatteryConfig& battery, const std::vector<QuoteCurve>& quotes,
                                           const Position& start_position, const RollingOptions& options = {}) {
  start_position.check_shape();
  const auto& grid = start_position.grid;
  const double dt = grid.step_hours();
  const std::size_t n = grid.periods();
  for (std::size_t j = 0; j < quotes.size(); ++j) {
    if (!(quotes[j].prices.grid == grid))
      throw StructuralError("rolling: quote curve " + std::to_string(j) + " is on a different grid");
    if (j > 0 && quotes[j].trading_time < quotes[j - 1].trading_time)
      throw StructuralError("rolling: quote curves not ordered by trading time");
  }

  RollingState state;
  state.position = start_position;
  state.soc_realized_mwh = battery.soc_initial_mwh;
  std::size_t delivered = 0;
  auto deliver_until = [&](std::optional<Timestamp> t) {
    while (delivered < n && (!t || grid.period_start(delivered) < *t)) {
      const double c = state.position.charge_mw[delivered], d = state.position.discharge_mw[delivered];
      state.realized_charge_mwh += c * dt;
      state.soc_realized_mwh += (battery.eta_charge * c - d / battery.eta_discharge) * dt;
      ++delivered;
    }
  };

  RollingResult result;
  result.steps.reserve(quotes.size());
  const PriceCurve* last_solved = nullptr;
  for (std::size_t j = 0; j < quotes.size(); ++j) {
    state.current_trading_index = j;
    const auto& q = quotes[j];
    const Timestamp frozen_before = q.trading_time + minutes{options.lead_minutes};
    deliver_until(frozen_before);

    RollingStep step;
    step.trading_time = q.trading_time;
    step.tradable_products = n - delivered;
    step.soc_realized_mwh = state.soc_realized_mwh;
    step.realized_charge_mwh = state.realized_charge_mwh;

    bool unchanged = false;
    if (options.skip_unchanged_quotes && last_solved) {
      unchanged = true;
      for (std::size_t i = delivered; i < n && unchanged; ++i)
        unchanged = last_solved->bid[i] == q.prices.bid[i] && last_solved->ask[i] == q.prices.ask[i];
    }
    if (step.tradable_products > 0 && !unchanged) {
      OptimizeRequest req{battery, q.prices, state.position, state.realized_charge_mwh, frozen_before};
      OptimizeResult res;
      try {
        res = optimize(req, options.optimizer);
      } catch (const InfeasibleError& e) {
        throw RollingError(j, std::string(e.what()) + " [" + e.constraint() + "]");
      }
      step.solved = true;
      step.objective_eur = res.objective_eur;
      step.traded_mwh = res.traded_mwh();
      state.position = res.schedule.position();
      state.accumulated_value_eur += res.objective_eur;
      result.traded_mwh += step.traded_mwh;
      last_solved = &q.prices;
    }
    result.steps.push_back(step);
  }
  deliver_until(std::nullopt);

  if (std::abs(state.soc_realized_mwh - battery.soc_terminal_mwh) > kTolerance)
    throw RollingError(quotes.size(), "end-of-day SoC " + std::to_string(state.soc_realized_mwh) +
                                          " differs from the terminal target");
  result.total_value_eur = state.accumulated_value_eur;
  result.final_position = std::move(state.position);
  result.final_soc_mwh = state.soc_realized_mwh;
  return result;
}

inline void write_step_log_csv(std::ostream& os, const RollingResult& r) {
  os << "trading_time,objective_eur,traded_mwh,soc_realized_mwh,realized_charge_mwh,tradable_products,solved\n";
  for (const auto& s : r.steps) {
    os << format_timestamp(s.trading_time) << ',' << csv::num(s.objective_eur) << ',' << csv::num(s.traded_mwh)
       << ',' << csv::num(s.soc_realized_mwh) << ',' << csv::num(s.realized_charge_mwh) << ','
       << s.tradable_products << ',' << (s.solved ? 1 : 0) << '\n';
  }
}

}  // namespace bessarb
