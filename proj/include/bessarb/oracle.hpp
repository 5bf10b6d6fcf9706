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

// Exhaustive reference solver for small instances: dynamic programming over
// a uniform SoC lattice times the number of upward lattice steps taken (which
// pins the charged energy exactly). Exact whenever the optimal SoC trajectory
// lies on the lattice. Used to check `optimize`.

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/optimizer.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace bessarb {

/// Refuses instances too large to enumerate.
class RefusalError : public Error {
 public:
  using Error::Error;
};

inline OptimizeResult brute_force_oracle(const OptimizeRequest& req, std::size_t soc_levels) {
  const auto& b = req.battery;
  const auto& grid = req.prices.grid;
  const std::size_t n = grid.periods();
  if (n > 12) throw RefusalError("oracle: more than 12 periods");
  if (soc_levels > 51) throw RefusalError("oracle: more than 51 SoC levels");
  if (soc_levels < 1) throw RefusalError("oracle: need at least one SoC level");
  req.prices.check_shape();
  req.initial_position.check_shape();

  const double dt = grid.step_hours();
  const double step = (soc_levels > 1 && b.capacity_mwh > 0) ? b.capacity_mwh / double(soc_levels - 1) : 0.0;
  const std::size_t levels = step > 0 ? soc_levels : 1;
  auto level_of = [&](double soc) -> long {
    if (step == 0) return std::abs(soc) <= 1e-9 ? 0 : -1;
    const double k = soc / step;
    const long r = std::lround(k);
    return (std::abs(k - r) <= 1e-9 && r >= 0 && r < long(levels)) ? r : -1;
  };
  const long start = level_of(b.soc_initial_mwh);
  const long target = level_of(b.soc_terminal_mwh);
  if (start < 0 || target < 0) throw RefusalError("oracle: initial or terminal SoC is off the lattice");

  std::vector<bool> frozen(n, false);
  double frozen_charge = 0;
  for (std::size_t i = 0; i < n; ++i) {
    frozen[i] = req.frozen_before && grid.period_start(i) < *req.frozen_before;
    if (frozen[i]) frozen_charge += req.initial_position.charge_mw[i] * dt;
  }
  const double budget = b.max_daily_cycles * b.capacity_mwh - std::max(req.realized_charge_mwh, frozen_charge);
  if (budget < -1e-9) throw InfeasibleError("cycle_limit", "oracle: realized charge exceeds budget");
  // Charged energy of tradable periods = up-steps * step / eta_charge.
  const long max_up = step > 0 ? long(std::floor(budget * b.eta_charge / step + 1e-9)) : 0;
  const std::size_t width = std::size_t(max_up + 1);

  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto idx = [&](std::size_t level, long up) { return level * width + std::size_t(up); };
  std::vector<std::vector<double>> value(n + 1, std::vector<double>(levels * width, neg_inf));
  std::vector<std::vector<long>> from(n + 1, std::vector<long>(levels * width, -1));
  value[0][idx(std::size_t(start), 0)] = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const double c_bar = req.initial_position.charge_mw[i];
    const double d_bar = req.initial_position.discharge_mw[i];
    for (std::size_t s = 0; s < levels; ++s) {
      for (long up = 0; up <= max_up; ++up) {
        const double v = value[i][idx(s, up)];
        if (v == neg_inf) continue;
        for (std::size_t s2 = 0; s2 < levels; ++s2) {
          const long delta = long(s2) - long(s);
          const double du = double(delta) * step;
          double c = 0, d = 0;
          if (du > 0) c = du / (b.eta_charge * dt);
          if (du < 0) d = -du * b.eta_discharge / dt;
          double gain = 0;
          long up2 = up;
          if (frozen[i]) {
            const double expect = (b.eta_charge * c_bar - d_bar / b.eta_discharge) * dt;
            if (std::abs(du - expect) > 1e-9) continue;
          } else {
            if (c > b.max_power_mw + 1e-9 || d > b.max_power_mw + 1e-9) continue;
            if (delta > 0) up2 += delta;
            if (up2 > max_up) continue;
            const double buy = std::max(c - c_bar, 0.0) + std::max(d_bar - d, 0.0);
            const double sell = std::max(d - d_bar, 0.0) + std::max(c_bar - c, 0.0);
            gain = dt * (req.prices.bid[i] * sell - req.prices.ask[i] * buy);
          }
          const std::size_t k = idx(s2, up2);
          if (v + gain > value[i + 1][k]) {
            value[i + 1][k] = v + gain;
            from[i + 1][k] = long(idx(s, up));
          }
        }
      }
    }
  }

  long best_up = -1;
  for (long up = 0; up <= max_up; ++up) {
    const double v = value[n][idx(std::size_t(target), up)];
    if (v > neg_inf && (best_up < 0 || v > value[n][idx(std::size_t(target), best_up)])) best_up = up;
  }
  if (best_up < 0) throw InfeasibleError("terminal_soc", "oracle: no lattice path reaches the terminal SoC");

  std::vector<std::size_t> path(n + 1);
  std::size_t k = idx(std::size_t(target), best_up);
  for (std::size_t i = n + 1; i-- > 0;) {
    path[i] = k / width;
    if (i > 0) k = std::size_t(from[i][k]);
  }

  OptimizeResult out;
  auto& s = out.schedule;
  s.grid = grid;
  s.charge_mw.assign(n, 0.0);
  s.discharge_mw.assign(n, 0.0);
  s.mode.assign(n, 0);
  out.residual_buys_mw.assign(n, 0.0);
  out.residual_sells_mw.assign(n, 0.0);
  out.tradable.assign(n, 1);
  double objective = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c_bar = req.initial_position.charge_mw[i];
    const double d_bar = req.initial_position.discharge_mw[i];
    if (frozen[i]) {
      out.tradable[i] = 0;
      s.charge_mw[i] = c_bar;
      s.discharge_mw[i] = d_bar;
    } else {
      const double du = (double(path[i + 1]) - double(path[i])) * step;
      if (du > 0) s.charge_mw[i] = du / (b.eta_charge * dt);
      if (du < 0) s.discharge_mw[i] = -du * b.eta_discharge / dt;
      const double c = s.charge_mw[i], d = s.discharge_mw[i];
      out.residual_buys_mw[i] = std::max(c - c_bar, 0.0) + std::max(d_bar - d, 0.0);
      out.residual_sells_mw[i] = std::max(d - d_bar, 0.0) + std::max(c_bar - c, 0.0);
      objective += dt * (req.prices.bid[i] * out.residual_sells_mw[i] - req.prices.ask[i] * out.residual_buys_mw[i]);
    }
    s.mode[i] = s.charge_mw[i] > 0 ? 1 : 0;
  }
  s.soc_mwh.assign(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) s.soc_mwh[i] = double(path[i]) * step;
  out.objective_eur = objective;
  return out;
}

}  // namespace bessarb
