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

// Intrinsic dispatch optimization.
//
// The mixed-integer program (SoC dynamics with charge/discharge losses, power
// limits, charge/discharge exclusion, SoC bounds, daily throughput budget,
// terminal SoC, residual trades against a bid/ask curve) is solved in the
// space of per-period SoC increments u_i. With the modes exclusive, u_i
// determines charge, discharge and the residual trade uniquely, and the trade
// reward r_i(u_i) is piecewise linear with kinks at u = 0 and at the current
// position. r_i is concave except possibly at u = 0, where a negative price
// turns the kink convex; that is exactly where the exclusion binary matters.
//
// The daily throughput budget is dualized. For a fixed multiplier a forward
// dynamic program over SoC solves the remaining problem exactly: value
// functions are continuous piecewise linear (concave as long as no period has
// a convex kink) and each period is a sup-convolution with r_i. The multiplier
// is found by the secant (cutting-plane) method on the piecewise-linear dual.
// At the optimal multiplier two primal solutions bracket the budget; when they
// agree on the sign of u_i wherever r_i is not concave, mixing them spends the
// budget exactly and is optimal. Otherwise branch-and-bound splits such a
// period into u_i <= 0 and u_i >= 0 and repeats on both halves.

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/detail/pwl.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace bessarb {

struct OptimizeRequest {
  BatteryConfig battery;
  PriceCurve prices;
  Position initial_position;
  /// Charge already delivered today (MWh). Frozen periods' charge is always
  /// counted, so passing 0 with a frozen prefix is safe.
  double realized_charge_mwh = 0.0;
  /// Periods starting before this instant keep their initial position.
  std::optional<Timestamp> frozen_before;
};

struct OptimizeResult {
  DispatchSchedule schedule;
  std::vector<double> residual_buys_mw;
  std::vector<double> residual_sells_mw;
  std::vector<std::uint8_t> tradable;
  double objective_eur = 0.0;
  std::size_t nodes = 0;

  /// Residual volume bought plus sold, in MWh.
  double traded_mwh() const {
    double v = 0;
    for (std::size_t i = 0; i < residual_buys_mw.size(); ++i) v += residual_buys_mw[i] + residual_sells_mw[i];
    return v * schedule.grid.step_hours();
  }
};

struct OptimizerOptions {
  /// Added to the spread on both sides when optimizing; among equally
  /// profitable dispatches the one trading the least volume wins.
  double volume_penalty_eur_mw = 1e-6;
  std::size_t max_nodes = 200000;
};

/// Residual trades that move `from` (net power) to the exclusive dispatch (c, d).
struct ResidualTrade {
  double buy_mw;
  double sell_mw;
};

inline ResidualTrade residual_trade(double c, double d, double c_bar, double d_bar) {
  return {std::max(c - c_bar, 0.0) + std::max(d_bar - d, 0.0),
          std::max(d - d_bar, 0.0) + std::max(c_bar - c, 0.0)};
}

/// Value of moving `from` to `to` at the given prices over periods flagged in
/// `mask` (all periods when the mask is empty).
inline double trade_value(const PriceCurve& prices, const Position& from, const Position& to,
                          const std::vector<std::uint8_t>& mask = {}) {
  const double dt = prices.grid.step_hours();
  double v = 0;
  for (std::size_t i = 0; i < prices.bid.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    auto r = residual_trade(to.charge_mw[i], to.discharge_mw[i], from.charge_mw[i], from.discharge_mw[i]);
    v += prices.bid[i] * r.sell_mw - prices.ask[i] * r.buy_mw;
  }
  return v * dt;
}

namespace detail {

class DispatchModel {
 public:
  DispatchModel(const OptimizeRequest& req, const OptimizerOptions& opt) : req_(req), opt_(opt) {
    const auto& b = req.battery;
    const auto& grid = req.prices.grid;
    req.prices.check_shape();
    req.initial_position.check_shape();
    if (!(req.initial_position.grid == grid))
      throw StructuralError("initial position and price curve are on different grids");
    for (double v : {b.max_power_mw, b.capacity_mwh, b.eta_charge, b.eta_discharge, b.max_daily_cycles,
                     b.soc_initial_mwh, b.soc_terminal_mwh, req.realized_charge_mwh})
      if (!std::isfinite(v)) throw InputError("optimize: non-finite battery or realized-charge value");
    if (b.max_power_mw < 0 || b.capacity_mwh < 0 || b.eta_charge <= 0 || b.eta_charge > 1 ||
        b.eta_discharge <= 0 || b.eta_discharge > 1 || b.max_daily_cycles < 0 || req.realized_charge_mwh < 0)
      throw InputError("optimize: battery parameters out of range");
    if (b.soc_initial_mwh < -kTolerance || b.soc_initial_mwh > b.capacity_mwh + kTolerance)
      throw InfeasibleError("soc_bounds", "initial SoC outside [0, capacity]");

    n_ = grid.periods();
    dt_ = grid.step_hours();
    tradable_.assign(n_, 1);
    pbar_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double bid = req.prices.bid[i], ask = req.prices.ask[i];
      if (!std::isfinite(bid) || !std::isfinite(ask))
        throw InputError("optimize: non-finite price at period " + std::to_string(i));
      if (bid > ask) throw InputError("optimize: bid above ask at period " + std::to_string(i));
      const double c = req.initial_position.charge_mw[i], d = req.initial_position.discharge_mw[i];
      if (!(c >= 0) || !(d >= 0) || !std::isfinite(c) || !std::isfinite(d))
        throw InputError("optimize: position must be finite and non-negative at period " + std::to_string(i));
      if (c > kTolerance && d > kTolerance)
        throw InputError("optimize: position both charges and discharges at period " + std::to_string(i));
      pbar_[i] = c - d;
      if (req.frozen_before && grid.period_start(i) < *req.frozen_before) tradable_[i] = 0;
    }

    double frozen_charge = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (tradable_[i]) continue;
      if (std::abs(pbar_[i]) > b.max_power_mw + kTolerance)
        throw InfeasibleError("power_limit", "frozen position exceeds max power at period " + std::to_string(i));
      frozen_charge += std::max(pbar_[i], 0.0) * dt_;
    }
    const double realized = std::max(req.realized_charge_mwh, frozen_charge);
    budget_ = b.cycle_budget_mwh() - realized;
    if (budget_ < -kTolerance)
      throw InfeasibleError("cycle_limit", "realized charge already exceeds the daily cycle budget");
    budget_ = std::max(budget_, 0.0);

    u_lo_ = -b.max_power_mw * dt_ / b.eta_discharge;
    u_hi_ = b.max_power_mw * dt_ * b.eta_charge;
    max_abs_price_ = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!tradable_[i]) continue;
      max_abs_price_ = std::max({max_abs_price_, std::abs(bid(i)), std::abs(ask(i))});
    }
  }

  std::size_t size() const { return n_; }
  bool tradable(std::size_t i) const { return tradable_[i] != 0; }
  const std::vector<std::uint8_t>& tradable_mask() const { return tradable_; }

  double u_of_power(double p) const {
    const auto& b = req_.battery;
    return p >= 0 ? b.eta_charge * p * dt_ : p * dt_ / b.eta_discharge;
  }
  double power_of_u(double u) const {
    const auto& b = req_.battery;
    return u >= 0 ? u / (b.eta_charge * dt_) : u * b.eta_discharge / dt_;
  }
  double bid(std::size_t i) const { return req_.prices.bid[i] - opt_.volume_penalty_eur_mw; }
  double ask(std::size_t i) const { return req_.prices.ask[i] + opt_.volume_penalty_eur_mw; }

  /// Penalized trade reward of SoC increment u in period i.
  double reward(std::size_t i, double u) const {
    if (!tradable_[i]) return 0.0;
    const double p = power_of_u(u);
    return dt_ * (bid(i) * std::max(pbar_[i] - p, 0.0) - ask(i) * std::max(p - pbar_[i], 0.0));
  }
  double charge_energy(double u) const { return std::max(u, 0.0) / req_.battery.eta_charge; }

  /// Breakpoints of the reward on the domain allowed by `mode`.
  Points reward_points(std::size_t i, int mode) const {
    const double lo = mode > 0 ? 0.0 : u_lo_;
    const double hi = mode < 0 ? 0.0 : u_hi_;
    std::vector<double> xs{lo, hi};
    if (lo < 0 && hi > 0) xs.push_back(0.0);
    const double ub = u_of_power(pbar_[i]);
    if (ub > lo && ub < hi) xs.push_back(ub);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    Points pts;
    for (double x : xs) pts.emplace_back(x, reward(i, x));
    return pts;
  }

  double fixed_u(std::size_t i) const { return u_of_power(pbar_[i]); }
  double budget() const { return budget_; }
  double lambda_cap() const { return 4.0 * (max_abs_price_ + 1.0) / (req_.battery.eta_discharge) + 1.0; }
  const OptimizeRequest& request() const { return req_; }
  double step_hours() const { return dt_; }
  double net_position(std::size_t i) const { return pbar_[i]; }

 private:
  const OptimizeRequest& req_;
  OptimizerOptions opt_;
  std::size_t n_ = 0;
  double dt_ = 0;
  std::vector<std::uint8_t> tradable_;
  std::vector<double> pbar_;
  double budget_ = 0;
  double u_lo_ = 0, u_hi_ = 0;
  double max_abs_price_ = 0;
};

/// Exact solve of one branch-and-bound node (modes fixed where nonzero).
class NodeSolver {
 public:
  NodeSolver(const DispatchModel& m, const std::vector<int8_t>& modes) : m_(m) {
    const std::size_t n = m.size();
    pts_.resize(n);
    split_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!m.tradable(i)) continue;
      pts_[i] = m.reward_points(i, modes[i]);
      // A convex kink at u = 0 makes the sign of u_i matter for mixing.
      for (std::size_t k = 1; k + 1 < pts_[i].size(); ++k) {
        if (pts_[i][k].first != 0.0) continue;
        const auto &a = pts_[i][k - 1], &o = pts_[i][k], &c = pts_[i][k + 1];
        const double left = (o.second - a.second) / (o.first - a.first);
        const double right = (c.second - o.second) / (c.first - o.first);
        split_[i] = right > left + 1e-12 * (1.0 + std::abs(left) + std::abs(right));
      }
    }
  }

  struct Solution {
    std::vector<double> u;
    double value = 0;       // reward of u
    double throughput = 0;  // charged MWh over tradable periods
  };

  struct Outcome {
    Solution feasible;          // best budget-feasible dispatch found
    double bound = 0;           // upper bound for every dispatch in the node
    std::size_t branch_at = 0;  // period to split; size() when solved exactly
  };

  Outcome solve() const {
    const double budget = m_.budget();
    const std::size_t n = m_.size();
    Solution lo = solve_lagrangian(0.0);
    if (lo.throughput <= budget + 1e-9) return {lo, lo.value, n};

    double lambda_hi = m_.lambda_cap();
    Solution hi = solve_lagrangian(lambda_hi);
    for (int k = 0; k < 3 && hi.throughput > budget + 1e-9; ++k) hi = solve_lagrangian(lambda_hi *= 16);
    if (hi.throughput > budget + 1e-9)
      throw InfeasibleError("cycle_limit", "terminal SoC cannot be met within the daily cycle budget");
    double bound = std::min(lo.value, hi.value - lambda_hi * (hi.throughput - budget));
    for (int iter = 0; iter < 200; ++iter) {
      if (hi.throughput >= budget - 1e-12) return {hi, hi.value, n};
      const double lambda = std::max(0.0, (lo.value - hi.value) / (lo.throughput - hi.throughput));
      const double line = lo.value - lambda * (lo.throughput - budget);
      Solution mid = solve_lagrangian(lambda);
      const double lag = mid.value - lambda * (mid.throughput - budget);
      bound = std::min(bound, lag);
      if (lag <= line + 1e-10 * (1.0 + std::abs(line))) {
        // lo and hi are both optimal at lambda.
        const std::size_t split = conflict(lo, hi);
        if (split < n) return {hi, std::min(bound, line), split};
        const double theta = (budget - hi.throughput) / (lo.throughput - hi.throughput);
        Solution mix;
        mix.u.resize(n);
        for (std::size_t i = 0; i < n; ++i) mix.u[i] = theta * lo.u[i] + (1.0 - theta) * hi.u[i];
        finish(mix);
        return {mix, std::max(mix.value, std::min(bound, line)), n};
      }
      if (mid.throughput > budget + 1e-9) {
        lo = std::move(mid);
      } else {
        hi = std::move(mid);
      }
    }
    return {hi, bound, conflict(lo, hi)};
  }

 private:
  /// A period where a and b sit on opposite sides of a convex kink.
  std::size_t conflict(const Solution& a, const Solution& b) const {
    std::size_t best = m_.size();
    double width = 0;
    for (std::size_t i = 0; i < m_.size(); ++i) {
      if (!split_[i] || a.u[i] * b.u[i] >= 0) continue;
      if (std::abs(a.u[i] - b.u[i]) > width) {
        width = std::abs(a.u[i] - b.u[i]);
        best = i;
      }
    }
    return best;
  }

  void finish(Solution& s) const {
    s.value = 0;
    s.throughput = 0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      if (!m_.tradable(i)) continue;
      s.value += m_.reward(i, s.u[i]);
      s.throughput += m_.charge_energy(s.u[i]);
    }
  }

  Pwl period_function(std::size_t i, double lambda) const {
    if (!m_.tradable(i)) return Pwl::point(m_.fixed_u(i), 0.0);
    Pwl f{pts_[i]};
    for (auto& [x, y] : f.v) y -= lambda * m_.charge_energy(x);
    return f;
  }

  Solution solve_lagrangian(double lambda) const {
    const auto& b = m_.request().battery;
    const std::size_t n = m_.size();
    std::vector<Pwl> phi(n);
    std::vector<Pwl> value(n + 1);
    value[0] = Pwl::point(b.soc_initial_mwh, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = period_function(i, lambda);
      auto next = restrict_domain(sup_convolve(value[i], phi[i]), 0.0, b.capacity_mwh);
      if (!next) {
        if (!m_.tradable(i))
          throw InfeasibleError("soc_bounds", "frozen position drives SoC out of bounds at period " + std::to_string(i));
        throw InfeasibleError("soc_bounds", "SoC bounds cannot be met at period " + std::to_string(i));
      }
      value[i + 1] = std::move(*next);
    }
    const double target = b.soc_terminal_mwh;
    const double lo = value[n].lo(), hi = value[n].hi();
    if (target < lo - 1e-9 || target > hi + 1e-9)
      throw InfeasibleError("terminal_soc", "terminal SoC " + std::to_string(target) + " is unreachable");

    Solution s;
    s.u.resize(n);
    double z = std::clamp(target, lo, hi);
    for (std::size_t k = n; k-- > 0;) {
      const double x = best_split(value[k], phi[k], z);
      s.u[k] = m_.tradable(k) ? z - x : m_.fixed_u(k);
      z = x;
    }
    finish(s);
    return s;
  }

  const DispatchModel& m_;
  std::vector<Points> pts_;
  std::vector<std::uint8_t> split_;
};

}  // namespace detail

/// Maximizes the residual-trade value against `request.prices` subject to the
/// battery constraints. Globally optimal; throws InfeasibleError naming the
/// binding constraint, InputError on bad prices, StructuralError on grid
/// mismatch.
inline OptimizeResult optimize(const OptimizeRequest& request, const OptimizerOptions& options = {}) {
  detail::DispatchModel model(request, options);
  const std::size_t n = model.size();

  double incumbent = -std::numeric_limits<double>::infinity();
  std::vector<double> best_u;
  std::size_t nodes = 0;

  // Best-first search over mode restrictions.
  struct Pending {
    std::vector<int8_t> modes;
    double bound;
    std::size_t branch_at;
    bool operator<(const Pending& o) const { return bound < o.bound; }
  };
  std::priority_queue<Pending> queue;

  auto evaluate = [&](std::vector<int8_t> modes, bool root) {
    ++nodes;
    detail::NodeSolver::Outcome res;
    try {
      res = detail::NodeSolver(model, modes).solve();
    } catch (const InfeasibleError&) {
      if (root) throw;
      return;
    }
    if (res.feasible.value > incumbent) {
      incumbent = res.feasible.value;
      best_u = res.feasible.u;
    }
    const double tol = 1e-9 * (1.0 + std::abs(incumbent));
    if (res.branch_at == n || res.bound <= incumbent + tol) return;
    queue.push(Pending{std::move(modes), res.bound, res.branch_at});
  };

  evaluate(std::vector<int8_t>(n, 0), true);
  while (!queue.empty()) {
    Pending p = queue.top();
    queue.pop();
    if (p.bound <= incumbent + 1e-9 * (1.0 + std::abs(incumbent))) break;
    if (nodes >= options.max_nodes) throw Error("optimize: branch-and-bound node limit reached");
    for (int8_t side : {int8_t{-1}, int8_t{1}}) {
      auto modes = p.modes;
      modes[p.branch_at] = side;
      evaluate(std::move(modes), false);
    }
  }

  // Assemble the schedule.
  const auto& b = request.battery;
  const auto& pos = request.initial_position;
  const double dt = model.step_hours();
  OptimizeResult out;
  out.nodes = nodes;
  out.tradable = model.tradable_mask();
  auto& s = out.schedule;
  s.grid = request.prices.grid;
  s.charge_mw.assign(n, 0.0);
  s.discharge_mw.assign(n, 0.0);
  s.mode.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!model.tradable(i)) {
      s.charge_mw[i] = pos.charge_mw[i];
      s.discharge_mw[i] = pos.discharge_mw[i];
    } else {
      double p = model.power_of_u(best_u[i]);
      if (std::abs(p - model.net_position(i)) <= 1e-9) p = model.net_position(i);
      if (std::abs(p) <= 1e-12) p = 0.0;
      p = std::clamp(p, -b.max_power_mw, b.max_power_mw);
      s.charge_mw[i] = p > 0 ? p : 0.0;
      s.discharge_mw[i] = p < 0 ? -p : 0.0;
    }
    s.mode[i] = s.charge_mw[i] > 0 ? 1 : 0;
  }
  s.soc_mwh = soc_trajectory(s.position(), b);

  out.residual_buys_mw.assign(n, 0.0);
  out.residual_sells_mw.assign(n, 0.0);
  double objective = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!model.tradable(i)) continue;
    auto r = residual_trade(s.charge_mw[i], s.discharge_mw[i], pos.charge_mw[i], pos.discharge_mw[i]);
    out.residual_buys_mw[i] = r.buy_mw;
    out.residual_sells_mw[i] = r.sell_mw;
    objective += request.prices.bid[i] * r.sell_mw - request.prices.ask[i] * r.buy_mw;
  }
  out.objective_eur = objective * dt;
  return out;
}

}  // namespace bessarb
