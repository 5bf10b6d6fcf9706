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

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bessarb {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad numeric input (NaN prices, out-of-range parameters, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inputs whose shapes do not fit together (grid mismatch, unsorted stream).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// No dispatch satisfies the battery constraints. `constraint()` names the
/// binding one.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string constraint, const std::string& what)
      : Error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

constexpr double kTolerance = 1e-6;

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Date = std::chrono::year_month_day;
using std::chrono::minutes;

inline Timestamp day_start_utc(Date day) {
  return Timestamp{std::chrono::sys_days{day}.time_since_epoch()};
}

inline Date date_of(Timestamp t) {
  return Date{std::chrono::floor<std::chrono::days>(t)};
}

inline std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  Date ymd{day};
  auto ms = (t - day).count();
  const long long h = ms / 3'600'000, m = ms / 60'000 % 60, s = ms / 1000 % 60, frac = ms % 1000;
  char buf[40];
  if (frac == 0) {
    std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(ymd).c_str(), h, m, s);
  } else {
    std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lld.%03lldZ", format_date(ymd).c_str(), h, m,
                  s, frac);
  }
  return buf;
}

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::optional<Date> parse_date(std::string_view s) {
  s = detail::trim(s);
  int y, m, d;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), m) ||
      !detail::parse_int(s.substr(8, 2), d))
    return std::nullopt;
  Date out{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
           std::chrono::day{static_cast<unsigned>(d)}};
  if (!out.ok()) return std::nullopt;
  return out;
}

/// Parses `YYYY-MM-DDTHH:MM[:SS[.fff]]` followed by `Z` or `±HH:MM`.
/// Timestamps without a zone designator are rejected.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  s = detail::trim(s);
  if (s.size() < 17) return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
  std::size_t pos = 11;
  int hh, mm, ss = 0, ms = 0;
  if (!detail::parse_int(s.substr(pos, 2), hh) || s[pos + 2] != ':' ||
      !detail::parse_int(s.substr(pos + 3, 2), mm))
    return std::nullopt;
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::parse_int(s.substr(pos + 1, 2), ss)) return std::nullopt;
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      std::size_t end = pos + 1;
      while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
      auto digits = s.substr(pos + 1, end - pos - 1);
      if (digits.empty()) return std::nullopt;
      std::string padded(digits.substr(0, 3));
      padded.resize(3, '0');
      if (!detail::parse_int(padded, ms)) return std::nullopt;
      pos = end;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  if (pos >= s.size()) return std::nullopt;
  int offset_min = 0;
  if (s[pos] == 'Z' && pos + 1 == s.size()) {
    offset_min = 0;
  } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos == 6 && s[pos + 3] == ':') {
    int oh, om;
    if (!detail::parse_int(s.substr(pos + 1, 2), oh) || !detail::parse_int(s.substr(pos + 4, 2), om))
      return std::nullopt;
    offset_min = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
  } else {
    return std::nullopt;
  }
  using namespace std::chrono;
  return day_start_utc(*date) + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{ms} -
         minutes{offset_min};
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct BatteryConfig {
  double max_power_mw = 1.0;
  double capacity_mwh = 2.0;
  double eta_charge = 0.97;
  double eta_discharge = 0.98;
  double max_daily_cycles = 1.0;
  double soc_initial_mwh = 0.5;
  double soc_terminal_mwh = 0.5;

  /// Charge throughput allowed per day in MWh.
  double cycle_budget_mwh() const { return max_daily_cycles * capacity_mwh; }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(max_power_mw) && max_power_mw > 0)) throw InputError("battery: max_power_mw must be > 0");
    if (!(finite(capacity_mwh) && capacity_mwh > 0)) throw InputError("battery: capacity_mwh must be > 0");
    if (!(eta_charge > 0 && eta_charge <= 1)) throw InputError("battery: eta_charge must be in (0, 1]");
    if (!(eta_discharge > 0 && eta_discharge <= 1))
      throw InputError("battery: eta_discharge must be in (0, 1]");
    if (!(finite(max_daily_cycles) && max_daily_cycles >= 0))
      throw InputError("battery: max_daily_cycles must be >= 0");
    if (!(soc_initial_mwh >= 0 && soc_initial_mwh <= capacity_mwh))
      throw InputError("battery: soc_initial_mwh outside [0, capacity]");
    if (!(soc_terminal_mwh >= 0 && soc_terminal_mwh <= capacity_mwh))
      throw InputError("battery: soc_terminal_mwh outside [0, capacity]");
  }
};

/// The three reference batteries: 2 MWh storage, differing only in power.
inline BatteryConfig battery_preset(std::string_view name) {
  BatteryConfig b;
  b.capacity_mwh = 2.0;
  b.eta_charge = 0.97;
  b.eta_discharge = 0.98;
  b.max_daily_cycles = 1.0;
  b.soc_initial_mwh = 0.5;
  b.soc_terminal_mwh = 0.5;
  if (name == "1h") {
    b.max_power_mw = 2.0;
  } else if (name == "2h") {
    b.max_power_mw = 1.0;
  } else if (name == "4h") {
    b.max_power_mw = 0.5;
  } else {
    throw InputError("unknown battery preset '" + std::string(name) + "'");
  }
  return b;
}

/// Equidistant delivery periods starting at the beginning of a day.
/// Quarter-hour or hourly. A full grid covers 24 h; shorter grids (a prefix of
/// the day) are allowed for small studies.
struct DeliveryGrid {
  Date day{};
  int step_minutes = 15;
  /// Offset of the market's local day from UTC; 0 means days are UTC days.
  int utc_offset_minutes = 0;
  int period_count = 96;

  static DeliveryGrid make(Date day, int step_minutes, int utc_offset_minutes = 0) {
    if (step_minutes != 15 && step_minutes != 60)
      throw InputError("delivery grid step must be 15 or 60 minutes");
    return partial(day, step_minutes, 1440 / step_minutes, utc_offset_minutes);
  }

  static DeliveryGrid partial(Date day, int step_minutes, int periods, int utc_offset_minutes = 0) {
    if (step_minutes != 15 && step_minutes != 60)
      throw InputError("delivery grid step must be 15 or 60 minutes");
    if (!day.ok()) throw InputError("delivery grid: invalid date");
    if (periods < 0 || periods * step_minutes > 1440) throw InputError("delivery grid: too many periods");
    return DeliveryGrid{day, step_minutes, utc_offset_minutes, periods};
  }

  bool full_day() const { return period_count * step_minutes == 1440; }
  double step_hours() const { return step_minutes / 60.0; }
  std::size_t periods() const { return static_cast<std::size_t>(period_count); }
  Timestamp start() const { return day_start_utc(day) - minutes{utc_offset_minutes}; }
  Timestamp end() const { return start() + minutes{period_count * step_minutes}; }
  Timestamp period_start(std::size_t i) const {
    return start() + minutes{static_cast<long long>(i) * step_minutes};
  }
  /// Index of the period starting exactly at `t`, if any.
  std::optional<std::size_t> index_of(Timestamp t) const {
    auto off = t - start();
    const auto step = std::chrono::milliseconds{minutes{step_minutes}};
    if (off.count() < 0 || off % step != std::chrono::milliseconds{0}) return std::nullopt;
    auto idx = static_cast<std::size_t>(off / step);
    if (idx >= periods()) return std::nullopt;
    return idx;
  }

  friend bool operator==(const DeliveryGrid&, const DeliveryGrid&) = default;
};

struct Product {
  Timestamp delivery_start{};
  int duration_minutes = 15;

  double duration_hours() const { return duration_minutes / 60.0; }
  friend bool operator==(const Product&, const Product&) = default;
};

struct TradeTick {
  Product product;
  Timestamp execution_time{};
  double price_eur_mwh = 0.0;
  double volume_mw = 0.0;

  friend bool operator==(const TradeTick&, const TradeTick&) = default;
};

/// Bid (sell) and ask (buy) price per delivery period.
struct PriceCurve {
  DeliveryGrid grid;
  std::vector<double> bid;
  std::vector<double> ask;

  /// Auction or index prices: one price per period, bid = ask.
  static PriceCurve single(DeliveryGrid grid, std::vector<double> prices) {
    PriceCurve c{grid, prices, std::move(prices)};
    c.check_shape();
    return c;
  }

  void check_shape() const {
    if (bid.size() != grid.periods() || ask.size() != grid.periods())
      throw StructuralError("price curve length does not match its grid");
  }
};

/// Contracted charge/discharge power per period.
struct Position {
  DeliveryGrid grid;
  std::vector<double> charge_mw;
  std::vector<double> discharge_mw;

  static Position zero(const DeliveryGrid& grid) {
    return Position{grid, std::vector<double>(grid.periods(), 0.0),
                    std::vector<double>(grid.periods(), 0.0)};
  }
  /// Net power drawn from the grid (positive = charging).
  double net_charge(std::size_t i) const { return charge_mw[i] - discharge_mw[i]; }

  void check_shape() const {
    if (charge_mw.size() != grid.periods() || discharge_mw.size() != grid.periods())
      throw StructuralError("position length does not match its grid");
  }
};

struct DispatchSchedule {
  DeliveryGrid grid;
  std::vector<double> charge_mw;
  std::vector<double> discharge_mw;
  std::vector<std::uint8_t> mode;  // 1 = charging allowed, 0 = discharging allowed
  std::vector<double> soc_mwh;     // periods + 1 nodes

  Position position() const { return Position{grid, charge_mw, discharge_mw}; }

  /// Charged energy over the day in MWh.
  double charged_mwh() const {
    double s = 0;
    for (double c : charge_mw) s += c;
    return s * grid.step_hours();
  }
};

/// SoC trajectory implied by a position under the charge/discharge losses.
inline std::vector<double> soc_trajectory(const Position& pos, const BatteryConfig& b) {
  const double dt = pos.grid.step_hours();
  std::vector<double> soc(pos.charge_mw.size() + 1);
  soc[0] = b.soc_initial_mwh;
  for (std::size_t i = 0; i < pos.charge_mw.size(); ++i)
    soc[i + 1] = soc[i] + b.eta_charge * pos.charge_mw[i] * dt - pos.discharge_mw[i] * dt / b.eta_discharge;
  return soc;
}

inline DispatchSchedule schedule_from_position(const Position& pos, const BatteryConfig& b) {
  pos.check_shape();
  DispatchSchedule s{pos.grid, pos.charge_mw, pos.discharge_mw, {}, soc_trajectory(pos, b)};
  s.mode.resize(pos.charge_mw.size());
  for (std::size_t i = 0; i < s.mode.size(); ++i) s.mode[i] = pos.charge_mw[i] > 0 ? 1 : 0;
  return s;
}

/// Hourly position to quarter-hour position; power is constant within the hour.
inline Position expand_to_quarter_hours(const Position& hourly) {
  if (hourly.grid.step_minutes == 15) return hourly;
  hourly.check_shape();
  Position q = Position::zero(
      DeliveryGrid::partial(hourly.grid.day, 15, hourly.grid.period_count * 4, hourly.grid.utc_offset_minutes));
  for (std::size_t i = 0; i < q.charge_mw.size(); ++i) {
    q.charge_mw[i] = hourly.charge_mw[i / 4];
    q.discharge_mw[i] = hourly.discharge_mw[i / 4];
  }
  return q;
}

/// Quarter-hour position to hourly. Fails unless every hour is constant.
inline Position collapse_to_hours(const Position& quarter) {
  if (quarter.grid.step_minutes == 60) return quarter;
  quarter.check_shape();
  if (quarter.grid.period_count % 4 != 0) throw StructuralError("quarter-hour grid does not cover whole hours");
  Position h = Position::zero(
      DeliveryGrid::partial(quarter.grid.day, 60, quarter.grid.period_count / 4, quarter.grid.utc_offset_minutes));
  for (std::size_t i = 0; i < h.charge_mw.size(); ++i) {
    for (std::size_t k = 1; k < 4; ++k) {
      if (std::abs(quarter.charge_mw[4 * i + k] - quarter.charge_mw[4 * i]) > kTolerance ||
          std::abs(quarter.discharge_mw[4 * i + k] - quarter.discharge_mw[4 * i]) > kTolerance)
        throw StructuralError("quarter-hour position is not constant within hour " + std::to_string(i));
    }
    h.charge_mw[i] = quarter.charge_mw[4 * i];
    h.discharge_mw[i] = quarter.discharge_mw[4 * i];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Schedule validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string constraint;  // soc_dynamics, power_limit, mutual_exclusion, soc_bounds, cycle_limit, terminal_soc
  std::optional<std::size_t> index;  // period (or SoC node for soc_bounds / soc_dynamics)
  double residual = 0.0;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every battery constraint on a schedule. An empty result means the
/// schedule is feasible. Throws StructuralError when vector lengths disagree.
inline std::vector<Violation> validate_schedule(const DispatchSchedule& s, const BatteryConfig& b) {
  const std::size_t n = s.grid.periods();
  if (s.charge_mw.size() != n || s.discharge_mw.size() != n || s.mode.size() != n ||
      s.soc_mwh.size() != n + 1)
    throw StructuralError("schedule vectors do not match the grid (" + std::to_string(n) + " periods)");

  const double dt = s.grid.step_hours();
  std::vector<Violation> out;
  auto flag = [&](const char* what, std::optional<std::size_t> i, double r) {
    if (r > kTolerance) out.push_back({what, i, r});
  };

  flag("soc_dynamics", 0, std::abs(s.soc_mwh[0] - b.soc_initial_mwh));
  for (std::size_t i = 0; i < n; ++i) {
    const double c = s.charge_mw[i], d = s.discharge_mw[i];
    const double expected = s.soc_mwh[i] + b.eta_charge * c * dt - d * dt / b.eta_discharge;
    flag("soc_dynamics", i + 1, std::abs(s.soc_mwh[i + 1] - expected));
    flag("power_limit", i, std::max({-c, -d, c - b.max_power_mw, d - b.max_power_mw}));
    const double bi = s.mode[i] ? 1.0 : 0.0;
    flag("mutual_exclusion", i, std::max(std::abs(c * (1.0 - bi)), std::abs(d * bi)));
  }
  for (std::size_t k = 0; k <= n; ++k)
    flag("soc_bounds", k, std::max(-s.soc_mwh[k], s.soc_mwh[k] - b.capacity_mwh));
  double charged = 0;
  for (double c : s.charge_mw) charged += c * dt;
  flag("cycle_limit", std::nullopt, charged - b.cycle_budget_mwh());
  flag("terminal_soc", n, std::abs(s.soc_mwh[n] - b.soc_terminal_mwh));
  return out;
}

}  // namespace bessarb
