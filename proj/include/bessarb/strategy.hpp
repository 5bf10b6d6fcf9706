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

// Multi-market strategies. A strategy id is a '|'-separated chain of stage
// tokens, e.g. "DA|ID_AUCT|ID_ROLL". Each stage re-optimizes the position
// left by the previous one against its own prices; the day's profit is the
// sum of stage objectives. All stages share one daily cycle budget.
//
// Tokens:
//   DA          day-ahead auction, hourly (DA~NAME optimizes on series NAME
//               and settles at DA)
//   ID_AUCT     intraday auction (IDA1), quarter-hourly
//   ID1 ID3 IDFULL ID_AEP
//               index benchmarks, quarter-hourly, not tradable
//   ID_ROLL     rolling intrinsic on quarter-hour products
//   ID_ROLL_1H  rolling intrinsic on hourly products

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/csv.hpp>
#include <bessarb/market_data.hpp>
#include <bessarb/optimizer.hpp>
#include <bessarb/quotes.hpp>
#include <bessarb/rolling.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace bessarb {

/// Strategy id that does not parse or violates the stage ordering rules.
class UnknownStrategyError : public Error {
 public:
  using Error::Error;
};

enum class StageKind { DaAuction, IdAuction, Index, IdRolling };

struct MarketStage {
  StageKind kind = StageKind::DaAuction;
  std::string token;
  /// Settlement series (auctions and indices).
  std::string series;
  /// Series the optimizer sees; equals `series` unless a forecast is given.
  std::string forecast_series;
  int product_minutes = 15;

  bool tradable() const { return kind != StageKind::Index; }
};

inline MarketStage parse_stage(std::string_view token) {
  MarketStage s;
  s.token = std::string(token);
  std::string_view head = token, forecast;
  if (auto tilde = token.find('~'); tilde != std::string_view::npos) {
    head = token.substr(0, tilde);
    forecast = token.substr(tilde + 1);
    if (head != "DA" || forecast.empty())
      throw UnknownStrategyError("stage '" + s.token + "': only DA takes a forecast series (DA~NAME)");
  }
  if (head == "DA") {
    s.kind = StageKind::DaAuction;
    s.series = "DA";
    s.product_minutes = 60;
  } else if (head == "ID_AUCT") {
    s.kind = StageKind::IdAuction;
    s.series = "IDA1";
  } else if (head == "ID1" || head == "ID3" || head == "IDFULL" || head == "ID_AEP") {
    s.kind = StageKind::Index;
    s.series = std::string(head);
  } else if (head == "ID_ROLL") {
    s.kind = StageKind::IdRolling;
  } else if (head == "ID_ROLL_1H") {
    s.kind = StageKind::IdRolling;
    s.product_minutes = 60;
  } else {
    throw UnknownStrategyError("unknown stage '" + s.token + "'");
  }
  s.forecast_series = forecast.empty() ? s.series : std::string(forecast);
  return s;
}

struct StrategySpec {
  std::vector<MarketStage> stages;
  BatteryConfig battery;
  std::string battery_id = "custom";

  std::string id() const {
    std::string out;
    for (std::size_t k = 0; k < stages.size(); ++k) out += (k ? "|" : "") + stages[k].token;
    return out;
  }
  bool tradable() const {
    return std::all_of(stages.begin(), stages.end(), [](const MarketStage& s) { return s.tradable(); });
  }

  /// Stage rules: DA only first; a rolling stage only last; hourly rolling
  /// only on an hourly (or empty) position.
  void validate() const {
    if (stages.empty()) throw UnknownStrategyError("strategy has no stages");
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const auto& s = stages[k];
      if (s.kind == StageKind::DaAuction && k != 0)
        throw UnknownStrategyError("'" + id() + "': DA can only be the first stage");
      if (s.kind == StageKind::IdRolling && k + 1 != stages.size())
        throw UnknownStrategyError("'" + id() + "': a rolling stage can only be the last stage");
      if (s.kind == StageKind::IdRolling && s.product_minutes == 60 && k > 0 &&
          stages[k - 1].kind != StageKind::DaAuction)
        throw UnknownStrategyError("'" + id() + "': hourly rolling cannot follow a quarter-hour stage");
    }
    battery.validate();
  }

  static StrategySpec parse(std::string_view id, const BatteryConfig& battery, std::string battery_id = "custom") {
    StrategySpec spec;
    spec.battery = battery;
    spec.battery_id = std::move(battery_id);
    for (auto tok : csv::split(id, '|')) {
      if (tok.empty()) throw UnknownStrategyError("empty stage in strategy '" + std::string(id) + "'");
      spec.stages.push_back(parse_stage(tok));
    }
    spec.validate();
    return spec;
  }
};

/// Battery id: a preset name ("1h", "2h", "4h") optionally followed by
/// "-cK" to set K daily cycles, e.g. "2h-c3".
inline BatteryConfig parse_battery_id(std::string_view id) {
  auto dash = id.find("-c");
  auto b = battery_preset(id.substr(0, dash));
  if (dash != std::string_view::npos) {
    int k = 0;
    if (!detail::parse_int(id.substr(dash + 2), k) || k < 1)
      throw InputError("battery id '" + std::string(id) + "': bad cycle suffix");
    b.max_daily_cycles = k;
  }
  return b;
}

struct StrategyOptions {
  QuoteConfig quotes;
  RollingOptions rolling;
};

/// One ledger row: a (date, strategy, battery) outcome.
struct DayRecord {
  Date date{};
  std::string strategy_id;
  std::string battery_id;
  double total_eur = 0.0;
  std::vector<double> stage_eur;
  std::vector<double> stage_traded_mwh;
  double cycles_used = 0.0;
  bool tradable = true;
  std::string status = "ok";  // ok | skipped
  std::string note;
  /// Net discharge (MW) per quarter hour of the final position.
  std::vector<double> net_mw;
};

/// Quote curves for one day, built lazily and shared by all strategies that
/// roll on the same product duration.
class DayQuotes {
 public:
  DayQuotes(const DayData& data, Date day, int utc_offset_minutes, QuoteConfig cfg)
      : data_(data), day_(day), offset_(utc_offset_minutes), cfg_(cfg) {}

  /// nullptr when the day has no tick stream for that duration.
  const std::vector<QuoteCurve>* get(int product_minutes) {
    std::lock_guard lock(mu_);
    auto it = cache_.find(product_minutes);
    if (it != cache_.end()) return &it->second;
    auto t = data_.ticks_by_duration.find(product_minutes);
    if (t == data_.ticks_by_duration.end()) return nullptr;
    auto cfg = cfg_;
    cfg.product_minutes = product_minutes;
    auto grid = DeliveryGrid::make(day_, product_minutes, offset_);
    return &cache_.emplace(product_minutes, build_quotes(t->second, grid, cfg)).first->second;
  }

 private:
  const DayData& data_;
  Date day_;
  int offset_;
  QuoteConfig cfg_;
  std::mutex mu_;
  std::map<int, std::vector<QuoteCurve>> cache_;
};

namespace detail {

struct SkipDay {
  std::string reason;
};

inline const PriceSeries& require_series(const DayData& data, const std::string& name, int step) {
  auto it = data.series.find(name);
  if (it == data.series.end()) throw SkipDay{"missing series " + name};
  if (!it->second.complete()) throw SkipDay{"incomplete series " + name};
  if (it->second.step_minutes != step) throw SkipDay{"series " + name + " has the wrong resolution"};
  return it->second;
}

}  // namespace detail

/// Runs one strategy on one day. Missing or incomplete inputs produce a
/// "skipped" record with the reason instead of an error.
inline DayRecord run_strategy(const StrategySpec& spec, Date day, const DayData& data, DayQuotes& quotes,
                              const StrategyOptions& options = {}, int utc_offset_minutes = 0) {
  spec.validate();
  DayRecord rec;
  rec.date = day;
  rec.strategy_id = spec.id();
  rec.battery_id = spec.battery_id;
  rec.tradable = spec.tradable();

  const auto first_step = spec.stages.front().kind == StageKind::DaAuction ||
                                  (spec.stages.front().kind == StageKind::IdRolling &&
                                   spec.stages.front().product_minutes == 60)
                              ? 60
                              : 15;
  Position pos = Position::zero(DeliveryGrid::make(day, first_step, utc_offset_minutes));
  try {
    for (const auto& stage : spec.stages) {
      const int step = stage.product_minutes;
      if (pos.grid.step_minutes != step) {
        // Only hourly -> quarter-hourly occurs after validation.
        pos = expand_to_quarter_hours(pos);
      }
      double value = 0, traded = 0;
      if (stage.kind == StageKind::IdRolling) {
        const auto* curves = quotes.get(step);
        if (!curves) throw detail::SkipDay{"missing " + std::to_string(step) + "-min ticks"};
        auto r = run_rolling_intrinsic(spec.battery, *curves, pos, options.rolling);
        value = r.total_value_eur;
        traded = r.traded_mwh;
        pos = std::move(r.final_position);
      } else {
        const auto grid = DeliveryGrid::make(day, step, utc_offset_minutes);
        const auto& settle = detail::require_series(data, stage.series, step);
        const auto& seen = detail::require_series(data, stage.forecast_series, step);
        OptimizeRequest req{spec.battery, PriceCurve::single(grid, seen.values), pos, 0.0, std::nullopt};
        auto res = optimize(req, options.rolling.optimizer);
        auto next = res.schedule.position();
        value = stage.forecast_series == stage.series
                    ? res.objective_eur
                    : trade_value(PriceCurve::single(grid, settle.values), pos, next);
        traded = res.traded_mwh();
        pos = std::move(next);
      }
      rec.stage_eur.push_back(value);
      rec.stage_traded_mwh.push_back(traded);
      rec.total_eur += value;
    }
  } catch (const detail::SkipDay& s) {
    rec.status = "skipped";
    rec.note = s.reason;
    rec.total_eur = 0;
    rec.stage_eur.clear();
    rec.stage_traded_mwh.clear();
    return rec;
  }
  const double dt = pos.grid.step_hours();
  double charged = 0;
  for (double c : pos.charge_mw) charged += c * dt;
  rec.cycles_used = spec.battery.capacity_mwh > 0 ? charged / spec.battery.capacity_mwh : 0.0;
  if (pos.grid.step_minutes != 15) pos = expand_to_quarter_hours(pos);
  rec.net_mw.resize(pos.grid.periods());
  for (std::size_t i = 0; i < rec.net_mw.size(); ++i) {
    const double net = pos.discharge_mw[i] - pos.charge_mw[i];
    rec.net_mw[i] = net == 0.0 ? 0.0 : net;
  }
  return rec;
}

/// Convenience overload building quotes on the fly.
inline DayRecord run_strategy(const StrategySpec& spec, Date day, const DayData& data,
                              const StrategyOptions& options = {}, int utc_offset_minutes = 0) {
  DayQuotes q(data, day, utc_offset_minutes, options.quotes);
  return run_strategy(spec, day, data, q, options, utc_offset_minutes);
}

// ---------------------------------------------------------------------------
// Backtests
// ---------------------------------------------------------------------------

/// Supplies one day's data; returns nullptr when the day is unavailable.
using DayProvider = std::function<std::shared_ptr<const DayData>(Date)>;

inline DayProvider store_provider(const DataStore& store) {
  return [&store](Date d) -> std::shared_ptr<const DayData> {
    const DayData* p = store.day(d);
    return p ? std::shared_ptr<const DayData>(p, [](const DayData*) {}) : nullptr;
  };
}

inline DayProvider synthetic_provider(SynthConfig cfg, int utc_offset_minutes = 0) {
  return [cfg, utc_offset_minutes](Date d) {
    return std::make_shared<const DayData>(generate_synthetic_day(cfg, d, utc_offset_minutes));
  };
}

struct BacktestOptions {
  StrategyOptions strategy;
  unsigned jobs = 1;
  int utc_offset_minutes = 0;
  bool keep_dispatch = false;
};

using Ledger = std::vector<DayRecord>;

inline std::vector<Date> date_range(Date first, Date last) {
  std::vector<Date> out;
  for (auto d = std::chrono::sys_days{first}; d <= std::chrono::sys_days{last}; d += std::chrono::days{1})
    out.emplace_back(d);
  return out;
}

/// Runs every strategy on every date. Days run in parallel on `jobs` workers;
/// rows come back ordered by date, then in the order of `strategies`.
inline Ledger backtest(const std::vector<StrategySpec>& strategies, const std::vector<Date>& dates,
                       const DayProvider& provider, const BacktestOptions& options = {}) {
  for (const auto& s : strategies) s.validate();
  std::vector<Ledger> per_day(dates.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < dates.size();) {
      try {
        auto data = provider(dates[k]);
        auto& rows = per_day[k];
        if (!data) {
          for (const auto& s : strategies) {
            DayRecord r;
            r.date = dates[k];
            r.strategy_id = s.id();
            r.battery_id = s.battery_id;
            r.tradable = s.tradable();
            r.status = "skipped";
            r.note = "no data for day";
            rows.push_back(std::move(r));
          }
          continue;
        }
        DayQuotes quotes(*data, dates[k], options.utc_offset_minutes, options.strategy.quotes);
        for (const auto& s : strategies) {
          auto r = run_strategy(s, dates[k], *data, quotes, options.strategy, options.utc_offset_minutes);
          if (!options.keep_dispatch) r.net_mw.clear();
          rows.push_back(std::move(r));
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(dates.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  Ledger out;
  for (auto& rows : per_day)
    for (auto& r : rows) out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Ledger files
// ---------------------------------------------------------------------------

inline constexpr const char* kLedgerHeader =
    "date,strategy_id,battery_id,total_eur,stage_eur,stage_traded_mwh,cycles_used,tradable,status,note";

namespace detail {
inline std::string join_nums(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + csv::num(v[i]);
  return out;
}
inline std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}
}  // namespace detail

inline void write_ledger_csv(std::ostream& os, const Ledger& ledger) {
  os << kLedgerHeader << '\n';
  for (const auto& r : ledger)
    os << format_date(r.date) << ',' << r.strategy_id << ',' << r.battery_id << ',' << csv::num(r.total_eur) << ','
       << detail::join_nums(r.stage_eur) << ',' << detail::join_nums(r.stage_traded_mwh) << ','
       << csv::num(r.cycles_used) << ',' << (r.tradable ? 1 : 0) << ',' << r.status << ','
       << detail::sanitize(r.note) << '\n';
}

inline void write_dispatch_csv(std::ostream& os, const Ledger& ledger) {
  os << "date,strategy_id,battery_id,period,net_mw\n";
  for (const auto& r : ledger)
    for (std::size_t i = 0; i < r.net_mw.size(); ++i)
      os << format_date(r.date) << ',' << r.strategy_id << ',' << r.battery_id << ',' << i << ','
         << csv::num(r.net_mw[i]) << '\n';
}

namespace detail {
inline std::vector<double> parse_nums(const std::string& cell, std::size_t line) {
  std::vector<double> out;
  if (cell.empty()) return out;
  for (auto tok : csv::split(cell, ';')) {
    auto v = csv::parse_double(tok);
    if (!v) throw SchemaError("ledger line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}
}  // namespace detail

/// Reads a ledger written by write_ledger_csv. Dispatch rows are attached
/// when `dispatch_path` is given.
inline Ledger read_ledger_csv(const std::string& path, const std::string& dispatch_path = {}) {
  auto t = csv::read_file(path);
  if (csv::join(t.header) != kLedgerHeader)
    throw SchemaError("'" + path + "': header must be '" + std::string(kLedgerHeader) + "'");
  Ledger out;
  for (const auto& row : t.rows) {
    if (row.cells.size() != 10) throw SchemaError("ledger line " + std::to_string(row.line) + ": expected 10 columns");
    DayRecord r;
    auto d = parse_date(row.cells[0]);
    auto total = csv::parse_double(row.cells[3]);
    auto cycles = csv::parse_double(row.cells[6]);
    if (!d || !total || !cycles) throw SchemaError("ledger line " + std::to_string(row.line) + ": bad field");
    r.date = *d;
    r.strategy_id = row.cells[1];
    r.battery_id = row.cells[2];
    r.total_eur = *total;
    r.stage_eur = detail::parse_nums(row.cells[4], row.line);
    r.stage_traded_mwh = detail::parse_nums(row.cells[5], row.line);
    r.cycles_used = *cycles;
    r.tradable = row.cells[7] == "1";
    r.status = row.cells[8];
    r.note = row.cells[9];
    out.push_back(std::move(r));
  }
  if (!dispatch_path.empty()) {
    auto dt = csv::read_file(dispatch_path);
    if (csv::join(dt.header) != "date,strategy_id,battery_id,period,net_mw")
      throw SchemaError("'" + dispatch_path + "': unexpected dispatch header");
    std::map<std::tuple<std::string, std::string, std::string>, DayRecord*> index;
    for (auto& r : out) index[{format_date(r.date), r.strategy_id, r.battery_id}] = &r;
    for (const auto& row : dt.rows) {
      if (row.cells.size() != 5) throw SchemaError("dispatch line " + std::to_string(row.line) + ": expected 5 columns");
      auto it = index.find({row.cells[0], row.cells[1], row.cells[2]});
      int period = 0;
      auto v = csv::parse_double(row.cells[4]);
      if (it == index.end() || !detail::parse_int(row.cells[3], period) || period < 0 || !v)
        throw SchemaError("dispatch line " + std::to_string(row.line) + ": unmatched or malformed row");
      auto& net = it->second->net_mw;
      if (net.size() <= static_cast<std::size_t>(period)) net.resize(period + 1, 0.0);
      net[period] = *v;
    }
  }
  return out;
}

}  // namespace bessarb
