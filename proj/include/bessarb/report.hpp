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
#include <bessarb/csv.hpp>
#include <bessarb/strategy.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bessarb {

struct ReportSpec {
  int moving_average_days = 20;

  void validate() const {
    if (moving_average_days < 1) throw InputError("report: moving-average window must be >= 1");
  }
};

struct Stats {
  std::size_t n = 0;
  double mean = 0, median = 0, std = 0, min = 0, max = 0;
  /// False for a single observation; std is then reported as 0.
  bool std_defined = false;
};

/// Sample statistics; std uses the n-1 denominator.
inline Stats compute_stats(std::vector<double> v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  const auto h = v.size() / 2;
  s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / double(v.size() - 1));
    s.std_defined = true;
  }
  return s;
}

struct SummaryRow {
  std::string strategy_id;
  std::string battery_id;
  Stats stats;
};

using GroupKey = std::pair<std::string, std::string>;  // strategy, battery

/// Profits of completed rows grouped by (strategy, battery), date-sorted.
inline std::map<GroupKey, std::vector<std::pair<Date, double>>> group_profits(const Ledger& ledger) {
  std::map<GroupKey, std::vector<std::pair<Date, double>>> g;
  for (const auto& r : ledger)
    if (r.status == "ok") g[{r.strategy_id, r.battery_id}].emplace_back(r.date, r.total_eur);
  for (auto& [k, v] : g) std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
  return g;
}

/// Per-strategy statistics. An empty result is the empty-report marker.
inline std::vector<SummaryRow> summarize(const Ledger& ledger) {
  std::vector<SummaryRow> out;
  for (auto& [key, rows] : group_profits(ledger)) {
    std::vector<double> v;
    for (auto& [d, p] : rows) v.push_back(p);
    out.push_back({key.first, key.second, compute_stats(std::move(v))});
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  if (rows.empty()) {
    os << "# empty ledger\n";
    return;
  }
  os << "strategy,battery,n,mean,median,std,min,max,std_defined\n";
  for (const auto& r : rows)
    os << r.strategy_id << ',' << r.battery_id << ',' << r.stats.n << ',' << csv::num(r.stats.mean, 2) << ','
       << csv::num(r.stats.median, 2) << ',' << csv::num(r.stats.std, 2) << ',' << csv::num(r.stats.min, 2) << ','
       << csv::num(r.stats.max, 2) << ',' << (r.stats.std_defined ? 1 : 0) << '\n';
}

/// Aligned plain-text table: bidding strategy, mean, median, std, min, max.
inline void write_summary_text(std::ostream& os, const std::vector<SummaryRow>& rows) {
  if (rows.empty()) {
    os << "(empty ledger)\n";
    return;
  }
  std::size_t w = std::string("bidding strategy").size();
  for (const auto& r : rows) w = std::max(w, r.strategy_id.size() + r.battery_id.size() + 3);
  os << std::left << std::setw(int(w)) << "bidding strategy";
  for (const char* h : {"mean", "median", "std", "min", "max"}) os << std::right << std::setw(11) << h;
  os << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(int(w)) << (r.strategy_id + " (" + r.battery_id + ")");
    for (double v : {r.stats.mean, r.stats.median, r.stats.std, r.stats.min, r.stats.max})
      os << std::right << std::setw(11) << csv::num(v, 2);
    os << (r.stats.std_defined ? "" : "  *std undefined (n=1)") << '\n';
  }
}

struct SeriesPoint {
  Date date;
  double profit;
  double moving_average;
  double cumulative;
};

/// Trailing moving average (window shrinks at the start) and cumulative sum.
inline std::vector<SeriesPoint> profit_series(const std::vector<std::pair<Date, double>>& rows, int window) {
  std::vector<SeriesPoint> out;
  double cum = 0, win = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cum += rows[i].second;
    win += rows[i].second;
    if (i >= std::size_t(window)) win -= rows[i - window].second;
    const double count = double(std::min<std::size_t>(i + 1, window));
    out.push_back({rows[i].first, rows[i].second, win / count, cum});
  }
  return out;
}

inline void write_profit_series_csv(std::ostream& os, const Ledger& ledger, const ReportSpec& spec) {
  spec.validate();
  os << "date,strategy_id,battery_id,profit_eur,moving_average_eur,cumulative_eur\n";
  for (auto& [key, rows] : group_profits(ledger))
    for (const auto& p : profit_series(rows, spec.moving_average_days))
      os << format_date(p.date) << ',' << key.first << ',' << key.second << ',' << csv::num(p.profit, 2) << ','
         << csv::num(p.moving_average, 2) << ',' << csv::num(p.cumulative, 2) << '\n';
}

// ---------------------------------------------------------------------------
// Cycle limits
// ---------------------------------------------------------------------------

struct CycleSensitivity {
  std::vector<std::pair<int, Stats>> by_cycles;
  /// increments[k] per date: profit(k) - profit(k-1), for k >= 2.
  std::map<int, std::vector<std::pair<Date, double>>> increments;
  std::map<int, double> mean_increment;
};

/// `by_cycles` maps a daily cycle limit to date-sorted daily profits. Every
/// setting must cover the same dates.
inline CycleSensitivity cycle_sensitivity(const std::map<int, std::vector<std::pair<Date, double>>>& by_cycles) {
  CycleSensitivity out;
  if (by_cycles.empty()) return out;
  std::set<Date> all;
  for (auto& [k, rows] : by_cycles)
    for (auto& [d, p] : rows) all.insert(d);
  std::string missing;
  for (auto& [k, rows] : by_cycles) {
    std::set<Date> have;
    for (auto& [d, p] : rows) have.insert(d);
    for (auto d : all)
      if (!have.count(d)) missing += " " + std::to_string(k) + "c:" + format_date(d);
  }
  if (!missing.empty()) throw StructuralError("cycle_sensitivity: mismatched date coverage, missing" + missing);

  const std::vector<std::pair<Date, double>>* prev = nullptr;
  int prev_k = 0;
  for (auto& [k, rows] : by_cycles) {
    std::vector<double> v;
    for (auto& [d, p] : rows) v.push_back(p);
    out.by_cycles.emplace_back(k, compute_stats(v));
    if (prev && k == prev_k + 1) {
      auto& inc = out.increments[k];
      double sum = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        inc.emplace_back(rows[i].first, rows[i].second - (*prev)[i].second);
        sum += inc.back().second;
      }
      out.mean_increment[k] = rows.empty() ? 0.0 : sum / double(rows.size());
    }
    prev = &rows;
    prev_k = k;
  }
  return out;
}

/// Splits a ledger into per-cycle-limit profit series for one strategy,
/// using battery ids "<base>" (1 cycle) and "<base>-cK".
inline std::map<int, std::vector<std::pair<Date, double>>> profits_by_cycles(const Ledger& ledger,
                                                                             const std::string& strategy_id,
                                                                             const std::string& base_battery) {
  std::map<int, std::vector<std::pair<Date, double>>> out;
  for (auto& [key, rows] : group_profits(ledger)) {
    if (key.first != strategy_id) continue;
    int k = 0;
    if (key.second == base_battery) {
      k = 1;
    } else if (key.second.rfind(base_battery + "-c", 0) == 0) {
      if (!detail::parse_int(std::string_view(key.second).substr(base_battery.size() + 2), k)) continue;
    } else {
      continue;
    }
    auto& dst = out[k];
    dst.insert(dst.end(), rows.begin(), rows.end());
    std::stable_sort(dst.begin(), dst.end(), [](auto& a, auto& b) { return a.first < b.first; });
  }
  return out;
}

inline void write_cycle_sensitivity_csv(std::ostream& os, const CycleSensitivity& cs) {
  os << "max_daily_cycles,n,mean,median,std,min,max,mean_increment\n";
  for (auto& [k, s] : cs.by_cycles) {
    auto it = cs.mean_increment.find(k);
    os << k << ',' << s.n << ',' << csv::num(s.mean, 2) << ',' << csv::num(s.median, 2) << ',' << csv::num(s.std, 2)
       << ',' << csv::num(s.min, 2) << ',' << csv::num(s.max, 2) << ','
       << (it == cs.mean_increment.end() ? std::string() : csv::num(it->second, 2)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Ex-post cycle reallocation
// ---------------------------------------------------------------------------

struct SuspensionRow {
  double share_percent = 0;
  std::size_t days_moved = 0;
  std::string note;
  Stats stats;
  std::vector<double> profits;  // in date order
};

/// For each share s: operation is suspended (profit 0) on the k = floor(s*n/100)
/// least profitable base days and the incremental second-cycle profit is added
/// on the k remaining days with the highest increment. Ties break by date.
inline std::vector<SuspensionRow> suspension_analysis(const std::vector<std::pair<Date, double>>& base,
                                                      const std::vector<std::pair<Date, double>>& increment,
                                                      const std::vector<double>& shares_percent) {
  if (base.size() != increment.size())
    throw StructuralError("suspension_analysis: base and incremental ledgers cover different dates");
  std::map<Date, double> inc;
  for (auto& [d, v] : increment) inc[d] = v;
  std::vector<std::size_t> order(base.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return base[a].first < base[b].first; });
  std::vector<std::pair<Date, double>> days;  // date-sorted base
  std::vector<double> incs;
  for (auto i : order) {
    auto it = inc.find(base[i].first);
    if (it == inc.end())
      throw StructuralError("suspension_analysis: no increment for " + format_date(base[i].first));
    days.push_back(base[i]);
    incs.push_back(it->second);
  }
  const std::size_t n = days.size();

  std::vector<SuspensionRow> out;
  for (double s : shares_percent) {
    if (!(s >= 0 && s <= 100)) throw InputError("suspension_analysis: share must be within [0, 100]");
    SuspensionRow row;
    row.share_percent = s;
    const double exact = s * double(n) / 100.0;
    row.days_moved = static_cast<std::size_t>(std::floor(exact + 1e-9));
    if (std::abs(exact - double(row.days_moved)) > 1e-9)
      row.note = "share of days not an integer (" + csv::num(exact, 2) + "), rounded down to " +
                 std::to_string(row.days_moved);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return days[a].second != days[b].second ? days[a].second < days[b].second : a < b;
    });
    std::vector<std::uint8_t> suspended(n, 0);
    for (std::size_t k = 0; k < row.days_moved; ++k) suspended[idx[k]] = 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (!suspended[i]) rest.push_back(i);
    std::sort(rest.begin(), rest.end(),
              [&](std::size_t a, std::size_t b) { return incs[a] != incs[b] ? incs[a] > incs[b] : a < b; });
    row.profits.resize(n);
    for (std::size_t i = 0; i < n; ++i) row.profits[i] = suspended[i] ? 0.0 : days[i].second;
    for (std::size_t k = 0; k < row.days_moved && k < rest.size(); ++k) row.profits[rest[k]] += incs[rest[k]];
    row.stats = compute_stats(row.profits);
    out.push_back(std::move(row));
  }
  return out;
}

inline void write_suspension_csv(std::ostream& os, const std::vector<SuspensionRow>& rows) {
  os << "share_percent,days_moved,mean,median,std,min,max,note\n";
  for (const auto& r : rows)
    os << csv::num(r.share_percent, 0) << ',' << r.days_moved << ',' << csv::num(r.stats.mean, 2) << ','
       << csv::num(r.stats.median, 2) << ',' << csv::num(r.stats.std, 2) << ',' << csv::num(r.stats.min, 2) << ','
       << csv::num(r.stats.max, 2) << ',' << detail::sanitize(r.note) << '\n';
}

// ---------------------------------------------------------------------------
// Market liquidity
// ---------------------------------------------------------------------------

struct LiquidityBin {
  double hours_to_delivery;  // lower edge of the 15-minute bin
  double volume_mw = 0;
  std::size_t trades = 0;
  double cumulative_volume_mw = 0;  // this bin and everything farther out
  std::size_t cumulative_trades = 0;
};

struct DurationShare {
  int duration_minutes;
  double volume_mw = 0;
  std::size_t trades = 0;
  double volume_share = 0;
  double trade_share = 0;
};

struct LiquidityStats {
  std::vector<DurationShare> by_duration;
  std::vector<LiquidityBin> bins;  // ordered far to near
  bool empty() const { return by_duration.empty(); }
};

inline LiquidityStats liquidity_stats(const std::vector<TradeTick>& ticks) {
  LiquidityStats out;
  if (ticks.empty()) return out;
  std::map<int, DurationShare> dur;
  std::map<long long, LiquidityBin> bins;
  double total_v = 0;
  for (const auto& t : ticks) {
    auto& d = dur.try_emplace(t.product.duration_minutes, DurationShare{t.product.duration_minutes}).first->second;
    d.volume_mw += t.volume_mw;
    ++d.trades;
    total_v += t.volume_mw;
    const auto ttd = t.product.delivery_start - t.execution_time;
    const long long b = std::max<long long>(0, ttd / std::chrono::milliseconds{minutes{15}});
    auto& bin = bins.try_emplace(b, LiquidityBin{double(b) * 0.25}).first->second;
    bin.volume_mw += t.volume_mw;
    ++bin.trades;
  }
  for (auto& [k, d] : dur) {
    d.volume_share = total_v > 0 ? d.volume_mw / total_v : 0;
    d.trade_share = double(d.trades) / double(ticks.size());
    out.by_duration.push_back(d);
  }
  const long long far = bins.rbegin()->first;
  double cv = 0;
  std::size_t cn = 0;
  for (long long b = far; b >= 0; --b) {
    LiquidityBin bin{double(b) * 0.25};
    if (auto it = bins.find(b); it != bins.end()) bin = it->second;
    cv += bin.volume_mw;
    cn += bin.trades;
    bin.cumulative_volume_mw = cv;
    bin.cumulative_trades = cn;
    out.bins.push_back(bin);
  }
  return out;
}

inline void write_liquidity_csv(std::ostream& bins_os, std::ostream& shares_os, const LiquidityStats& s) {
  if (s.empty()) {
    bins_os << "# no ticks\n";
    shares_os << "# no ticks\n";
    return;
  }
  const double tv = s.bins.back().cumulative_volume_mw;
  const double tn = double(s.bins.back().cumulative_trades);
  bins_os << "hours_to_delivery,volume_mw,trades,cumulative_volume_mw,cumulative_trades,cumulative_volume_share,"
             "cumulative_trade_share\n";
  for (const auto& b : s.bins)
    bins_os << csv::num(b.hours_to_delivery, 2) << ',' << csv::num(b.volume_mw, 1) << ',' << b.trades << ','
            << csv::num(b.cumulative_volume_mw, 1) << ',' << b.cumulative_trades << ','
            << csv::num(tv > 0 ? b.cumulative_volume_mw / tv : 0, 6) << ','
            << csv::num(tn > 0 ? double(b.cumulative_trades) / tn : 0, 6) << '\n';
  shares_os << "duration_min,volume_mw,trades,volume_share,trade_share\n";
  for (const auto& d : s.by_duration)
    shares_os << d.duration_minutes << ',' << csv::num(d.volume_mw, 1) << ',' << d.trades << ','
              << csv::num(d.volume_share, 6) << ',' << csv::num(d.trade_share, 6) << '\n';
}

// ---------------------------------------------------------------------------
// Dispatch profiles
// ---------------------------------------------------------------------------

/// Season 1 is April to September, season 2 the other months.
inline int season_of(Date d) {
  const unsigned m = static_cast<unsigned>(d.month());
  return m >= 4 && m <= 9 ? 1 : 2;
}

struct DispatchProfile {
  std::string strategy_id;
  std::string battery_id;
  int season;
  std::size_t days = 0;
  std::vector<double> mean_net_mw;  // negative = charging
};

inline std::vector<DispatchProfile> dispatch_profiles(const Ledger& ledger) {
  std::map<std::tuple<std::string, std::string, int>, DispatchProfile> acc;
  bool any = false;
  for (const auto& r : ledger) {
    if (r.status != "ok") continue;
    if (r.net_mw.empty())
      throw Error("dispatch_profiles: schedules were not retained for " + r.strategy_id + " on " + format_date(r.date));
    any = true;
    auto key = std::make_tuple(r.strategy_id, r.battery_id, season_of(r.date));
    auto& p = acc.try_emplace(key, DispatchProfile{r.strategy_id, r.battery_id, season_of(r.date), 0, {}}).first->second;
    if (p.mean_net_mw.size() < r.net_mw.size()) p.mean_net_mw.resize(r.net_mw.size(), 0.0);
    for (std::size_t i = 0; i < r.net_mw.size(); ++i) p.mean_net_mw[i] += r.net_mw[i];
    ++p.days;
  }
  if (!any) throw Error("dispatch_profiles: no completed rows with schedules");
  std::vector<DispatchProfile> out;
  for (auto& [k, p] : acc) {
    for (auto& v : p.mean_net_mw) v /= double(p.days);
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_dispatch_profiles_csv(std::ostream& os, const std::vector<DispatchProfile>& profiles) {
  os << "strategy_id,battery_id,season,period,days,mean_net_mw\n";
  for (const auto& p : profiles)
    for (std::size_t i = 0; i < p.mean_net_mw.size(); ++i)
      os << p.strategy_id << ',' << p.battery_id << ',' << p.season << ',' << i << ',' << p.days << ','
         << csv::num(p.mean_net_mw[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Report bundle
// ---------------------------------------------------------------------------

/// Writes every report the ledger supports into `dir` plus manifest.json.
/// Returns the manifest.
inline nlohmann::json write_reports(const Ledger& ledger, const std::filesystem::path& dir, const ReportSpec& spec,
                                    const std::vector<double>& suspension_shares = {0, 5, 10, 15, 20, 25}) {
  spec.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["rows"] = ledger.size();
  manifest["moving_average_days"] = spec.moving_average_days;
  auto& files = manifest["files"] = nlohmann::json::array();
  auto emit = [&](const std::string& name, const std::string& kind, auto&& writer) {
    std::ofstream os(dir / name);
    writer(os);
    files.push_back({{"file", name}, {"kind", kind}});
  };

  const auto summary = summarize(ledger);
  manifest["empty"] = summary.empty();
  emit("summary.csv", "profit statistics", [&](std::ostream& os) { write_summary_csv(os, summary); });
  emit("summary.txt", "profit statistics (text)", [&](std::ostream& os) { write_summary_text(os, summary); });
  emit("profit_series.csv", "moving average and cumulative profit",
       [&](std::ostream& os) { write_profit_series_csv(os, ledger, spec); });

  const bool have_dispatch = std::any_of(ledger.begin(), ledger.end(), [](auto& r) { return !r.net_mw.empty(); });
  if (have_dispatch)
    emit("dispatch_profiles.csv", "mean dispatch by season",
         [&](std::ostream& os) { write_dispatch_profiles_csv(os, dispatch_profiles(ledger)); });

  // Cycle studies for every (strategy, base battery) with variants "-cK".
  std::set<std::pair<std::string, std::string>> bases;
  for (const auto& r : ledger)
    if (auto pos = r.battery_id.rfind("-c"); pos != std::string::npos)
      bases.insert({r.strategy_id, r.battery_id.substr(0, pos)});
  int study = 0;
  auto& notes = manifest["notes"] = nlohmann::json::array();
  for (const auto& [strategy, base] : bases) {
    auto by = profits_by_cycles(ledger, strategy, base);
    if (by.size() < 2) continue;
    const auto tag = std::to_string(++study);
    auto cs = cycle_sensitivity(by);
    emit("cycle_sensitivity_" + tag + ".csv", "cycle sensitivity " + strategy + " " + base,
         [&](std::ostream& os) { write_cycle_sensitivity_csv(os, cs); });
    if (by.count(1) && cs.increments.count(2)) {
      auto rows = suspension_analysis(by.at(1), cs.increments.at(2), suspension_shares);
      emit("suspension_" + tag + ".csv", "cycle suspension " + strategy + " " + base,
           [&](std::ostream& os) { write_suspension_csv(os, rows); });
      for (const auto& r : rows)
        if (!r.note.empty()) notes.push_back(r.note);
    }
  }
  files.push_back({{"file", "manifest.json"}, {"kind", "manifest"}});
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace bessarb
