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

// Command-line front end: ingest | synth | optimize | backtest | report.
// Settings come from an optional JSON run config (--config) and are
// overridden by flags. The default data directory is taken from
// $BESSARB_DATA_DIR.

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/market_data.hpp>
#include <bessarb/optimizer.hpp>
#include <bessarb/quotes.hpp>
#include <bessarb/report.hpp>
#include <bessarb/rolling.hpp>
#include <bessarb/strategy.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace bessarb::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kUnknownStrategy = 3,
  kMissingData = 4,
  kSchema = 5,
  kInfeasible = 6,
};

/// Requested data (file, day range, series) is not available.
class MissingDataError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  SynthConfig synth;
  QuoteConfig quotes;
  int lead_minutes = 0;
  std::vector<std::string> strategies{"DA"};
  std::vector<std::string> batteries{"2h"};
  std::optional<BatteryConfig> battery;  // explicit battery instead of a preset
  std::string from, to;
  std::string data_dir;
  unsigned jobs = 1;
  int utc_offset_minutes = 0;
  int moving_average_days = 20;
  bool keep_dispatch = true;
};

inline BatteryConfig battery_from_json(const nlohmann::json& j) {
  BatteryConfig b = battery_preset("2h");
  b.max_power_mw = j.value("max_power_mw", b.max_power_mw);
  b.capacity_mwh = j.value("capacity_mwh", b.capacity_mwh);
  b.eta_charge = j.value("eta_charge", b.eta_charge);
  b.eta_discharge = j.value("eta_discharge", b.eta_discharge);
  b.max_daily_cycles = j.value("max_daily_cycles", b.max_daily_cycles);
  b.soc_initial_mwh = j.value("soc_initial_mwh", b.soc_initial_mwh);
  b.soc_terminal_mwh = j.value("soc_terminal_mwh", b.soc_terminal_mwh);
  b.validate();
  return b;
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw MissingDataError("config file '" + path + "' not found");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("config '" + path + "': " + e.what());
  }
  try {
    if (j.contains("synth")) c.synth = j["synth"].get<SynthConfig>();
    if (j.contains("quotes")) {
      const auto& q = j["quotes"];
      c.quotes.bucket_minutes = q.value("bucket_minutes", c.quotes.bucket_minutes);
      c.quotes.min_trades = q.value("min_trades", c.quotes.min_trades);
      c.quotes.bid_quantile = q.value("bid_quantile", c.quotes.bid_quantile);
      c.quotes.ask_quantile = q.value("ask_quantile", c.quotes.ask_quantile);
      c.quotes.sentinel_eur = q.value("sentinel_eur", c.quotes.sentinel_eur);
      c.quotes.gate_open_minutes_before = q.value("gate_open_minutes_before", c.quotes.gate_open_minutes_before);
    }
    c.lead_minutes = j.value("lead_minutes", c.lead_minutes);
    if (j.contains("strategies")) c.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("batteries")) c.batteries = j["batteries"].get<std::vector<std::string>>();
    if (j.contains("battery")) c.battery = battery_from_json(j["battery"]);
    c.from = j.value("from", c.from);
    c.to = j.value("to", c.to);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.utc_offset_minutes = j.value("utc_offset_minutes", c.utc_offset_minutes);
    c.moving_average_days = j.value("moving_average_days", c.moving_average_days);
    c.keep_dispatch = j.value("keep_dispatch", c.keep_dispatch);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("config '" + path + "': " + e.what());
  }
  return c;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto t : csv::split(s, ','))
    if (!t.empty()) out.emplace_back(t);
  return out;
}

inline Date require_date(const std::string& s, const char* what) {
  auto d = parse_date(s);
  if (!d) throw InputError(std::string(what) + ": expected YYYY-MM-DD, got '" + s + "'");
  return *d;
}

inline std::vector<StrategySpec> make_specs(const RunConfig& c) {
  std::vector<StrategySpec> specs;
  for (const auto& b : c.batteries) {
    const auto cfg = c.battery && b == "custom" ? *c.battery : parse_battery_id(b);
    for (const auto& s : c.strategies) specs.push_back(StrategySpec::parse(s, cfg, b));
  }
  return specs;
}

inline StrategyOptions strategy_options(const RunConfig& c) {
  StrategyOptions o;
  o.quotes = c.quotes;
  o.rolling.lead_minutes = c.lead_minutes;
  return o;
}

inline std::string resolve_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BESSARB_DATA_DIR")) return env;
  return {};
}

}  // namespace detail

/// Loads the store; missing directories are a data error.
inline DataStore open_store(const std::string& dir, int utc_offset_minutes) {
  if (dir.empty()) throw MissingDataError("no data directory (use --data or BESSARB_DATA_DIR, or --synthetic)");
  if (!std::filesystem::is_directory(dir)) throw MissingDataError("data directory '" + dir + "' does not exist");
  DataStore store(utc_offset_minutes);
  store.load(dir);
  return store;
}

inline int cmd_ingest(const RunConfig& c, const std::vector<std::string>& tick_files,
                      const std::vector<std::string>& series_files, std::ostream& out) {
  const auto dir = detail::resolve_data_dir(c.data_dir);
  if (dir.empty()) throw InputError("ingest: no output data directory (use --out or BESSARB_DATA_DIR)");
  DataStore store(c.utc_offset_minutes);
  if (std::filesystem::is_directory(dir)) store.load(dir);
  nlohmann::json report = nlohmann::json::object();
  for (const auto& f : tick_files) {
    if (!std::filesystem::exists(f)) throw MissingDataError("tick file '" + f + "' not found");
    report[f] = store.ingest_ticks(f).to_json();
  }
  for (const auto& spec : series_files) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw InputError("ingest: --series expects NAME=FILE, got '" + spec + "'");
    const auto name = spec.substr(0, eq), f = spec.substr(eq + 1);
    if (!std::filesystem::exists(f)) throw MissingDataError("series file '" + f + "' not found");
    report[f] = store.ingest_series(f, name).to_json();
  }
  store.save(dir);
  out << report.dump(2) << '\n';
  return kOk;
}

inline int cmd_synth(const RunConfig& c, const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw InputError("synth: --out is required");
  const auto from = detail::require_date(c.from, "--from");
  const auto to = detail::require_date(c.to.empty() ? c.from : c.to, "--to");
  const auto days = date_range(from, to);
  if (days.empty()) throw InputError("synth: empty date range");
  DataStore store(c.utc_offset_minutes);
  for (auto d : days) store.put_day(d, generate_synthetic_day(c.synth, d, c.utc_offset_minutes));
  store.save(out_dir);
  nlohmann::json cfg = c.synth;
  std::ofstream(std::filesystem::path(out_dir) / "synth_config.json") << cfg.dump(2) << '\n';
  out << "wrote " << days.size() << " synthetic day(s) to " << out_dir << '\n';
  return kOk;
}

/// Provider for backtest/optimize: a data directory or the synthetic model.
inline DayProvider make_provider(const RunConfig& c, bool synthetic, std::shared_ptr<DataStore>& holder) {
  if (synthetic) return synthetic_provider(c.synth, c.utc_offset_minutes);
  holder = std::make_shared<DataStore>(open_store(detail::resolve_data_dir(c.data_dir), c.utc_offset_minutes));
  return store_provider(*holder);
}

inline int cmd_optimize(const RunConfig& c, bool synthetic, const std::string& out_dir, std::ostream& out) {
  const auto day = detail::require_date(c.from, "--day");
  if (c.strategies.size() != 1 || c.batteries.size() != 1)
    throw InputError("optimize: exactly one strategy and one battery");
  const auto spec = detail::make_specs(c).front();
  std::shared_ptr<DataStore> holder;
  auto provider = make_provider(c, synthetic, holder);
  auto data = provider(day);
  if (!data) throw MissingDataError("no data for " + format_date(day));
  auto rec = run_strategy(spec, day, *data, detail::strategy_options(c), c.utc_offset_minutes);
  if (rec.status != "ok") throw MissingDataError(format_date(day) + ": " + rec.note);
  out << "strategy " << rec.strategy_id << " battery " << rec.battery_id << " day " << format_date(day) << '\n';
  for (std::size_t k = 0; k < rec.stage_eur.size(); ++k)
    out << "  stage " << spec.stages[k].token << ": " << csv::num(rec.stage_eur[k], 2) << " EUR, traded "
        << csv::num(rec.stage_traded_mwh[k], 3) << " MWh\n";
  out << "objective_eur " << csv::num(rec.total_eur, 2) << '\n';
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "schedule.csv");
    const auto grid = DeliveryGrid::make(day, 15, c.utc_offset_minutes);
    Position pos = Position::zero(grid);
    for (std::size_t i = 0; i < rec.net_mw.size(); ++i) {
      pos.charge_mw[i] = rec.net_mw[i] < 0 ? -rec.net_mw[i] : 0.0;
      pos.discharge_mw[i] = rec.net_mw[i] > 0 ? rec.net_mw[i] : 0.0;
    }
    const auto soc = soc_trajectory(pos, spec.battery);
    os << "period,delivery_start,charge_mw,discharge_mw,soc_end_mwh\n";
    for (std::size_t i = 0; i < grid.periods(); ++i)
      os << i << ',' << format_timestamp(grid.period_start(i)) << ',' << csv::num(pos.charge_mw[i]) << ','
         << csv::num(pos.discharge_mw[i]) << ',' << csv::num(soc[i + 1]) << '\n';
    std::ofstream result(std::filesystem::path(out_dir) / "result.csv");
    write_ledger_csv(result, Ledger{rec});
  }
  return kOk;
}

inline int cmd_backtest(const RunConfig& c, bool synthetic, const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw InputError("backtest: --out is required");
  const auto from = detail::require_date(c.from, "--from");
  const auto to = detail::require_date(c.to.empty() ? c.from : c.to, "--to");
  const auto dates = date_range(from, to);
  if (dates.empty()) throw InputError("backtest: empty date range");
  const auto specs = detail::make_specs(c);
  std::shared_ptr<DataStore> holder;
  auto provider = make_provider(c, synthetic, holder);
  if (holder) {
    const bool any = std::any_of(dates.begin(), dates.end(), [&](Date d) { return holder->day(d) != nullptr; });
    if (!any) throw MissingDataError("no data in " + c.from + " .. " + (c.to.empty() ? c.from : c.to));
  }
  BacktestOptions opt;
  opt.strategy = detail::strategy_options(c);
  opt.jobs = c.jobs;
  opt.utc_offset_minutes = c.utc_offset_minutes;
  opt.keep_dispatch = c.keep_dispatch;
  auto ledger = backtest(specs, dates, provider, opt);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(std::filesystem::path(out_dir) / "ledger.csv");
    write_ledger_csv(os, ledger);
  }
  if (c.keep_dispatch) {
    std::ofstream os(std::filesystem::path(out_dir) / "dispatch.csv");
    write_dispatch_csv(os, ledger);
  }
  std::size_t skipped = 0;
  for (const auto& r : ledger) {
    if (r.status == "ok") continue;
    ++skipped;
    std::cerr << "skipped " << format_date(r.date) << ' ' << r.strategy_id << ' ' << r.battery_id << ": " << r.note
              << '\n';
  }
  out << "ledger rows " << ledger.size() << " (skipped " << skipped << ") -> " << out_dir << '\n';
  return kOk;
}

inline int cmd_report(const RunConfig& c, const std::string& ledger_path, const std::string& dispatch_path,
                      const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw InputError("report: --out is required");
  if (!std::filesystem::exists(ledger_path)) throw MissingDataError("ledger '" + ledger_path + "' not found");
  if (!dispatch_path.empty() && !std::filesystem::exists(dispatch_path))
    throw MissingDataError("dispatch file '" + dispatch_path + "' not found");
  auto ledger = read_ledger_csv(ledger_path, dispatch_path);
  ReportSpec spec;
  spec.moving_average_days = c.moving_average_days;
  auto manifest = write_reports(ledger, out_dir, spec);
  const auto dir = detail::resolve_data_dir(c.data_dir);
  if (!dir.empty() && std::filesystem::is_directory(dir)) {
    auto store = open_store(dir, c.utc_offset_minutes);
    std::vector<TradeTick> ticks;
    for (const auto& [d, data] : store.days())
      for (const auto& [dur, t] : data.ticks_by_duration) ticks.insert(ticks.end(), t.begin(), t.end());
    auto stats = liquidity_stats(ticks);
    std::ofstream bins(std::filesystem::path(out_dir) / "liquidity_curve.csv");
    std::ofstream shares(std::filesystem::path(out_dir) / "liquidity_shares.csv");
    write_liquidity_csv(bins, shares, stats);
    manifest["files"].push_back({{"file", "liquidity_curve.csv"}, {"kind", "cumulative liquidity"}});
    manifest["files"].push_back({{"file", "liquidity_shares.csv"}, {"kind", "liquidity by product"}});
    std::ofstream(std::filesystem::path(out_dir) / "manifest.json") << manifest.dump(2) << '\n';
  }
  write_summary_text(out, summarize(ledger));
  return kOk;
}

/// Parses arguments and runs a command. Errors are reported on `err` as one
/// JSON object; the return value is the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Battery storage arbitrage backtester", "bessarb"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out_dir, data_dir;
  app.add_option("--config", config_path, "JSON run config");
  app.add_option("--seed", seed, "synthetic RNG seed (overrides config)");
  app.add_option("--jobs", jobs, "worker threads for backtests");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--data", data_dir, "data directory (default $BESSARB_DATA_DIR)");

  auto* ingest = app.add_subcommand("ingest", "load tick / price CSV files into a data directory");
  std::vector<std::string> tick_files, series_files;
  ingest->add_option("--ticks", tick_files, "tick CSV file(s)");
  ingest->add_option("--series", series_files, "NAME=FILE price series");

  auto* synth = app.add_subcommand("synth", "write synthetic market days to --out");
  std::string from, to, day;
  synth->add_option("--from", from, "first day (YYYY-MM-DD)")->required();
  synth->add_option("--to", to, "last day (default: --from)");

  std::string strategies, batteries;
  bool synthetic = false;
  auto* optimize_cmd = app.add_subcommand("optimize", "run one strategy on one day");
  optimize_cmd->add_option("--day", day, "delivery day")->required();
  optimize_cmd->add_option("--strategy", strategies, "strategy id, e.g. DA|ID_AUCT");
  optimize_cmd->add_option("--battery", batteries, "battery id: 1h, 2h, 4h, 2h-c2, custom");
  optimize_cmd->add_flag("--synthetic", synthetic, "generate the day from the synthetic model");

  auto* backtest_cmd = app.add_subcommand("backtest", "run strategies over a date range");
  backtest_cmd->add_option("--from", from, "first day")->required();
  backtest_cmd->add_option("--to", to, "last day (default: --from)");
  backtest_cmd->add_option("--strategies", strategies, "comma-separated strategy ids");
  backtest_cmd->add_option("--batteries", batteries, "comma-separated battery ids");
  backtest_cmd->add_flag("--synthetic", synthetic, "generate days from the synthetic model");

  auto* report_cmd = app.add_subcommand("report", "statistics and plot-ready CSVs from a ledger");
  std::string ledger_path, dispatch_path;
  std::optional<int> window;
  report_cmd->add_option("--ledger", ledger_path, "ledger CSV")->required();
  report_cmd->add_option("--dispatch", dispatch_path, "dispatch CSV (enables seasonal profiles)");
  report_cmd->add_option("--window", window, "moving-average window in days");

  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    nlohmann::json j{{"error", kind}, {"message", msg}, {"exit_code", code}};
    err << j.dump() << '\n';
    return code;
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    RunConfig c = load_run_config(config_path);
    if (seed) c.synth.rng_seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (!data_dir.empty()) c.data_dir = data_dir;
    if (!from.empty()) c.from = from;
    if (!to.empty()) c.to = to;
    if (!day.empty()) c.from = day;
    if (!strategies.empty()) c.strategies = detail::split_list(strategies);
    if (!batteries.empty()) c.batteries = detail::split_list(batteries);
    if (window) c.moving_average_days = *window;
    if (*ingest) {
      if (!out_dir.empty()) c.data_dir = out_dir;
      return cmd_ingest(c, tick_files, series_files, out);
    }
    if (*synth) return cmd_synth(c, out_dir, out);
    if (*optimize_cmd) {
      if (!strategies.empty() && strategies.find(',') != std::string::npos)
        throw InputError("optimize: a single strategy id is expected");
      if (!strategies.empty()) c.strategies = {strategies};
      return cmd_optimize(c, synthetic, out_dir, out);
    }
    if (*backtest_cmd) return cmd_backtest(c, synthetic, out_dir, out);
    if (*report_cmd) return cmd_report(c, ledger_path, dispatch_path, out_dir, out);
    return fail(kUsage, "usage", "no command");
  } catch (const UnknownStrategyError& e) {
    return fail(kUnknownStrategy, "unknown_strategy", e.what());
  } catch (const MissingDataError& e) {
    return fail(kMissingData, "missing_data", e.what());
  } catch (const SchemaError& e) {
    return fail(kSchema, "schema", e.what());
  } catch (const InfeasibleError& e) {
    return fail(kInfeasible, "infeasible", std::string(e.what()) + " [" + e.constraint() + "]");
  } catch (const InputError& e) {
    return fail(kUsage, "invalid_input", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "error", e.what());
  }
}

}  // namespace bessarb::cli
