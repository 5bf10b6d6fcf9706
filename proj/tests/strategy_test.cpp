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

#include <bessarb/strategy.hpp>

#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"

using namespace bessarb;
using namespace bessarb::testing;

namespace {

const BatteryConfig k2h = battery_preset("2h");

SynthConfig small_synth(std::uint64_t seed = 42) {
  SynthConfig c;
  c.rng_seed = seed;
  c.tick_intensity = 200;
  return c;
}

}  // namespace

TEST(StrategyParse, TokensAndIds) {
  auto s = StrategySpec::parse("DA|ID_AUCT|ID_ROLL", k2h, "2h");
  ASSERT_EQ(s.stages.size(), 3u);
  EXPECT_EQ(s.stages[0].kind, StageKind::DaAuction);
  EXPECT_EQ(s.stages[0].product_minutes, 60);
  EXPECT_EQ(s.stages[1].series, "IDA1");
  EXPECT_EQ(s.stages[2].kind, StageKind::IdRolling);
  EXPECT_EQ(s.id(), "DA|ID_AUCT|ID_ROLL");
  EXPECT_TRUE(s.tradable());
  EXPECT_FALSE(StrategySpec::parse("ID3", k2h).tradable());
  auto f = StrategySpec::parse("DA~IDA1|ID_ROLL", k2h);
  EXPECT_EQ(f.stages[0].series, "DA");
  EXPECT_EQ(f.stages[0].forecast_series, "IDA1");
  EXPECT_EQ(StrategySpec::parse("DA|ID_ROLL_1H", k2h).stages[1].product_minutes, 60);
}

TEST(StrategyParse, RejectsBadChains) {
  for (const char* id : {"", "FOO", "DA|", "ID_AUCT|DA", "ID_ROLL|ID_AUCT", "ID_ROLL|ID_ROLL", "ID_AUCT|ID_ROLL_1H",
                         "ID_AUCT~DA", "DA~"})
    EXPECT_THROW(StrategySpec::parse(id, k2h), UnknownStrategyError) << id;
}

TEST(StrategyParse, BatteryIds) {
  EXPECT_EQ(parse_battery_id("2h").max_daily_cycles, 1);
  EXPECT_EQ(parse_battery_id("2h-c3").max_daily_cycles, 3);
  EXPECT_EQ(parse_battery_id("4h").max_power_mw, 0.5);
  EXPECT_THROW(parse_battery_id("2h-c0"), InputError);
  EXPECT_THROW(parse_battery_id("2h-cx"), InputError);
  EXPECT_THROW(parse_battery_id("3h"), InputError);
}

TEST(RunStrategy, FlatDayAuctionEarnsNothing) {
  auto cfg = SynthConfig::flat();
  cfg.tick_intensity = 30;
  const auto day = ymd(2025, 3, 4);
  auto data = generate_synthetic_day(cfg, day);
  auto r = run_strategy(StrategySpec::parse("DA", k2h), day, data);
  EXPECT_EQ(r.status, "ok");
  EXPECT_EQ(r.total_eur, 0.0);
  EXPECT_EQ(r.net_mw.size(), 96u);
}

TEST(RunStrategy, IdenticalRedispatchPricesAddNothing) {
  const auto day = ymd(2025, 3, 4);
  auto data = generate_synthetic_day(small_synth(), day);
  auto& ida = data.series.at("IDA1").values;
  const auto& da = data.series.at("DA").values;
  for (std::size_t i = 0; i < ida.size(); ++i) ida[i] = da[i / 4];
  auto solo = run_strategy(StrategySpec::parse("DA", k2h), day, data);
  auto chain = run_strategy(StrategySpec::parse("DA|ID_AUCT", k2h), day, data);
  ASSERT_EQ(chain.stage_eur.size(), 2u);
  EXPECT_GT(solo.total_eur, 0.0);
  EXPECT_NEAR(chain.stage_eur[1], 0.0, 1e-6);
  EXPECT_NEAR(chain.total_eur, solo.total_eur, 1e-6);
}

TEST(RunStrategy, AppendingStagesNeverLosesMoney) {
  for (unsigned d = 1; d <= 3; ++d) {
    const auto day = ymd(2025, 7, d);
    auto data = generate_synthetic_day(small_synth(), day);
    DayQuotes quotes(data, day, 0, QuoteConfig{});
    auto run = [&](const char* id) { return run_strategy(StrategySpec::parse(id, k2h), day, data, quotes); };
    for (const char* x : {"DA", "ID_AUCT"}) {
      const auto base = run(x);
      for (const char* y : {"ID_AUCT", "ID_ROLL"}) {
        const auto chain = run((std::string(x) + "|" + y).c_str());
        for (double v : chain.stage_eur) EXPECT_GE(v, -1e-9);
        EXPECT_GE(chain.total_eur, base.total_eur - 1e-9) << x << "|" << y << " on day " << d;
      }
    }
  }
}

TEST(RunStrategy, CycleBudgetIsSharedAcrossStages) {
  const auto day = ymd(2025, 7, 2);
  auto data = generate_synthetic_day(small_synth(), day);
  for (const char* id : {"DA|ID_AUCT|ID_ROLL", "ID_AUCT|ID_ROLL"}) {
    auto r = run_strategy(StrategySpec::parse(id, k2h), day, data);
    EXPECT_LE(r.cycles_used, k2h.max_daily_cycles + 1e-6) << id;
  }
}

TEST(RunStrategy, MissingInputsSkipTheDay) {
  const auto day = ymd(2025, 7, 2);
  auto data = generate_synthetic_day(small_synth(), day);
  data.series.erase("IDA1");
  auto r = run_strategy(StrategySpec::parse("DA|ID_AUCT", k2h), day, data);
  EXPECT_EQ(r.status, "skipped");
  EXPECT_EQ(r.note, "missing series IDA1");
  EXPECT_EQ(r.total_eur, 0.0);
  data.ticks_by_duration.erase(15);
  EXPECT_EQ(run_strategy(StrategySpec::parse("ID_ROLL", k2h), day, data).status, "skipped");
  data.series.at("DA").values[3] = std::nan("");
  EXPECT_EQ(run_strategy(StrategySpec::parse("DA", k2h), day, data).note, "incomplete series DA");
}

TEST(RunStrategy, IndexStagesAreBenchmarks) {
  const auto day = ymd(2025, 7, 2);
  auto data = generate_synthetic_day(small_synth(), day);
  for (const char* id : {"ID1", "ID3", "IDFULL", "ID_AEP"}) {
    auto r = run_strategy(StrategySpec::parse(id, k2h), day, data);
    EXPECT_EQ(r.status, "ok") << id;
    EXPECT_FALSE(r.tradable) << id;
    EXPECT_GE(r.total_eur, 0.0) << id;
  }
}

TEST(RunStrategy, ForecastStageSettlesAtRealizedPrices) {
  const auto day = ymd(2025, 7, 2);
  auto data = generate_synthetic_day(small_synth(), day);
  // A forecast equal to the realized prices reproduces the plain auction.
  data.series["DA_COPY"] = data.series.at("DA");
  auto plain = run_strategy(StrategySpec::parse("DA", k2h), day, data);
  auto same = run_strategy(StrategySpec::parse("DA~DA_COPY", k2h), day, data);
  EXPECT_NEAR(same.total_eur, plain.total_eur, 1e-6);
  // An inverted forecast trades the wrong way round and loses at DA prices.
  auto& f = data.series["DA_BAD"] = data.series.at("DA");
  for (auto& v : f.values) v = -v;
  auto bad = run_strategy(StrategySpec::parse("DA~DA_BAD", k2h), day, data);
  EXPECT_LT(bad.total_eur, 0.0);
  // Perfect foresight is an upper bound for any forecast.
  EXPECT_LE(bad.total_eur, plain.total_eur);
}

TEST(RunStrategy, Deterministic) {
  const auto day = ymd(2025, 7, 2);
  auto data = generate_synthetic_day(small_synth(), day);
  auto spec = StrategySpec::parse("DA|ID_AUCT|ID_ROLL", k2h);
  auto a = run_strategy(spec, day, data), b = run_strategy(spec, day, data);
  EXPECT_EQ(a.total_eur, b.total_eur);
  EXPECT_EQ(a.stage_eur, b.stage_eur);
  EXPECT_EQ(a.net_mw, b.net_mw);
}

TEST(Backtest, RowsPerDayAndStrategyInOrder) {
  std::vector<StrategySpec> specs{StrategySpec::parse("DA", k2h, "2h"), StrategySpec::parse("DA|ID_ROLL", k2h, "2h")};
  auto dates = date_range(ymd(2025, 2, 27), ymd(2025, 3, 1));
  ASSERT_EQ(dates.size(), 3u);
  auto ledger = backtest(specs, dates, synthetic_provider(small_synth()));
  ASSERT_EQ(ledger.size(), 6u);
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    EXPECT_EQ(ledger[k].date, dates[k / 2]);
    EXPECT_EQ(ledger[k].strategy_id, specs[k % 2].id());
    EXPECT_TRUE(ledger[k].net_mw.empty());
  }
}

TEST(Backtest, WorkerCountDoesNotChangeResults) {
  std::vector<StrategySpec> specs{StrategySpec::parse("ID_AUCT|ID_ROLL", k2h, "2h")};
  auto dates = date_range(ymd(2025, 5, 1), ymd(2025, 5, 5));
  BacktestOptions one, three;
  three.jobs = 3;
  auto a = backtest(specs, dates, synthetic_provider(small_synth()), one);
  auto b = backtest(specs, dates, synthetic_provider(small_synth()), three);
  std::ostringstream sa, sb;
  write_ledger_csv(sa, a);
  write_ledger_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Backtest, MissingDaysAreLoggedNotFatal) {
  DataStore store;
  store.put_day(ymd(2025, 5, 1), generate_synthetic_day(small_synth(), ymd(2025, 5, 1)));
  std::vector<StrategySpec> specs{StrategySpec::parse("DA", k2h, "2h")};
  auto ledger = backtest(specs, date_range(ymd(2025, 5, 1), ymd(2025, 5, 2)), store_provider(store));
  ASSERT_EQ(ledger.size(), 2u);
  EXPECT_EQ(ledger[0].status, "ok");
  EXPECT_EQ(ledger[1].status, "skipped");
  EXPECT_EQ(ledger[1].note, "no data for day");
}

TEST(Ledger, CsvRoundTrip) {
  std::vector<StrategySpec> specs{StrategySpec::parse("DA|ID_AUCT", k2h, "2h"),
                                  StrategySpec::parse("ID1", battery_preset("1h"), "1h")};
  BacktestOptions opt;
  opt.keep_dispatch = true;
  auto ledger = backtest(specs, date_range(ymd(2025, 5, 1), ymd(2025, 5, 2)), synthetic_provider(small_synth()), opt);
  auto dir = scratch_dir("ledger");
  {
    std::ofstream l(dir / "ledger.csv"), d(dir / "dispatch.csv");
    write_ledger_csv(l, ledger);
    write_dispatch_csv(d, ledger);
  }
  auto back = read_ledger_csv((dir / "ledger.csv").string(), (dir / "dispatch.csv").string());
  ASSERT_EQ(back.size(), ledger.size());
  std::ostringstream a, b, da, db;
  write_ledger_csv(a, ledger);
  write_ledger_csv(b, back);
  write_dispatch_csv(da, ledger);
  write_dispatch_csv(db, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(da.str(), db.str());
  EXPECT_FALSE(back[1].tradable);
  EXPECT_EQ(back[0].stage_eur.size(), 2u);
}

TEST(Ledger, BadFilesAreSchemaErrors) {
  auto dir = scratch_dir("ledger_bad");
  write_file(dir / "a.csv", "date,strategy\n");
  EXPECT_THROW(read_ledger_csv((dir / "a.csv").string()), SchemaError);
  write_file(dir / "b.csv", std::string(kLedgerHeader) + "\n2025-05-01,DA,2h,abc,1,1,0,1,ok,\n");
  EXPECT_THROW(read_ledger_csv((dir / "b.csv").string()), SchemaError);
}
