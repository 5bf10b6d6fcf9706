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

#include <bessarb/report.hpp>

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace bessarb;
using namespace bessarb::testing;

namespace {

DayRecord row(Date d, double profit, std::string strategy = "DA", std::string battery = "2h") {
  DayRecord r;
  r.date = d;
  r.strategy_id = std::move(strategy);
  r.battery_id = std::move(battery);
  r.total_eur = profit;
  r.stage_eur = {profit};
  r.stage_traded_mwh = {0};
  return r;
}

std::vector<std::pair<Date, double>> dated(std::vector<double> v) {
  std::vector<std::pair<Date, double>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(ymd(2025, 1, unsigned(i + 1)), v[i]);
  return out;
}

}  // namespace

TEST(Summarize, SingleRow) {
  auto rows = summarize({row(ymd(2025, 1, 1), 100)});
  ASSERT_EQ(rows.size(), 1u);
  const auto& s = rows[0].stats;
  EXPECT_EQ(s.mean, 100);
  EXPECT_EQ(s.median, 100);
  EXPECT_EQ(s.min, 100);
  EXPECT_EQ(s.max, 100);
  EXPECT_EQ(s.std, 0);
  EXPECT_FALSE(s.std_defined);
  std::ostringstream t;
  write_summary_text(t, rows);
  EXPECT_NE(t.str().find("std undefined"), std::string::npos);
}

TEST(Summarize, ThreeRows) {
  auto rows = summarize({row(ymd(2025, 1, 3), 300), row(ymd(2025, 1, 1), 100), row(ymd(2025, 1, 2), 200)});
  const auto& s = rows.at(0).stats;
  EXPECT_EQ(s.n, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 200);
  EXPECT_DOUBLE_EQ(s.median, 200);
  EXPECT_DOUBLE_EQ(s.std, 100);
  EXPECT_EQ(s.min, 100);
  EXPECT_EQ(s.max, 300);
  EXPECT_TRUE(s.std_defined);
}

TEST(Summarize, GroupsAndSkipsAndEmptyMarker) {
  auto skipped = row(ymd(2025, 1, 2), 999);
  skipped.status = "skipped";
  auto rows = summarize({row(ymd(2025, 1, 1), 10), skipped, row(ymd(2025, 1, 1), 20, "DA", "1h"),
                         row(ymd(2025, 1, 1), 30, "ID_ROLL")});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].stats.n, 1u);
  std::ostringstream csv, txt;
  write_summary_csv(csv, {});
  write_summary_text(txt, {});
  EXPECT_EQ(csv.str(), "# empty ledger\n");
  EXPECT_EQ(txt.str(), "(empty ledger)\n");
}

TEST(Summarize, TextTableColumns) {
  std::ostringstream t;
  write_summary_text(t, summarize({row(ymd(2025, 1, 1), 10), row(ymd(2025, 1, 2), 30)}));
  const auto header = t.str().substr(0, t.str().find('\n'));
  std::size_t at = 0;
  for (const char* col : {"bidding strategy", "mean", "median", "std", "min", "max"}) {
    auto p = header.find(col, at);
    ASSERT_NE(p, std::string::npos) << col;
    at = p + 1;
  }
}

TEST(Summarize, DisjointLedgersMergeByWeightedMean) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-50, 500);
  for (int trial = 0; trial < 20; ++trial) {
    Ledger a, b;
    const unsigned na = 1 + rng() % 20, nb = 1 + rng() % 20;
    for (unsigned i = 0; i < na; ++i) a.push_back(row(ymd(2024, 1, 1 + i), u(rng)));
    for (unsigned i = 0; i < nb; ++i) b.push_back(row(ymd(2024, 3, 1 + i), u(rng)));
    Ledger ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double ma = summarize(a)[0].stats.mean, mb = summarize(b)[0].stats.mean;
    EXPECT_NEAR(summarize(ab)[0].stats.mean, (na * ma + nb * mb) / (na + nb), 1e-9);
  }
}

TEST(ProfitSeries, MovingAverageAndCumulative) {
  auto p = profit_series(dated({10, 20, 30, 40}), 2);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_DOUBLE_EQ(p[0].moving_average, 10);
  EXPECT_DOUBLE_EQ(p[1].moving_average, 15);
  EXPECT_DOUBLE_EQ(p[3].moving_average, 35);
  EXPECT_DOUBLE_EQ(p[3].cumulative, 100);
  EXPECT_THROW(ReportSpec{0}.validate(), InputError);
}

TEST(Suspension, HandExample) {
  auto rows = suspension_analysis(dated({10, 20, 30, 40}), dated({5, 1, 2, 50}), {25});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].days_moved, 1u);
  EXPECT_EQ(rows[0].profits, (std::vector<double>{0, 20, 30, 90}));
  EXPECT_EQ(rows[0].stats.mean, 35);
  EXPECT_TRUE(rows[0].note.empty());
}

TEST(Suspension, ZeroShareIsIdentityAndMinIsZeroOtherwise) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(1, 600), inc(0, 200);
  std::vector<double> base(40), incs(40);
  for (auto& v : base) v = u(rng);
  for (auto& v : incs) v = inc(rng);
  auto rows = suspension_analysis(dated(base), dated(incs), {0, 5, 10, 15, 20, 25});
  auto ref = compute_stats(base);
  EXPECT_EQ(rows[0].profits, base);
  EXPECT_EQ(rows[0].stats.mean, ref.mean);
  EXPECT_EQ(rows[0].stats.std, ref.std);
  EXPECT_EQ(rows[0].stats.min, ref.min);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].stats.min, 0.0) << rows[k].share_percent;
    EXPECT_EQ(rows[k].stats.max, std::max(rows[k].stats.max, ref.max));
  }
  EXPECT_EQ(rows[5].days_moved, 10u);
}

TEST(Suspension, FractionalShareRoundsDownWithNote) {
  auto rows = suspension_analysis(dated({1, 2, 3, 4, 5, 6, 7}), dated({0, 0, 0, 0, 0, 0, 0}), {25});
  EXPECT_EQ(rows[0].days_moved, 1u);
  EXPECT_FALSE(rows[0].note.empty());
  EXPECT_THROW(suspension_analysis(dated({1, 2}), dated({1}), {0}), StructuralError);
  EXPECT_THROW(suspension_analysis(dated({1}), dated({1}), {101}), InputError);
}

TEST(Suspension, TiesBreakByDate) {
  auto rows = suspension_analysis(dated({5, 5, 5, 5}), dated({1, 1, 1, 1}), {50});
  EXPECT_EQ(rows[0].profits, (std::vector<double>{0, 0, 6, 6}));
}

TEST(CycleSensitivity, FlatProfitsGiveZeroIncrements) {
  std::map<int, std::vector<std::pair<Date, double>>> by;
  for (int k = 1; k <= 4; ++k) by[k] = dated({0, 0, 0});
  auto cs = cycle_sensitivity(by);
  ASSERT_EQ(cs.by_cycles.size(), 4u);
  for (int k = 2; k <= 4; ++k) {
    EXPECT_EQ(cs.mean_increment.at(k), 0.0);
    for (auto& [d, v] : cs.increments.at(k)) EXPECT_EQ(v, 0.0);
  }
}

TEST(CycleSensitivity, IncrementsAndCoverage) {
  std::map<int, std::vector<std::pair<Date, double>>> by{{1, dated({10, 20})}, {2, dated({15, 40})}};
  auto cs = cycle_sensitivity(by);
  EXPECT_EQ(cs.mean_increment.at(2), 12.5);
  by[3] = dated({50});
  try {
    cycle_sensitivity(by);
    FAIL() << "expected an error";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("3c:2025-01-02"), std::string::npos) << e.what();
  }
}

TEST(CycleSensitivity, SplitsLedgerByBatteryId) {
  Ledger l{row(ymd(2025, 1, 1), 10, "X", "2h"), row(ymd(2025, 1, 1), 14, "X", "2h-c2"),
           row(ymd(2025, 1, 1), 99, "Y", "2h-c2"), row(ymd(2025, 1, 1), 15, "X", "2h-c3"),
           row(ymd(2025, 1, 1), 0, "X", "1h")};
  auto by = profits_by_cycles(l, "X", "2h");
  ASSERT_EQ(by.size(), 3u);
  EXPECT_EQ(by.at(2)[0].second, 14);
  EXPECT_EQ(by.at(3)[0].second, 15);
}

TEST(Liquidity, SingleTick) {
  TradeTick t{{ts("2025-01-01T10:00:00Z"), 15}, ts("2025-01-01T09:00:00Z"), 50, 1};
  auto s = liquidity_stats({t});
  ASSERT_EQ(s.by_duration.size(), 1u);
  EXPECT_EQ(s.by_duration[0].duration_minutes, 15);
  EXPECT_EQ(s.by_duration[0].volume_share, 1.0);
  EXPECT_TRUE(liquidity_stats({}).empty());
}

TEST(Liquidity, CumulatesFromFarToNear) {
  TradeTick far{{ts("2025-01-01T20:00:00Z"), 15}, ts("2025-01-01T10:00:00Z"), 50, 1};
  TradeTick near{{ts("2025-01-01T20:00:00Z"), 15}, ts("2025-01-01T19:00:00Z"), 50, 3};
  auto s = liquidity_stats({near, far});
  auto at = [&](double h) {
    for (const auto& b : s.bins)
      if (b.hours_to_delivery == h) return b;
    ADD_FAILURE() << "no bin " << h;
    return LiquidityBin{};
  };
  EXPECT_EQ(at(10).cumulative_volume_mw, 1.0);
  EXPECT_EQ(at(1).cumulative_volume_mw, 4.0);
  EXPECT_EQ(at(5).cumulative_volume_mw, 1.0);
  EXPECT_EQ(s.bins.front().hours_to_delivery, 10.0);
  EXPECT_EQ(s.bins.back().hours_to_delivery, 0.0);
}

TEST(Liquidity, SyntheticCountCurveIsConvexTowardDelivery) {
  // Cumulative trades against time-to-delivery, hourly resolution, averaged
  // over seeds: the per-hour increments grow as delivery approaches.
  std::vector<double> per_hour(8, 0.0);
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig cfg;
    cfg.rng_seed = seed;
    cfg.tick_intensity = 100;
    auto d = generate_synthetic_day(cfg, ymd(2025, 4, 10));
    auto s = liquidity_stats(d.ticks(15));
    for (const auto& b : s.bins)
      if (b.hours_to_delivery < 8) per_hour[std::size_t(b.hours_to_delivery)] += double(b.trades);
  }
  for (std::size_t h = 1; h < per_hour.size(); ++h) EXPECT_GT(per_hour[h - 1], per_hour[h]) << "hour " << h;
}

TEST(DispatchProfiles, MeansAndSeasons) {
  auto a = row(ymd(2025, 5, 1), 0);
  a.net_mw.assign(96, 0.0);
  a.net_mw[0] = -1;
  auto profiles = dispatch_profiles({a});
  ASSERT_EQ(profiles.size(), 1u);
  EXPECT_EQ(profiles[0].season, 1);
  EXPECT_EQ(profiles[0].mean_net_mw[0], -1.0);
  auto b = row(ymd(2025, 5, 2), 0);
  b.net_mw.assign(96, 0.0);
  b.net_mw[0] = 1;
  EXPECT_EQ(dispatch_profiles({a, b})[0].mean_net_mw[0], 0.0);
  EXPECT_EQ(season_of(ymd(2024, 10, 1)), 2);
  EXPECT_EQ(season_of(ymd(2024, 9, 30)), 1);
  EXPECT_EQ(season_of(ymd(2025, 3, 31)), 2);
  EXPECT_THROW(dispatch_profiles({row(ymd(2025, 5, 1), 0)}), Error);
}

TEST(Reports, BundleAndManifest) {
  Ledger l;
  for (unsigned d = 1; d <= 8; ++d)
    for (int k = 1; k <= 2; ++k) {
      auto r = row(ymd(2025, 6, d), 10.0 * d + (k - 1) * d, "ID_ROLL", k == 1 ? "2h" : "2h-c2");
      r.net_mw.assign(96, 0.0);
      l.push_back(r);
    }
  auto dir = scratch_dir("bundle");
  auto m = write_reports(l, dir, ReportSpec{});
  for (const auto& f : m["files"]) EXPECT_TRUE(std::filesystem::exists(dir / f["file"].get<std::string>())) << f;
  EXPECT_TRUE(std::filesystem::exists(dir / "cycle_sensitivity_1.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "suspension_1.csv"));
  EXPECT_FALSE(m["empty"].get<bool>());
  auto dir2 = scratch_dir("bundle2");
  write_reports(l, dir2, ReportSpec{});
  for (const auto& f : m["files"]) {
    auto name = f["file"].get<std::string>();
    EXPECT_EQ(read_file(dir / name), read_file(dir2 / name)) << name;
  }
}
