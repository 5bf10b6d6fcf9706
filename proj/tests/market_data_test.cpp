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

#include <bessarb/market_data.hpp>
#include <bessarb/quotes.hpp>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace bessarb;
using namespace bessarb::testing;

namespace {

const char* kHeader = "delivery_start_iso8601,duration_min,execution_time_iso8601,price_eur_mwh,volume_mw\n";

}  // namespace

TEST(IngestTicks, HeaderOnlyLoadsNothing) {
  auto dir = scratch_dir("ingest_empty");
  write_file(dir / "t.csv", kHeader);
  DataStore s;
  auto rep = s.ingest_ticks((dir / "t.csv").string());
  EXPECT_EQ(rep.loaded, 0u);
  EXPECT_TRUE(rep.rejects.empty());
}

TEST(IngestTicks, RejectsZeroVolumeWithLineNumber) {
  auto dir = scratch_dir("ingest_zero");
  write_file(dir / "t.csv", std::string(kHeader) +
                                "2025-02-03T10:00:00Z,15,2025-02-03T09:00:00Z,50.0,1.0\n"
                                "2025-02-03T10:00:00Z,15,2025-02-03T09:01:00Z,51.0,0\n");
  DataStore s;
  auto rep = s.ingest_ticks((dir / "t.csv").string());
  EXPECT_EQ(rep.loaded, 1u);
  ASSERT_EQ(rep.rejects.size(), 1u);
  EXPECT_EQ(rep.rejects[0].line, 3u);
  EXPECT_EQ(rep.rejects[0].reason, "non-positive volume");
}

TEST(IngestTicks, SortsByExecutionTime) {
  auto dir = scratch_dir("ingest_sort");
  write_file(dir / "t.csv", std::string(kHeader) +
                                "2025-02-03T10:00:00Z,15,2025-02-03T09:30:00Z,52.0,1.0\n"
                                "2025-02-03T10:15:00Z,15,2025-02-03T08:00:00Z,50.0,2.0\n"
                                "2025-02-03T11:00:00+01:00,15,2025-02-03T09:10:00Z,51.0,0.5\n");
  DataStore s;
  EXPECT_EQ(s.ingest_ticks((dir / "t.csv").string()).loaded, 3u);
  const auto& t = s.day(ymd(2025, 2, 3))->ticks(15);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].price_eur_mwh, 50.0);
  EXPECT_EQ(t[1].price_eur_mwh, 51.0);
  EXPECT_EQ(t[2].price_eur_mwh, 52.0);
  EXPECT_EQ(t[1].product.delivery_start, ts("2025-02-03T10:00:00Z"));
}

TEST(IngestTicks, RejectsInvalidRows) {
  auto dir = scratch_dir("ingest_bad");
  write_file(dir / "t.csv", std::string(kHeader) +
                                "2025-02-03T10:00:00Z,15,2025-02-03T10:00:00Z,50,1\n"  // at delivery
                                "2025-02-03T10:00:00,15,2025-02-03T09:00:00Z,50,1\n"   // no zone
                                "2025-02-03T10:00:00Z,20,2025-02-03T09:00:00Z,50,1\n"  // duration
                                "2025-02-03T10:05:00Z,15,2025-02-03T09:00:00Z,50,1\n"  // misaligned
                                "2025-02-03T10:00:00Z,15,2025-02-03T09:00:00Z,abc,1\n"
                                "2025-02-03T10:00:00Z,15,2025-02-03T09:00:00Z\n"
                                "2025-02-03T10:00:00Z,30,2025-02-03T09:00:00Z,50,1\n");  // half hour is fine
  DataStore s;
  auto rep = s.ingest_ticks((dir / "t.csv").string());
  EXPECT_EQ(rep.loaded, 1u);
  ASSERT_EQ(rep.rejects.size(), 6u);
  EXPECT_EQ(rep.rejects[0].reason, "execution not before delivery start");
  EXPECT_EQ(rep.rejects[0].line, 2u);
  EXPECT_EQ(rep.rejects[5].line, 7u);
  EXPECT_EQ(s.day(ymd(2025, 2, 3))->ticks(30).size(), 1u);
}

TEST(IngestTicks, MissingFileAndBadHeader) {
  DataStore s;
  EXPECT_THROW(s.ingest_ticks("/nonexistent/ticks.csv"), Error);
  auto dir = scratch_dir("ingest_header");
  write_file(dir / "t.csv", "start,dur,exec,price,vol\n");
  EXPECT_THROW(s.ingest_ticks((dir / "t.csv").string()), SchemaError);
}

TEST(IngestTicks, ReloadingReplacesTheDay) {
  auto dir = scratch_dir("ingest_twice");
  write_file(dir / "t.csv", std::string(kHeader) + "2025-02-03T10:00:00Z,15,2025-02-03T09:00:00Z,50,1\n" +
                                "2025-02-03T10:15:00Z,15,2025-02-03T09:00:00Z,50,1\n");
  DataStore s;
  s.ingest_ticks((dir / "t.csv").string());
  s.ingest_ticks((dir / "t.csv").string());
  EXPECT_EQ(s.day(ymd(2025, 2, 3))->ticks(15).size(), 2u);
}

TEST(IngestSeries, InfersResolutionAndPlacesValues) {
  auto dir = scratch_dir("series");
  std::string da = "delivery_start_iso8601,price_eur_mwh\n";
  for (int h = 0; h < 24; ++h) da += "2025-02-03T" + std::string(h < 10 ? "0" : "") + std::to_string(h) + ":00:00Z," +
                                     std::to_string(40 + h) + "\n";
  write_file(dir / "DA.csv", da);
  write_file(dir / "IDA1.csv",
             "delivery_start_iso8601,price_eur_mwh\n2025-02-03T00:15:00Z,12.5\n2025-02-03T00:07:00Z,1\n");
  DataStore s;
  EXPECT_EQ(s.ingest_series((dir / "DA.csv").string(), "DA").loaded, 24u);
  auto rep = s.ingest_series((dir / "IDA1.csv").string(), "IDA1");
  EXPECT_EQ(rep.loaded, 1u);
  EXPECT_EQ(rep.rejects.size(), 1u);
  const auto* day = s.day(ymd(2025, 2, 3));
  ASSERT_NE(day, nullptr);
  EXPECT_EQ(day->series.at("DA").step_minutes, 60);
  EXPECT_TRUE(day->series.at("DA").complete());
  EXPECT_EQ(day->series.at("DA").values[5], 45.0);
  EXPECT_EQ(day->series.at("IDA1").step_minutes, 15);
  EXPECT_EQ(day->series.at("IDA1").values[1], 12.5);
  EXPECT_FALSE(day->series.at("IDA1").complete());
}

TEST(DataStore, SaveLoadRoundTrip) {
  SynthConfig cfg;
  cfg.tick_intensity = 20;
  DataStore a;
  a.put_day(ymd(2025, 2, 3), generate_synthetic_day(cfg, ymd(2025, 2, 3)));
  auto dir = scratch_dir("roundtrip");
  a.save(dir);
  DataStore b;
  auto reports = b.load(dir);
  for (auto& [f, r] : reports) EXPECT_TRUE(r.rejects.empty()) << f;
  const auto *x = a.day(ymd(2025, 2, 3)), *y = b.day(ymd(2025, 2, 3));
  ASSERT_NE(y, nullptr);
  EXPECT_EQ(x->ticks(15), y->ticks(15));
  EXPECT_EQ(x->ticks(60), y->ticks(60));
  for (const auto& [name, s] : x->series) EXPECT_EQ(s.values, y->series.at(name).values) << name;
  // Saving what was loaded gives the same bytes.
  auto dir2 = scratch_dir("roundtrip2");
  b.save(dir2);
  EXPECT_EQ(read_file(dir / "ticks.csv"), read_file(dir2 / "ticks.csv"));
  EXPECT_EQ(read_file(dir / "DA.csv"), read_file(dir2 / "DA.csv"));
}

TEST(Synthetic, SameSeedSameBytes) {
  SynthConfig cfg;
  cfg.tick_intensity = 50;
  auto d1 = scratch_dir("seed_a"), d2 = scratch_dir("seed_b");
  for (const auto& dir : {d1, d2}) {
    DataStore s;
    for (unsigned k = 1; k <= 2; ++k) s.put_day(ymd(2025, 6, k), generate_synthetic_day(cfg, ymd(2025, 6, k)));
    s.save(dir);
  }
  EXPECT_EQ(read_file(d1 / "ticks.csv"), read_file(d2 / "ticks.csv"));
  EXPECT_EQ(read_file(d1 / "IDA1.csv"), read_file(d2 / "IDA1.csv"));
  cfg.rng_seed = 43;
  EXPECT_NE(generate_synthetic_day(cfg, ymd(2025, 6, 1)).ticks(15),
            generate_synthetic_day(SynthConfig{.tick_intensity = 50}, ymd(2025, 6, 1)).ticks(15));
}

TEST(Synthetic, ZeroIntensityMeansNoTicks) {
  SynthConfig cfg;
  cfg.tick_intensity = 0;
  auto d = generate_synthetic_day(cfg, ymd(2025, 6, 1));
  EXPECT_TRUE(d.ticks(15).empty());
  EXPECT_TRUE(d.ticks(60).empty());
  for (const auto& q : build_quotes(d.ticks(15), DeliveryGrid::make(ymd(2025, 6, 1), 15), QuoteConfig{}))
    for (std::size_t i = 0; i < 96; ++i) {
      EXPECT_EQ(q.prices.bid[i], -4000.0);
      EXPECT_EQ(q.prices.ask[i], 4000.0);
    }
}

TEST(Synthetic, FlatConfigGivesFlatPrices) {
  auto cfg = SynthConfig::flat();
  cfg.tick_intensity = 30;
  auto d = generate_synthetic_day(cfg, ymd(2025, 6, 1));
  for (const auto& [name, s] : d.series) {
    EXPECT_TRUE(s.complete()) << name;
    for (double v : s.values) EXPECT_EQ(v, cfg.base_price_eur) << name;
  }
  for (const auto& t : d.ticks(15)) EXPECT_EQ(t.price_eur_mwh, cfg.base_price_eur);
}

TEST(Synthetic, SeriesShapesAndTickTiming) {
  SynthConfig cfg;
  cfg.tick_intensity = 100;
  const auto day = ymd(2025, 6, 1);
  auto d = generate_synthetic_day(cfg, day);
  EXPECT_EQ(d.series.at("DA").values.size(), 24u);
  EXPECT_EQ(d.series.at("DA").step_minutes, 60);
  for (const char* q : {"IDA1", "ID1", "ID3", "IDFULL", "ID_AEP"}) EXPECT_EQ(d.series.at(q).values.size(), 96u) << q;
  const Timestamp gate = DeliveryGrid::make(day, 15).start() - minutes{cfg.gate_open_minutes_before};
  for (int dur : {15, 60}) {
    const auto& ticks = d.ticks(dur);
    EXPECT_FALSE(ticks.empty());
    for (std::size_t k = 0; k < ticks.size(); ++k) {
      EXPECT_LT(ticks[k].execution_time, ticks[k].product.delivery_start);
      EXPECT_GT(ticks[k].execution_time, gate);
      EXPECT_GT(ticks[k].volume_mw, 0.0);
      if (k) {
        EXPECT_LE(ticks[k - 1].execution_time, ticks[k].execution_time);
      }
    }
  }
}

TEST(Synthetic, ActivityRisesTowardDelivery) {
  // Trades per hour of time-to-delivery, pooled over products and days.
  SynthConfig cfg;
  cfg.tick_intensity = 100;
  std::vector<double> per_hour(8, 0.0);
  for (unsigned k = 1; k <= 3; ++k) {
    auto d = generate_synthetic_day(cfg, ymd(2025, 6, k));
    for (const auto& t : d.ticks(15)) {
      const auto h = std::chrono::duration_cast<std::chrono::hours>(t.product.delivery_start - t.execution_time).count();
      if (h < 8) per_hour[std::size_t(h)] += 1;
    }
  }
  for (std::size_t h = 1; h < per_hour.size(); ++h) EXPECT_LT(per_hour[h], per_hour[h - 1]) << "hour " << h;
}

TEST(SynthConfig, JsonRoundTripAndValidation) {
  SynthConfig c;
  c.rng_seed = 7;
  c.price_noise_sd = 3.5;
  nlohmann::json j = c;
  auto back = j.get<SynthConfig>();
  EXPECT_EQ(back.rng_seed, 7u);
  EXPECT_EQ(back.price_noise_sd, 3.5);
  EXPECT_EQ(nlohmann::json(back), j);
  c.spread_drift = -1;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_THROW(generate_synthetic_day(c, ymd(2025, 6, 1)), InputError);
}
