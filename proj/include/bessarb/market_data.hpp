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

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace bessarb {

/// Input file does not follow the expected CSV schema (header mismatch).
class SchemaError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kTickHeader[] = {"delivery_start_iso8601", "duration_min", "execution_time_iso8601",
                                              "price_eur_mwh", "volume_mw"};
inline constexpr const char* kSeriesHeader[] = {"delivery_start_iso8601", "price_eur_mwh"};

/// One price per delivery period; NaN marks a missing period.
struct PriceSeries {
  int step_minutes = 15;
  std::vector<double> values;

  bool complete() const {
    return !values.empty() && std::none_of(values.begin(), values.end(), [](double v) { return std::isnan(v); });
  }
};

struct DayData {
  std::map<std::string, PriceSeries> series;                // DA, IDA1, ID1, ID3, IDFULL, ID_AEP, ...
  std::map<int, std::vector<TradeTick>> ticks_by_duration;  // minutes -> ticks sorted by execution time

  const std::vector<TradeTick>& ticks(int duration_minutes) const {
    static const std::vector<TradeTick> empty;
    auto it = ticks_by_duration.find(duration_minutes);
    return it == ticks_by_duration.end() ? empty : it->second;
  }
};

inline bool tick_order(const TradeTick& a, const TradeTick& b) {
  if (a.execution_time != b.execution_time) return a.execution_time < b.execution_time;
  if (a.product.delivery_start != b.product.delivery_start) return a.product.delivery_start < b.product.delivery_start;
  if (a.product.duration_minutes != b.product.duration_minutes)
    return a.product.duration_minutes < b.product.duration_minutes;
  if (a.price_eur_mwh != b.price_eur_mwh) return a.price_eur_mwh < b.price_eur_mwh;
  return a.volume_mw < b.volume_mw;
}

struct Reject {
  std::size_t line;
  std::string reason;
};

struct IngestReport {
  std::size_t loaded = 0;
  std::vector<Reject> rejects;
  std::set<std::string> days;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["loaded"] = loaded;
    j["rejected"] = rejects.size();
    j["days"] = std::vector<std::string>(days.begin(), days.end());
    auto& r = j["rejects"] = nlohmann::json::array();
    for (const auto& x : rejects) r.push_back({{"line", x.line}, {"reason", x.reason}});
    return j;
  }
};

/// Market data indexed by delivery day. Each ingestion replaces the days it
/// touches, so re-loading a file is idempotent.
class DataStore {
 public:
  explicit DataStore(int utc_offset_minutes = 0) : utc_offset_minutes_(utc_offset_minutes) {}

  int utc_offset_minutes() const { return utc_offset_minutes_; }
  const std::map<Date, DayData>& days() const { return days_; }
  const DayData* day(Date d) const {
    auto it = days_.find(d);
    return it == days_.end() ? nullptr : &it->second;
  }
  DayData& day_mut(Date d) { return days_[d]; }
  void put_day(Date d, DayData data) { days_[d] = std::move(data); }

  /// Delivery day a timestamp belongs to, in market-local terms.
  Date delivery_day(Timestamp t) const { return date_of(t + minutes{utc_offset_minutes_}); }

  /// Loads a tick CSV. Malformed or invalid rows are rejected with their line
  /// number; the rest are stored sorted by execution time.
  IngestReport ingest_ticks(const std::string& path) {
    auto table = csv::read_file(path);
    check_header(table, kTickHeader, path);
    IngestReport rep;
    std::map<Date, std::map<int, std::vector<TradeTick>>> fresh;
    for (const auto& row : table.rows) {
      auto reject = [&](std::string why) { rep.rejects.push_back({row.line, std::move(why)}); };
      if (row.cells.size() != 5) {
        reject("expected 5 columns, got " + std::to_string(row.cells.size()));
        continue;
      }
      auto start = parse_timestamp(row.cells[0]);
      auto exec = parse_timestamp(row.cells[2]);
      int duration = 0;
      auto price = csv::parse_double(row.cells[3]);
      auto volume = csv::parse_double(row.cells[4]);
      if (!start || !exec) {
        reject("bad or zone-less timestamp");
        continue;
      }
      if (!detail::parse_int(row.cells[1], duration) || (duration != 15 && duration != 30 && duration != 60)) {
        reject("unsupported product duration");
        continue;
      }
      if (!price || !volume || !std::isfinite(*price) || !std::isfinite(*volume)) {
        reject("bad number");
        continue;
      }
      if (*volume <= 0) {
        reject("non-positive volume");
        continue;
      }
      if (!(*exec < *start)) {
        reject("execution not before delivery start");
        continue;
      }
      const Date d = delivery_day(*start);
      const auto offset = *start - (day_start_utc(d) - minutes{utc_offset_minutes_});
      if (offset % std::chrono::milliseconds{minutes{duration}} != std::chrono::milliseconds{0}) {
        reject("delivery start not aligned to product duration");
        continue;
      }
      fresh[d][duration].push_back(TradeTick{Product{*start, duration}, *exec, *price, *volume});
      ++rep.loaded;
    }
    for (auto& [d, by_dur] : fresh) {
      auto& slot = days_[d].ticks_by_duration;
      slot.clear();
      for (auto& [dur, ticks] : by_dur) {
        std::sort(ticks.begin(), ticks.end(), tick_order);
        slot[dur] = std::move(ticks);
      }
      rep.days.insert(format_date(d));
    }
    return rep;
  }

  /// Loads one price series (auction or index). `step_minutes` 0 infers
  /// hourly when every row starts on the hour, else quarter-hourly.
  IngestReport ingest_series(const std::string& path, const std::string& name, int step_minutes = 0) {
    auto table = csv::read_file(path);
    check_header(table, kSeriesHeader, path);
    IngestReport rep;
    struct Parsed {
      std::size_t line;
      Timestamp start;
      double price;
    };
    std::vector<Parsed> rows;
    for (const auto& row : table.rows) {
      if (row.cells.size() != 2) {
        rep.rejects.push_back({row.line, "expected 2 columns, got " + std::to_string(row.cells.size())});
        continue;
      }
      auto start = parse_timestamp(row.cells[0]);
      auto price = csv::parse_double(row.cells[1]);
      if (!start) {
        rep.rejects.push_back({row.line, "bad or zone-less timestamp"});
        continue;
      }
      if (!price || !std::isfinite(*price)) {
        rep.rejects.push_back({row.line, "bad number"});
        continue;
      }
      rows.push_back({row.line, *start, *price});
    }
    if (step_minutes == 0) {
      step_minutes = 60;
      for (const auto& r : rows) {
        const auto local = r.start + minutes{utc_offset_minutes_};
        if ((local - std::chrono::floor<std::chrono::hours>(local)).count() != 0) step_minutes = 15;
      }
    }
    std::map<Date, PriceSeries> fresh;
    for (const auto& r : rows) {
      const Date d = delivery_day(r.start);
      auto grid = DeliveryGrid::make(d, step_minutes, utc_offset_minutes_);
      auto idx = grid.index_of(r.start);
      if (!idx) {
        rep.rejects.push_back({r.line, "delivery start not on the series grid"});
        continue;
      }
      auto& s = fresh[d];
      if (s.values.empty()) {
        s.step_minutes = step_minutes;
        s.values.assign(grid.periods(), std::numeric_limits<double>::quiet_NaN());
      }
      s.values[*idx] = r.price;
      ++rep.loaded;
    }
    for (auto& [d, s] : fresh) {
      days_[d].series[name] = std::move(s);
      rep.days.insert(format_date(d));
    }
    return rep;
  }

  /// Writes ticks.csv and one <NAME>.csv per series into `dir`.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
      std::ofstream os(dir / "ticks.csv");
      os << csv::join({kTickHeader[0], kTickHeader[1], kTickHeader[2], kTickHeader[3], kTickHeader[4]}) << '\n';
      for (const auto& [d, data] : days_)
        for (const auto& [dur, ticks] : data.ticks_by_duration)
          for (const auto& t : ticks)
            os << format_timestamp(t.product.delivery_start) << ',' << dur << ',' << format_timestamp(t.execution_time)
               << ',' << csv::num(t.price_eur_mwh, 2) << ',' << csv::num(t.volume_mw, 1) << '\n';
    }
    std::set<std::string> names;
    for (const auto& [d, data] : days_)
      for (const auto& [name, s] : data.series) names.insert(name);
    for (const auto& name : names) {
      std::ofstream os(dir / (name + ".csv"));
      os << kSeriesHeader[0] << ',' << kSeriesHeader[1] << '\n';
      for (const auto& [d, data] : days_) {
        auto it = data.series.find(name);
        if (it == data.series.end()) continue;
        auto grid = DeliveryGrid::make(d, it->second.step_minutes, utc_offset_minutes_);
        for (std::size_t i = 0; i < it->second.values.size(); ++i) {
          if (std::isnan(it->second.values[i])) continue;
          os << format_timestamp(grid.period_start(i)) << ',' << csv::num(it->second.values[i], 2) << '\n';
        }
      }
    }
  }

  /// Loads a directory written by `save` (or assembled by hand in the same
  /// layout). Returns one report per file.
  std::map<std::string, IngestReport> load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("data directory '" + dir.string() + "' does not exist");
    std::map<std::string, IngestReport> reports;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto stem = f.stem().string();
      reports[f.filename().string()] = stem == "ticks" ? ingest_ticks(f.string()) : ingest_series(f.string(), stem);
    }
    return reports;
  }

 private:
  template <std::size_t N>
  static void check_header(const csv::Table& t, const char* const (&expected)[N], const std::string& path) {
    bool ok = t.header.size() == N;
    for (std::size_t i = 0; ok && i < N; ++i) ok = t.header[i] == expected[i];
    if (!ok) {
      std::string want;
      for (std::size_t i = 0; i < N; ++i) want += (i ? "," : "") + std::string(expected[i]);
      throw SchemaError("'" + path + "': header must be '" + want + "'");
    }
  }

  int utc_offset_minutes_ = 0;
  std::map<Date, DayData> days_;
};

// ---------------------------------------------------------------------------
// Synthetic scenarios
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::uint64_t rng_seed = 42;
  double base_price_eur = 80.0;
  /// Scale of the daily shape (night trough, midday solar dip, evening peak).
  double daily_shape_amplitude = 40.0;
  /// Trades per hour per quarter-hour product 30 min before delivery; the
  /// rate is proportional to 1 / (hours-to-delivery + 0.5).
  double tick_intensity = 1500.0;
  /// Deviation of intraday prices from the day-ahead anchor, and the
  /// stationary spread of the mean-reverting intraday mid price.
  double price_noise_sd = 12.0;
  /// Dispersion of individual trade prices around the mid; this is what
  /// opens the quoted bid/ask spread.
  double spread_drift = 2.0;
  double hourly_intensity_ratio = 0.5;
  int gate_open_minutes_before = 8 * 60;

  void validate() const {
    for (double v : {base_price_eur, daily_shape_amplitude, tick_intensity, price_noise_sd, spread_drift,
                     hourly_intensity_ratio})
      if (!std::isfinite(v)) throw InputError("synth: non-finite parameter");
    if (daily_shape_amplitude < 0 || tick_intensity < 0 || price_noise_sd < 0 || spread_drift < 0 ||
        hourly_intensity_ratio < 0 || gate_open_minutes_before < 0)
      throw InputError("synth: magnitudes must be >= 0");
  }

  /// Flat market: every price equals base_price_eur.
  static SynthConfig flat(std::uint64_t seed = 42) {
    SynthConfig c;
    c.rng_seed = seed;
    c.daily_shape_amplitude = 0;
    c.price_noise_sd = 0;
    c.spread_drift = 0;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"rng_seed", c.rng_seed},
                     {"base_price_eur", c.base_price_eur},
                     {"daily_shape_amplitude", c.daily_shape_amplitude},
                     {"tick_intensity", c.tick_intensity},
                     {"price_noise_sd", c.price_noise_sd},
                     {"spread_drift", c.spread_drift},
                     {"hourly_intensity_ratio", c.hourly_intensity_ratio},
                     {"gate_open_minutes_before", c.gate_open_minutes_before}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.rng_seed = j.value("rng_seed", d.rng_seed);
  c.base_price_eur = j.value("base_price_eur", d.base_price_eur);
  c.daily_shape_amplitude = j.value("daily_shape_amplitude", d.daily_shape_amplitude);
  c.tick_intensity = j.value("tick_intensity", d.tick_intensity);
  c.price_noise_sd = j.value("price_noise_sd", d.price_noise_sd);
  c.spread_drift = j.value("spread_drift", d.spread_drift);
  c.hourly_intensity_ratio = j.value("hourly_intensity_ratio", d.hourly_intensity_ratio);
  c.gate_open_minutes_before = j.value("gate_open_minutes_before", d.gate_open_minutes_before);
}

namespace detail {

/// Daily price shape in [-1, 1]: night trough, midday dip, evening peak.
inline double daily_shape(double hour) {
  constexpr double tau = 2.0 * std::numbers::pi;
  return 0.5 * std::cos(tau * (hour - 19.0) / 24.0) + 0.5 * std::cos(tau * (hour - 7.5) / 12.0);
}

inline double daily_shape_slope(double hour) {
  constexpr double tau = 2.0 * std::numbers::pi;
  return -0.5 * tau / 24.0 * std::sin(tau * (hour - 19.0) / 24.0) - 0.5 * tau / 12.0 * std::sin(tau * (hour - 7.5) / 12.0);
}

/// Rounds to `decimals` places and returns the double nearest to that decimal,
/// so written and re-parsed values compare equal.
inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

/// Trades for one product: arrival times with density ~ 1 / (h + 0.5) in
/// hours-to-delivery h, prices from an Ornstein-Uhlenbeck mid plus dispersion.
template <class Rng>
void synth_product_ticks(Rng& rng, const SynthConfig& cfg, Product product, Timestamp gate, double anchor,
                         double intensity, std::vector<TradeTick>& out) {
  if (intensity <= 0 || product.delivery_start <= gate) return;
  const double horizon_h = std::chrono::duration<double, std::ratio<3600>>(product.delivery_start - gate).count();
  const double mass = intensity * std::log((horizon_h + 0.5) / 0.5);
  const auto count = std::poisson_distribution<long>(mass)(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> ttd(static_cast<std::size_t>(count));
  for (auto& h : ttd) h = 0.5 * std::pow((horizon_h + 0.5) / 0.5, unif(rng)) - 0.5;
  std::sort(ttd.begin(), ttd.end(), std::greater<>());  // far to near

  const double kappa = 0.5;  // mean reversion per hour
  std::normal_distribution<double> z(0.0, 1.0);
  double x = cfg.price_noise_sd * z(rng);
  double prev_h = horizon_h;
  for (double h : ttd) {
    const double decay = std::exp(-kappa * (prev_h - h));
    x = x * decay + cfg.price_noise_sd * std::sqrt(std::max(0.0, 1.0 - decay * decay)) * z(rng);
    prev_h = h;
    const double price = round_to(anchor + x + cfg.spread_drift * z(rng), 2);
    const double volume = std::max(0.1, round_to(std::exp(std::log(1.5) + 0.8 * z(rng)), 1));
    auto ms = std::max<long long>(1, std::llround(h * 3'600'000.0));
    out.push_back(TradeTick{product, product.delivery_start - std::chrono::milliseconds{ms}, price, volume});
  }
}

inline double vwap(const std::vector<TradeTick>& ticks, Timestamp delivery, double window_hours, double fallback) {
  double pv = 0, v = 0;
  const auto limit = std::chrono::milliseconds{std::llround(window_hours * 3'600'000.0)};
  for (const auto& t : ticks) {
    if (window_hours > 0 && delivery - t.execution_time > limit) continue;
    pv += t.price_eur_mwh * t.volume_mw;
    v += t.volume_mw;
  }
  return v > 0 ? round_to(pv / v, 2) : fallback;
}

}  // namespace detail

/// Generates one delivery day: DA hourly prices, IDA1 and index quarter-hour
/// series, and trade streams for quarter-hour and hourly products.
/// Deterministic in (rng_seed, day).
inline DayData generate_synthetic_day(const SynthConfig& cfg, Date day, int utc_offset_minutes = 0) {
  cfg.validate();
  const auto day_number = static_cast<std::uint64_t>(std::chrono::sys_days{day}.time_since_epoch().count());
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                    static_cast<std::uint32_t>(day_number), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const auto qgrid = DeliveryGrid::make(day, 15, utc_offset_minutes);
  const auto hgrid = DeliveryGrid::make(day, 60, utc_offset_minutes);
  const double amp = cfg.daily_shape_amplitude * (0.5 + unif(rng));
  const double level = cfg.base_price_eur + cfg.price_noise_sd * z(rng);

  // Quarter-hour anchors: shape at the quarter midpoint plus an intra-hour
  // ramp that follows the direction of the daily shape.
  std::vector<double> q_anchor(96), id_anchor(96);
  for (std::size_t i = 0; i < 96; ++i) {
    const double hour = (double(i) + 0.5) / 4.0;
    const double k = double(i % 4) - 1.5;
    const double ramp = detail::daily_shape_slope(hour) >= 0 ? 1.0 : -1.0;
    q_anchor[i] = level + amp * detail::daily_shape(hour) + 0.15 * amp * ramp * k / 1.5;
  }
  DayData data;
  PriceSeries da{60, std::vector<double>(24)};
  for (std::size_t h = 0; h < 24; ++h) {
    const double mean = (q_anchor[4 * h] + q_anchor[4 * h + 1] + q_anchor[4 * h + 2] + q_anchor[4 * h + 3]) / 4.0;
    da.values[h] = detail::round_to(mean + 0.5 * cfg.price_noise_sd * z(rng), 2);
  }
  PriceSeries ida1{15, std::vector<double>(96)};
  for (std::size_t i = 0; i < 96; ++i) {
    id_anchor[i] = q_anchor[i] + cfg.price_noise_sd * z(rng);
    ida1.values[i] = detail::round_to(id_anchor[i] + 0.5 * cfg.price_noise_sd * z(rng), 2);
  }

  const Timestamp gate = qgrid.start() - minutes{cfg.gate_open_minutes_before};
  std::vector<TradeTick> quarter_ticks, hourly_ticks;
  PriceSeries id1{15, std::vector<double>(96)}, id3{15, std::vector<double>(96)}, idfull{15, std::vector<double>(96)},
      aep{15, std::vector<double>(96)};
  std::vector<TradeTick> product_ticks;
  for (std::size_t i = 0; i < 96; ++i) {
    product_ticks.clear();
    const Product p{qgrid.period_start(i), 15};
    detail::synth_product_ticks(rng, cfg, p, gate, id_anchor[i], cfg.tick_intensity, product_ticks);
    const double fallback = detail::round_to(id_anchor[i], 2);
    id1.values[i] = detail::vwap(product_ticks, p.delivery_start, 1.0, fallback);
    id3.values[i] = detail::vwap(product_ticks, p.delivery_start, 3.0, fallback);
    idfull.values[i] = detail::vwap(product_ticks, p.delivery_start, 0.0, fallback);
    aep.values[i] = detail::vwap(product_ticks, p.delivery_start, 0.25, fallback);
    quarter_ticks.insert(quarter_ticks.end(), product_ticks.begin(), product_ticks.end());
  }
  for (std::size_t h = 0; h < 24; ++h) {
    const Product p{hgrid.period_start(h), 60};
    const double anchor = (id_anchor[4 * h] + id_anchor[4 * h + 1] + id_anchor[4 * h + 2] + id_anchor[4 * h + 3]) / 4.0;
    detail::synth_product_ticks(rng, cfg, p, gate, anchor, cfg.tick_intensity * cfg.hourly_intensity_ratio,
                                hourly_ticks);
  }
  std::sort(quarter_ticks.begin(), quarter_ticks.end(), tick_order);
  std::sort(hourly_ticks.begin(), hourly_ticks.end(), tick_order);

  data.series["DA"] = std::move(da);
  data.series["IDA1"] = std::move(ida1);
  data.series["ID1"] = std::move(id1);
  data.series["ID3"] = std::move(id3);
  data.series["IDFULL"] = std::move(idfull);
  data.series["ID_AEP"] = std::move(aep);
  data.ticks_by_duration[15] = std::move(quarter_ticks);
  data.ticks_by_duration[60] = std::move(hourly_ticks);
  return data;
}

}  // namespace bessarb
