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

// Bid/ask curves from executed trades. Trades are bucketed on a regular
// trading grid; per product and bucket the bid is a low empirical quantile
// and the ask a high one of the bucket's trade prices. Buckets with fewer
// than `min_trades` trades quote the sentinels (-S, +S), which makes the
// product too expensive to trade.

#pragma once

#include <bessarb/core.hpp>
#include <bessarb/csv.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <vector>

namespace bessarb {

struct QuoteConfig {
  int bucket_minutes = 5;
  std::size_t min_trades = 10;
  double bid_quantile = 0.20;
  double ask_quantile = 0.80;
  double sentinel_eur = 4000.0;
  int product_minutes = 15;
  /// Continuous trading opens this long before the delivery day (16:00 D-1).
  int gate_open_minutes_before = 8 * 60;

  void validate() const {
    if (bucket_minutes <= 0) throw InputError("quotes: bucket_minutes must be positive");
    if (min_trades < 1) throw InputError("quotes: min_trades must be >= 1");
    if (!(bid_quantile > 0 && bid_quantile <= ask_quantile && ask_quantile < 1))
      throw InputError("quotes: need 0 < bid_quantile <= ask_quantile < 1");
    if (!(sentinel_eur > 0)) throw InputError("quotes: sentinel must be positive");
    if (product_minutes != 15 && product_minutes != 60)
      throw InputError("quotes: product duration must be 15 or 60 minutes");
  }
};

struct QuoteCurve {
  Timestamp trading_time{};
  PriceCurve prices;
  std::vector<std::size_t> trade_counts;
  /// 1 while the product's delivery has not started at trading_time.
  std::vector<std::uint8_t> tradable;
};

/// Nearest-rank empirical quantile: the ceil(q*n)-th smallest value.
/// `sorted` must be ascending and non-empty.
inline double nearest_rank(std::span<const double> sorted, double q) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

/// Builds one QuoteCurve per trading time t_j = gate_open + j * bucket, for
/// j = 1.. until the last product's delivery start is reached. Bucket j holds
/// trades with t_{j-1} < execution_time <= t_j. Ticks for products outside
/// `grid` are ignored; ticks must be sorted by execution time and match the
/// configured product duration.
inline std::vector<QuoteCurve> build_quotes(std::span<const TradeTick> ticks, const DeliveryGrid& grid,
                                            const QuoteConfig& cfg) {
  cfg.validate();
  if (grid.step_minutes != cfg.product_minutes)
    throw StructuralError("quotes: grid step does not match the product duration");
  for (std::size_t k = 1; k < ticks.size(); ++k)
    if (ticks[k].execution_time < ticks[k - 1].execution_time)
      throw StructuralError("quotes: ticks not sorted by execution time (index " + std::to_string(k) + ")");
  for (const auto& t : ticks)
    if (t.product.duration_minutes != cfg.product_minutes)
      throw StructuralError("quotes: tick with product duration " + std::to_string(t.product.duration_minutes) +
                            " min in a " + std::to_string(cfg.product_minutes) + " min build");

  const std::size_t n = grid.periods();
  std::vector<QuoteCurve> out;
  if (n == 0) return out;

  const Timestamp gate = grid.start() - minutes{cfg.gate_open_minutes_before};
  const auto bucket = std::chrono::milliseconds{minutes{cfg.bucket_minutes}};
  const Timestamp last_start = grid.period_start(n - 1);
  std::size_t m = 1;
  if (last_start > gate) m = static_cast<std::size_t>((last_start - gate + bucket - std::chrono::milliseconds{1}) / bucket);

  std::size_t cursor = 0;
  while (cursor < ticks.size() && ticks[cursor].execution_time <= gate) ++cursor;

  std::vector<std::vector<double>> bucket_prices(n);
  out.reserve(m);
  for (std::size_t j = 1; j <= m; ++j) {
    const Timestamp t = gate + bucket * static_cast<long long>(j);
    for (auto& v : bucket_prices) v.clear();
    for (; cursor < ticks.size() && ticks[cursor].execution_time <= t; ++cursor) {
      if (auto i = grid.index_of(ticks[cursor].product.delivery_start))
        bucket_prices[*i].push_back(ticks[cursor].price_eur_mwh);
    }
    QuoteCurve q;
    q.trading_time = t;
    q.prices.grid = grid;
    q.prices.bid.assign(n, -cfg.sentinel_eur);
    q.prices.ask.assign(n, cfg.sentinel_eur);
    q.trade_counts.assign(n, 0);
    q.tradable.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& prices = bucket_prices[i];
      q.trade_counts[i] = prices.size();
      q.tradable[i] = grid.period_start(i) >= t ? 1 : 0;
      if (prices.size() >= cfg.min_trades) {
        std::sort(prices.begin(), prices.end());
        q.prices.bid[i] = nearest_rank(prices, cfg.bid_quantile);
        q.prices.ask[i] = nearest_rank(prices, cfg.ask_quantile);
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

/// CSV dump: trading_time, delivery_start, bid, ask, n_trades for every
/// product still tradable at each trading time.
inline void write_quotes_csv(std::ostream& os, const std::vector<QuoteCurve>& curves) {
  os << "trading_time,delivery_start,bid,ask,n_trades\n";
  for (const auto& q : curves) {
    for (std::size_t i = 0; i < q.trade_counts.size(); ++i) {
      if (!q.tradable[i]) continue;
      os << format_timestamp(q.trading_time) << ',' << format_timestamp(q.prices.grid.period_start(i)) << ','
         << csv::num(q.prices.bid[i]) << ',' << csv::num(q.prices.ask[i]) << ',' << q.trade_counts[i] << '\n';
    }
  }
}

}  // namespace bessarb
