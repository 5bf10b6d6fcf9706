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

// Piecewise-linear value functions for the SoC dynamic program.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bessarb::detail {

using Points = std::vector<std::pair<double, double>>;

/// Concave piecewise-linear function on a closed interval [lo, hi], stored as
/// the value at `lo` plus segments of (length, slope) with non-increasing
/// slopes. A function with no segments is defined at a single point.
struct ConcavePwl {
  struct Segment {
    double length;
    double slope;
  };

  double lo = 0.0;
  double value_lo = 0.0;
  std::vector<Segment> segments;

  double hi() const {
    double h = lo;
    for (const auto& s : segments) h += s.length;
    return h;
  }

  static ConcavePwl point(double x, double value) { return ConcavePwl{x, value, {}}; }

  /// Builds the function through `(x, y)` vertices sorted by x. Slopes are
  /// clamped to be non-increasing so round-off cannot break concavity.
  static ConcavePwl through(std::span<const std::pair<double, double>> pts) {
    assert(!pts.empty());
    ConcavePwl f{pts.front().first, pts.front().second, {}};
    f.segments.reserve(pts.size());
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const double len = pts[k].first - pts[k - 1].first;
      if (len <= 1e-15) continue;
      double slope = (pts[k].second - pts[k - 1].second) / len;
      if (!f.segments.empty()) slope = std::min(slope, f.segments.back().slope);
      f.segments.push_back({len, slope});
    }
    return f;
  }

  double eval(double x) const {
    double pos = lo, val = value_lo;
    for (const auto& s : segments) {
      if (x <= pos + s.length) return val + (x - pos) * s.slope;
      pos += s.length;
      val += s.length * s.slope;
    }
    return val + (x - pos) * (segments.empty() ? 0.0 : segments.back().slope);
  }
};

inline void push_merged(std::vector<ConcavePwl::Segment>& out, ConcavePwl::Segment s) {
  if (s.length <= 1e-15) return;
  if (!out.empty() && std::abs(out.back().slope - s.slope) <= 1e-12) {
    out.back().length += s.length;
    return;
  }
  out.push_back(s);
}

/// Sup-convolution h(z) = max_{x + y = z} f(x) + g(y): segments merged by slope.
/// On equal slopes f's segment is consumed first.
inline ConcavePwl sup_convolve(const ConcavePwl& f, const ConcavePwl& g) {
  ConcavePwl h{f.lo + g.lo, f.value_lo + g.value_lo, {}};
  h.segments.reserve(f.segments.size() + g.segments.size());
  std::size_t i = 0, j = 0;
  while (i < f.segments.size() || j < g.segments.size()) {
    if (j == g.segments.size() || (i < f.segments.size() && f.segments[i].slope >= g.segments[j].slope)) {
      push_merged(h.segments, f.segments[i++]);
    } else {
      push_merged(h.segments, g.segments[j++]);
    }
  }
  return h;
}

/// Split of z between f and g that attains sup_convolve(f, g)(z). Returns the
/// x-part; the y-part is z - x. Walks the same merge order as sup_convolve.
inline double sup_convolve_split(const ConcavePwl& f, const ConcavePwl& g, double z) {
  double remaining = std::max(0.0, z - (f.lo + g.lo));
  double x = f.lo;
  std::size_t i = 0, j = 0;
  while (remaining > 0 && (i < f.segments.size() || j < g.segments.size())) {
    if (j == g.segments.size() || (i < f.segments.size() && f.segments[i].slope >= g.segments[j].slope)) {
      const double take = std::min(remaining, f.segments[i].length);
      x += take;
      remaining -= take;
      ++i;
    } else {
      remaining -= std::min(remaining, g.segments[j].length);
      ++j;
    }
  }
  return x;
}

/// Restricts f to [a, b]. Returns nullopt when the domains do not meet;
/// endpoints within `tol` of the interval are snapped onto it.
inline std::optional<ConcavePwl> restrict_domain(const ConcavePwl& f, double a, double b, double tol = 1e-9) {
  const double f_hi = f.hi();
  if (f_hi < a - tol || f.lo > b + tol) return std::nullopt;
  if (f_hi < a) return ConcavePwl::point(a, f.eval(f_hi));
  if (f.lo > b) return ConcavePwl::point(b, f.value_lo);

  ConcavePwl out;
  double pos = f.lo, val = f.value_lo;
  std::size_t k = 0;
  // Drop the part left of a.
  while (k < f.segments.size() && pos + f.segments[k].length <= a) {
    pos += f.segments[k].length;
    val += f.segments[k].length * f.segments[k].slope;
    ++k;
  }
  double start = pos, start_val = val;
  if (pos < a) {
    start_val = val + (a - pos) * f.segments[k].slope;
    start = a;
  }
  out.lo = start;
  out.value_lo = start_val;
  double cursor = start;
  for (; k < f.segments.size() && cursor < b; ++k) {
    const double seg_end = pos + f.segments[k].length;
    pos = seg_end;
    const double len = std::min(seg_end, b) - cursor;
    if (len > 0) push_merged(out.segments, {len, f.segments[k].slope});
    cursor = std::min(seg_end, b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// General (not necessarily concave) continuous piecewise-linear functions
// ---------------------------------------------------------------------------

/// Continuous piecewise-linear function on [lo(), hi()], stored as vertices
/// sorted by x. A single vertex is a function defined at one point.
struct Pwl {
  Points v;

  double lo() const { return v.front().first; }
  double hi() const { return v.back().first; }

  static Pwl point(double x, double y) { return Pwl{{{x, y}}}; }

  /// Value at x, clamped to the domain.
  double eval(double x) const {
    if (x <= v.front().first) return v.front().second;
    if (x >= v.back().first) return v.back().second;
    auto it = std::upper_bound(v.begin(), v.end(), x, [](double a, const auto& p) { return a < p.first; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    return a.second + (x - a.first) * (b.second - a.second) / (b.first - a.first);
  }
};

inline Pwl to_pwl(const ConcavePwl& f) {
  Pwl out{{{f.lo, f.value_lo}}};
  double x = f.lo, y = f.value_lo;
  for (const auto& s : f.segments) {
    x += s.length;
    y += s.length * s.slope;
    out.v.emplace_back(x, y);
  }
  return out;
}

/// Splits f at its convex kinks. f is the maximum of the returned pieces,
/// each restricted to its own sub-interval. Kinks whose depth below the chord
/// is within `tol` are absorbed into the concave hull (round-off, not shape).
inline std::vector<ConcavePwl> concave_runs(const Pwl& f, double tol = 1e-9) {
  std::vector<ConcavePwl> runs;
  Points run;
  // Depth of b below the chord a -> c (positive when the kink at b is convex).
  auto depth = [](const auto& a, const auto& b, const auto& c) {
    const double t = (b.first - a.first) / (c.first - a.first);
    return a.second + t * (c.second - a.second) - b.second;
  };
  for (const auto& p : f.v) {
    while (run.size() >= 2 && depth(run[run.size() - 2], run.back(), p) > 0 &&
           depth(run[run.size() - 2], run.back(), p) <= tol * (1.0 + std::abs(p.second)))
      run.pop_back();
    if (run.size() >= 2 && depth(run[run.size() - 2], run.back(), p) > 0) {
      runs.push_back(ConcavePwl::through(run));
      run = {run.back()};
    }
    run.push_back(p);
  }
  runs.push_back(ConcavePwl::through(run));
  return runs;
}

/// Drops vertices where the slope does not change.
inline void simplify(Pwl& f) {
  if (f.v.size() < 3) return;
  Points out{f.v.front()};
  for (std::size_t k = 1; k + 1 < f.v.size(); ++k) {
    const auto& a = out.back();
    const auto& b = f.v[k];
    const auto& c = f.v[k + 1];
    const double s1 = (b.second - a.second) / (b.first - a.first);
    const double s2 = (c.second - b.second) / (c.first - b.first);
    if (std::abs(s1 - s2) > 1e-12 * (1.0 + std::abs(s1) + std::abs(s2))) out.push_back(b);
  }
  out.push_back(f.v.back());
  f.v = std::move(out);
}

/// Pointwise maximum of concave pieces whose domains together form an
/// interval.
inline Pwl upper_envelope(const std::vector<ConcavePwl>& parts) {
  constexpr double tol = 1e-12;
  std::vector<double> his(parts.size());
  std::vector<double> ts;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    his[k] = parts[k].hi();
    double x = parts[k].lo;
    ts.push_back(x);
    for (const auto& s : parts[k].segments) ts.push_back(x += s.length);
  }
  std::sort(ts.begin(), ts.end());
  std::vector<double> grid;
  for (double t : ts)
    if (grid.empty() || t > grid.back() + tol) grid.push_back(t);

  Pwl out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t0 = grid[g];
    double y0 = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < parts.size(); ++k)
      if (t0 >= parts[k].lo - tol && t0 <= his[k] + tol) y0 = std::max(y0, parts[k].eval(std::clamp(t0, parts[k].lo, his[k])));
    out.v.emplace_back(t0, y0);
    if (g + 1 == grid.size()) break;

    // Lines active on [t0, t1]; walk their upper envelope.
    const double t1 = grid[g + 1], w = t1 - t0;
    std::vector<std::pair<double, double>> lines;  // value at t0, slope
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (parts[k].lo > t0 + tol || his[k] < t1 - tol) continue;
      const double a = parts[k].eval(t0);
      lines.emplace_back(a, (parts[k].eval(t1) - a) / w);
    }
    if (lines.empty()) throw std::logic_error("upper_envelope: pieces do not cover an interval");
    std::size_t cur = 0;
    for (std::size_t k = 1; k < lines.size(); ++k)
      if (lines[k].first > lines[cur].first + tol ||
          (lines[k].first >= lines[cur].first - tol && lines[k].second > lines[cur].second))
        cur = k;
    double d = 0;
    for (;;) {
      std::size_t next = lines.size();
      double best = w;
      for (std::size_t k = 0; k < lines.size(); ++k) {
        if (lines[k].second <= lines[cur].second) continue;
        const double dk = (lines[cur].first - lines[k].first) / (lines[k].second - lines[cur].second);
        if (dk > d + tol && dk < best - tol) {
          best = dk;
          next = k;
        }
      }
      if (next == lines.size()) break;
      d = best;
      cur = next;
      out.v.emplace_back(t0 + d, lines[cur].first + lines[cur].second * d);
    }
  }
  simplify(out);
  return out;
}

/// h(z) = max_{x + y = z} f(x) + g(y) for general continuous PWL f and g.
inline Pwl sup_convolve(const Pwl& f, const Pwl& g) {
  const auto fr = concave_runs(f), gr = concave_runs(g);
  if (fr.size() == 1 && gr.size() == 1) return to_pwl(sup_convolve(fr[0], gr[0]));
  std::vector<ConcavePwl> parts;
  parts.reserve(fr.size() * gr.size());
  for (const auto& a : fr)
    for (const auto& b : gr) parts.push_back(sup_convolve(a, b));
  return upper_envelope(parts);
}

/// Restricts f to [a, b]; nullopt when the domains do not meet. Endpoints
/// within `tol` of the interval are snapped onto it.
inline std::optional<Pwl> restrict_domain(const Pwl& f, double a, double b, double tol = 1e-9) {
  if (f.hi() < a - tol || f.lo() > b + tol) return std::nullopt;
  if (f.hi() <= a) return Pwl::point(a, f.v.back().second);
  if (f.lo() >= b) return Pwl::point(b, f.v.front().second);
  Pwl out;
  if (f.lo() < a) out.v.emplace_back(a, f.eval(a));
  for (const auto& p : f.v)
    if (p.first >= a && p.first <= b && (out.v.empty() || p.first > out.v.back().first)) out.v.push_back(p);
  if (f.hi() > b && out.v.back().first < b) out.v.emplace_back(b, f.eval(b));
  return out;
}

/// x attaining max_x f(x) + g(z - x). The maximum of a piecewise-linear
/// function sits at a breakpoint, so only those are compared.
inline double best_split(const Pwl& f, const Pwl& g, double z) {
  double a = std::max(f.lo(), z - g.hi()), b = std::min(f.hi(), z - g.lo());
  if (a > b) a = b = std::clamp(0.5 * (a + b), f.lo(), f.hi());
  std::vector<double> xs{a, b};
  for (const auto& p : f.v)
    if (p.first > a && p.first < b) xs.push_back(p.first);
  for (const auto& p : g.v)
    if (z - p.first > a && z - p.first < b) xs.push_back(z - p.first);
  std::sort(xs.begin(), xs.end());
  double best_x = a, best = f.eval(a) + g.eval(z - a);
  for (double x : xs) {
    const double v = f.eval(x) + g.eval(z - x);
    if (v > best + 1e-12 * (1.0 + std::abs(best))) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace bessarb::detail
