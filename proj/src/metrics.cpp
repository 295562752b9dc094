#include "rhsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <boost/math/distributions/students_t.hpp>

namespace rhsim {

double ci95_half_width(const std::vector<double>& values) {
  const auto n = values.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
    return 0.0;
  double mean = 0.0;
  for (auto v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (auto v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return t * sd / std::sqrt(static_cast<double>(n));
}

std::vector<AggregatedSeries> hit_rate_series(const std::vector<HitRateSample>& samples) {
  if (samples.empty()) return {};
  std::vector<Scope> order;
  std::map<Scope, std::map<int, std::vector<std::pair<double, double>>>> by_scope;
  for (const auto& s : samples) {
    auto [it, fresh] = by_scope.try_emplace(s.scope);
    if (fresh) order.push_back(s.scope);
    it->second[s.replica].emplace_back(s.time_s, s.value);
  }
  std::vector<AggregatedSeries> out;
  for (const auto& scope : order) {
    const auto& reps = by_scope[scope];
    const auto& first = reps.begin()->second;
    AggregatedSeries a;
    a.scope = scope;
    a.replicas = static_cast<int>(reps.size());
    for (const auto& [rep, pts] : reps) {
      if (pts.size() != first.size())
        throw AlignmentError("replica " + std::to_string(rep) + " of " + scope.to_string() +
                             " has a different sampling grid");
      for (std::size_t k = 0; k < pts.size(); ++k)
        if (pts[k].first != first[k].first)
          throw AlignmentError("replica " + std::to_string(rep) + " of " + scope.to_string() +
                               " has a different sampling grid");
    }
    std::vector<double> column(reps.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
      std::size_t j = 0;
      double sum = 0.0;
      for (const auto& [rep, pts] : reps) {
        column[j++] = pts[k].second;
        sum += pts[k].second;
      }
      a.time_s.push_back(first[k].first);
      a.mean.push_back(sum / static_cast<double>(reps.size()));
      a.ci95.push_back(ci95_half_width(column));
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<SeriesPoint> points_of(const AggregatedSeries& s) {
  std::vector<SeriesPoint> out;
  for (std::size_t k = 0; k < s.time_s.size(); ++k) out.push_back({s.time_s[k], s.mean[k]});
  return out;
}

double value_at(const std::vector<SeriesPoint>& s, double t) {
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double x, const SeriesPoint& p) { return x < p.time_s; });
  if (it == s.begin()) throw std::out_of_range("series has no value before its first sample");
  return std::prev(it)->value;
}

GapStats compare_series(const std::vector<SeriesPoint>& a, const std::vector<SeriesPoint>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("compare_series: empty series");
  GapStats g;
  g.overlap_start_s = std::max(a.front().time_s, b.front().time_s);
  g.overlap_end_s = std::min(a.back().time_s, b.back().time_s);
  if (g.overlap_start_s > g.overlap_end_s) throw std::invalid_argument("compare_series: series do not overlap");
  std::vector<double> times;
  for (const auto* s : {&a, &b})
    for (const auto& p : *s)
      if (p.time_s >= g.overlap_start_s && p.time_s <= g.overlap_end_s) times.push_back(p.time_s);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double sum = 0.0;
  for (auto t : times) {
    const double d = std::abs(value_at(a, t) - value_at(b, t));
    g.max_abs_gap = std::max(g.max_abs_gap, d);
    sum += d;
  }
  g.mean_abs_gap = sum / static_cast<double>(times.size());
  g.final_gap = std::abs(value_at(a, g.overlap_end_s) - value_at(b, g.overlap_end_s));
  return g;
}

}  // namespace rhsim
