#pragma once

#include <stdexcept>
#include <vector>

#include "rhsim/hit_rate.hpp"

namespace rhsim {

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean over replicas of one scope, on the shared sampling grid.
struct AggregatedSeries {
  Scope scope;
  int replicas = 0;
  std::vector<double> time_s;
  std::vector<double> mean;
  /// 95% Student-t half-width; NaN with a single replica.
  std::vector<double> ci95;
};

/// One aggregated series per scope, in order of first appearance. Every
/// replica must have sampled a scope on the same time grid.
std::vector<AggregatedSeries> hit_rate_series(const std::vector<HitRateSample>& samples);

/// Half-width of the 95% confidence interval of the mean of `values`.
double ci95_half_width(const std::vector<double>& values);

struct SeriesPoint {
  double time_s = 0.0;
  double value = 0.0;
};

struct GapStats {
  double max_abs_gap = 0.0;
  double mean_abs_gap = 0.0;
  double final_gap = 0.0;  // |a - b| at the end of the overlap
  double overlap_start_s = 0.0;
  double overlap_end_s = 0.0;
};

/// Gaps between two right-continuous step series, evaluated at every sample
/// time of either series inside their overlapping span.
GapStats compare_series(const std::vector<SeriesPoint>& a, const std::vector<SeriesPoint>& b);

std::vector<SeriesPoint> points_of(const AggregatedSeries& s);

/// Step-interpolated value at time t; t must not precede the first point.
double value_at(const std::vector<SeriesPoint>& s, double t);

}  // namespace rhsim
