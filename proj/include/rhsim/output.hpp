#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhsim/analytic.hpp"
#include "rhsim/des.hpp"
#include "rhsim/hit_rate.hpp"
#include "rhsim/hybrid.hpp"
#include "rhsim/metrics.hpp"

namespace rhsim {

inline constexpr const char* kCodeVersion = "1.0.0";

/// Locale-independent text with 9 significant digits.
std::string format_sig9(double v);

std::string hitrate_csv(const std::vector<HitRateSample>& samples);
std::string hitrate_summary_csv(const std::vector<AggregatedSeries>& series);
std::string replication_csv(const std::vector<TraceRow>& rows);
std::string trace_csv(const std::vector<TraceRow>& rows);
std::string des_replication_csv(const std::vector<std::vector<ReplicationSample>>& replicas);
std::string events_csv(const std::vector<HybridEventRecord>& events);

struct RunManifest {
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  std::string engine;
  std::string mode;
  std::string code_version = kCodeVersion;
  int replicas = 1;
  int jobs = 1;
  double wall_clock_s = 0.0;
  std::vector<std::string> outputs;
};

std::string manifest_text(const RunManifest& m);

/// Writes `content` to dir/name, creating dir. Errors name the file.
std::string write_output(const std::string& dir, const std::string& name, const std::string& content);

/// Parses a hitrate.csv written by hitrate_csv.
std::vector<HitRateSample> parse_hitrate_csv(const std::string& text);
std::vector<HitRateSample> read_hitrate_csv(const std::string& path);

}  // namespace rhsim
