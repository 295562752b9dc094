#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rhsim/agent.hpp"
#include "rhsim/hit_rate.hpp"
#include "rhsim/mobility.hpp"
#include "rhsim/scenario.hpp"

namespace rhsim {

class MalformedTrace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DesOptions {
  double sampling_interval_s = 500.0;
  double duration_s = 0.0;  // 0: use the scenario duration
  int replica = 0;
  /// Check node invariants and item lineage after every encounter.
  bool audit = false;
  bool record_replication = true;
};

/// Mean replication of the items of one channel among the residents of one
/// community. `any` counts every cache; `oc` is the opportunistic-cache share
/// among residents not subscribed to the channel.
struct ReplicationSample {
  double time_s = 0.0;
  CommunityId community = 0;
  ChannelId channel = 0;
  double any = 0.0;
  double oc = 0.0;
};

struct DesResult {
  std::vector<HitRateSample> hit;
  std::vector<ReplicationSample> replication;
  std::vector<NodeCaches> final_caches;
  std::size_t contacts = 0;
};

/// Replays `trace` through pairwise encounters. Samples are taken at
/// k * sampling_interval for every k with that time <= duration, after every
/// contact at or before the sample time. `seed` is the replica seed.
DesResult run_des(const Scenario& s, std::span<const ContactEvent> trace, std::uint64_t seed,
                  const DesOptions& options = {});

/// Generates the traveller schedule and contact trace from `seed`, then runs.
DesResult run_des(const Scenario& s, std::uint64_t seed, const DesOptions& options = {});

/// Encounters per node per second: 2 |trace| / (node_count * duration).
double estimate_encounter_rate(std::span<const ContactEvent> trace, std::size_t node_count,
                               double duration);

}  // namespace rhsim
