#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rhsim/analytic.hpp"
#include "rhsim/bitset.hpp"
#include "rhsim/hit_rate.hpp"
#include "rhsim/mobility.hpp"
#include "rhsim/rng.hpp"
#include "rhsim/scenario.hpp"

namespace rhsim {

/// Items obtainable in one community, and who is currently there.
struct CommunityAvailability {
  CommunityId community = 0;
  DynamicBitset available;              // over all item ids
  std::vector<int> available_count;     // per channel
  std::vector<int> subscribers;         // per channel, residents and visitors present
  int size = 0;                         // N_c, nominal resident count

  bool recognized(ChannelId x, bool channel_recognition) const {
    return !channel_recognition || subscribers[x] >= 1;
  }
};

struct TravellerState {
  NodeId node = 0;
  ChannelId subscription = 0;
  CommunityId home = 0;
  CommunityId destination = 0;
  CommunityId location = 0;  // kNoCommunity while in transit
  DynamicBitset sc;          // over the items of the subscribed channel, offset by first_item
  std::vector<ItemId> oc;
  std::vector<ItemId> li;
};

/// Channel-level weights of Eq.-1 sampling: items of channel x get weight w[x].
using ChannelWeights = std::vector<double>;

/// Items eligible for opportunistic caching in a community.
std::vector<ItemId> eligible_items(const Scenario& s, const CommunityAvailability& avail,
                                   bool channel_recognition);

/// Opportunistic-cache sampling for a traveller leaving a community. Draws a
/// multiset A of N_c * B items from the eligible, non-subscribed,
/// non-local items with probability proportional to their channel weight, then
/// B distinct items from A weighted by multiplicity.
std::vector<ItemId> sample_opportunistic_cache(const Scenario& s, const CommunityAvailability& avail,
                                               const TravellerState& t, const ChannelWeights& w,
                                               bool channel_recognition, int capacity, Rng& rng);

/// sc gains every available item of the traveller's channel; oc is resampled.
void on_traveller_exit(const Scenario& s, TravellerState& t, const CommunityAvailability& avail,
                       const ChannelWeights& w, bool channel_recognition, int capacity, Rng& rng);

/// The traveller joins the community and deposits every carried item whose
/// channel is recognized there (its own channel always is). Returns the newly
/// available items.
std::vector<ItemId> on_traveller_enter(const Scenario& s, TravellerState& t,
                                       CommunityAvailability& avail, bool channel_recognition);

struct HybridOptions {
  HybridMode mode = HybridMode::EqualSteadyState;
  bool channel_recognition = true;
  double sampling_interval_s = 500.0;
  double duration_s = 0.0;  // 0: the scenario duration
  int replica = 0;
  bool event_log = false;
  /// Encounter rate for the analytic model; <= 0 uses the mobility config.
  double encounter_rate = 0.0;
};

struct HybridEventRecord {
  double time_s = 0.0;
  NodeId traveller = 0;
  TravelKind kind = TravelKind::Exit;
  CommunityId community = 0;
  int deposited = 0;
};

struct HybridResult {
  std::vector<HitRateSample> hit;
  /// Global hit right after every event.
  std::vector<std::pair<double, double>> event_hit;
  std::vector<HybridEventRecord> events;
  double first_event_s = -1.0;
  std::size_t availability_bytes = 0;
  long model_solves = 0;
};

HybridResult run_hybrid(const Scenario& s, std::span<const TravellerEvent> schedule,
                        std::uint64_t seed, const HybridOptions& options);

/// Generates the traveller schedule from `seed`, then runs.
HybridResult run_hybrid(const Scenario& s, std::uint64_t seed, const HybridOptions& options);

}  // namespace rhsim
