#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhsim {

// Dense identifiers, contiguous from 0 within each namespace.
using ChannelId = std::uint32_t;
using ItemId = std::uint32_t;
using NodeId = std::uint32_t;
using CommunityId = std::uint32_t;

inline constexpr CommunityId kNoCommunity = std::numeric_limits<CommunityId>::max();

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thresholds and forgetting factors of the recognition heuristic, plus the
/// opportunistic cache size.
struct RecognitionParams {
  int channel_threshold = 5;   // R_c
  int item_threshold = 5;      // R
  double channel_forget = 0.0; // alpha
  double item_forget = 0.0;    // gamma
  int oc_capacity = 3;         // B
};

enum class SubscriptionLaw { PerCommunityRotated, Global };
enum class DestinationLaw { AllOthers, ZipfDistance };
enum class PlacementKind { OnSubscribers, UniformRandom, PerCommunityQuota };

struct PlacementMode {
  PlacementKind kind = PlacementKind::UniformRandom;
  int quota = 2;  // only used by PerCommunityQuota
};

enum class MobilityMode { Geometric, HomogeneousMixing };
enum class TravelTimeMode { Instant, DistanceOverSpeed };

struct MobilityConfig {
  MobilityMode mode = MobilityMode::HomogeneousMixing;
  double area_side_m = 1000.0;
  double transmission_range_m = 20.0;
  double speed_min_mps = 1.0;
  double speed_max_mps = 1.86;
  double pause_s = 0.0;
  double mean_sojourn_s = 6000.0;
  TravelTimeMode travel_time = TravelTimeMode::Instant;
  bool in_transit_contacts = false;
  /// HomogeneousMixing: mean encounters per node per second in a community of
  /// nominal size.
  double encounter_rate = 0.01;
  /// Geometric: position update step.
  double time_step_s = 1.0;
};

enum class HybridMode { EqualSteadyState, AnalyticDriven };

struct HybridConfig {
  HybridMode mode = HybridMode::EqualSteadyState;
  double analytic_epsilon = 1e-6;
  int analytic_window = 10;
  long analytic_max_steps = 1000000;
  /// Communities for which per-(community, channel) hit rates are reported.
  std::vector<CommunityId> tagged_communities;
};

struct OutputConfig {
  double sampling_interval_s = 500.0;
  int replicas = 1;
  bool event_log = false;
};

/// High-level experiment description. Everything in the scenario file except
/// the materialized population.
struct ScenarioConfig {
  std::string name = "scenario";
  int communities = 1;
  int nodes_per_community = 15;
  int channels = 3;
  int items_per_channel = 99;
  double zipf_exponent = 1.0;
  SubscriptionLaw subscription_law = SubscriptionLaw::PerCommunityRotated;
  int travellers_per_community = 0;
  DestinationLaw destination_law = DestinationLaw::AllOthers;
  double destination_zipf_exponent = 1.0;
  PlacementMode placement;
  bool channel_recognition = true;
  double sim_duration_s = 125000.0;
  std::uint64_t seed = 1;

  RecognitionParams recognition;
  MobilityConfig mobility;
  HybridConfig hybrid;
  OutputConfig output;
};

struct NodeSpec {
  NodeId id = 0;
  CommunityId home = 0;
  ChannelId subscription = 0;
  bool is_traveller = false;
  std::optional<CommunityId> destination;
};

struct ChannelSpec {
  ChannelId id = 0;
  ItemId first_item = 0;
  int item_count = 0;
};

struct ItemSpec {
  ItemId id = 0;
  ChannelId channel = 0;
  std::vector<NodeId> holders;
};

/// A fully materialized experiment.
struct Scenario {
  ScenarioConfig config;
  std::vector<int> community_sizes;
  std::vector<NodeSpec> nodes;
  std::vector<ChannelSpec> channels;
  std::vector<ItemSpec> items;
  /// popularity[scope][channel]; one scope per community, or a single global
  /// scope under SubscriptionLaw::Global.
  std::vector<std::vector<double>> popularity;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t item_count() const { return items.size(); }
  std::size_t community_count() const { return community_sizes.size(); }
  ChannelId channel_of(ItemId item) const { return items[item].channel; }

  const std::vector<double>& popularity_for(CommunityId c) const {
    return popularity.size() == 1 ? popularity.front() : popularity.at(c);
  }

  /// Initial replication r_0(a): holders of `item` whose home is `c`, over N_c.
  double initial_replication(ItemId item, CommunityId c) const;
  /// Node ids whose home community is `c`, ascending.
  std::vector<NodeId> members_of(CommunityId c) const;
  /// Resident subscriber count of every channel in community `c`.
  std::vector<int> subscriber_counts(CommunityId c) const;
  /// Subscriber count of every channel over the whole population.
  std::vector<int> global_subscriber_counts() const;
};

/// Zipf weights k^-s for k = 1..count, normalized to sum to 1.
std::vector<double> zipf_popularity(int count, double s);

/// Channel popularity within community `c` under cyclic rotation: the channel
/// of rank k in community 0 has rank k+c (mod channels) in community c.
std::vector<double> rotated_popularity(const std::vector<double>& base, CommunityId c);

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);
inline Scenario generate_scenario(const ScenarioConfig& config) {
  return generate_scenario(config, config.seed);
}

/// Every violated invariant, one human-readable line each. Empty means valid.
std::vector<std::string> validate_scenario(const Scenario& s);

/// Validates the configuration alone (parameter ranges and consistency).
std::vector<std::string> validate_config(const ScenarioConfig& c);

/// Parameter sets of the validation, urban and regional experiments.
namespace presets {
ScenarioConfig validation();
ScenarioConfig urban();
ScenarioConfig regional();
}  // namespace presets

}  // namespace rhsim
