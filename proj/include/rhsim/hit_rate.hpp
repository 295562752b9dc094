#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rhsim/scenario.hpp"

namespace rhsim {

enum class ScopeKind { Global, Community, Channel, ChannelRank, CommunityChannel };

/// Aggregation scope of a hit-rate value. `a` is the community, channel or
/// rank; `b` is the channel of a CommunityChannel scope.
struct Scope {
  ScopeKind kind = ScopeKind::Global;
  std::uint32_t a = 0;
  std::uint32_t b = 0;

  static Scope global() { return {}; }
  static Scope community(CommunityId c) { return {ScopeKind::Community, c, 0}; }
  static Scope channel(ChannelId x) { return {ScopeKind::Channel, x, 0}; }
  static Scope rank(int k) { return {ScopeKind::ChannelRank, static_cast<std::uint32_t>(k), 0}; }
  static Scope community_channel(CommunityId c, ChannelId x) {
    return {ScopeKind::CommunityChannel, c, x};
  }

  /// "global", "community:3", "channel:5", "rank:1", "community:3/channel:5".
  std::string to_string() const;
  static Scope parse(std::string_view text);

  friend bool operator==(const Scope&, const Scope&) = default;
  friend auto operator<=>(const Scope&, const Scope&) = default;
};

struct HitRateSample {
  double time_s = 0.0;
  Scope scope;
  double value = 0.0;
  int replica = 0;
};

/// Global channel ranks: descending global subscriber count, ties by id.
/// rank_of[channel] is 1-based.
std::vector<int> global_channel_ranks(const Scenario& s);

/// Ranks reported for large channel counts.
inline constexpr int kReportedRanks[] = {1, 1000, 2500, 5000, 10000};

/// Scopes reported for a scenario: global, every community, every channel and
/// rank up to 100 channels, every rank up to 1000 channels, the fixed rank set
/// beyond that, and every channel of each tagged community.
std::vector<Scope> default_scopes(const Scenario& s);

/// Incrementally maintained mean hit rate over groups of nodes. A unit is a
/// group of `weight` nodes sharing one hit value; each unit contributes to a
/// fixed set of scopes. Values only ever grow, which keeps the sums monotone.
class HitAccumulator {
 public:
  explicit HitAccumulator(std::vector<Scope> scopes);

  std::size_t add_unit(double weight, double value, const std::vector<std::size_t>& scope_indices);
  /// New value of a unit; must not be lower than the current one.
  void raise(std::size_t unit, double value);
  double unit_value(std::size_t unit) const { return units_[unit].value; }

  const std::vector<Scope>& scopes() const { return scopes_; }
  double value(std::size_t scope) const;
  double weight(std::size_t scope) const { return weight_[scope]; }
  /// Appends one sample per scope with nonzero weight.
  void sample(double time_s, int replica, std::vector<HitRateSample>& out) const;

 private:
  struct Unit {
    double weight;
    double value;
    std::vector<std::size_t> scopes;
  };
  std::vector<Scope> scopes_;
  std::vector<double> sum_;
  std::vector<double> weight_;
  std::vector<Unit> units_;
};

/// Maps scopes to their position in a scope list; used to route units.
class ScopeIndex {
 public:
  ScopeIndex(const Scenario& s, const std::vector<Scope>& scopes);
  /// Scope indices a node group of (community, channel) contributes to.
  std::vector<std::size_t> for_group(CommunityId home, ChannelId channel) const;

 private:
  std::vector<int> rank_of_;
  std::vector<long> global_;
  std::vector<long> community_;
  std::vector<long> channel_;
  std::vector<long> rank_;
  std::vector<std::vector<std::pair<ChannelId, std::size_t>>> community_channel_;
};

}  // namespace rhsim
