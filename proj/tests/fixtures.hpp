#pragma once

#include <map>
#include <set>
#include <vector>

#include "rhsim/agent.hpp"
#include "rhsim/mobility.hpp"
#include "rhsim/scenario.hpp"

namespace fixtures {

using namespace rhsim;

// Hand-built population: one community, nodes given as (subscription, local
// items), channels of equal size. Every item needs at least one holder.
inline Scenario hand_scenario(const std::vector<std::pair<ChannelId, std::vector<ItemId>>>& nodes,
                              int channels, int items_per_channel, RecognitionParams params) {
  Scenario s;
  s.config.communities = 1;
  s.config.nodes_per_community = static_cast<int>(nodes.size());
  s.config.channels = channels;
  s.config.items_per_channel = items_per_channel;
  s.config.recognition = params;
  s.config.sim_duration_s = 100.0;
  s.community_sizes = {static_cast<int>(nodes.size())};
  for (int j = 0; j < channels; ++j)
    s.channels.push_back({static_cast<ChannelId>(j), static_cast<ItemId>(j * items_per_channel),
                          items_per_channel});
  for (int a = 0; a < channels * items_per_channel; ++a)
    s.items.push_back({static_cast<ItemId>(a), static_cast<ChannelId>(a / items_per_channel), {}});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeSpec n;
    n.id = static_cast<NodeId>(i);
    n.subscription = nodes[i].first;
    s.nodes.push_back(n);
    for (auto a : nodes[i].second) s.items[a].holders.push_back(n.id);
  }
  s.popularity = {std::vector<double>(channels, 1.0 / channels)};
  return s;
}

// Five nodes, channel 0 = items {0,1}, channel 1 = items {2,3}; B=1,
// R_c=R=1, no forgetting, so the exchange is deterministic.
inline Scenario golden_scenario() {
  return hand_scenario({{0, {0}}, {0, {}}, {1, {2}}, {1, {3}}, {0, {1}}}, 2, 2, {1, 1, 0.0, 0.0, 1});
}

inline std::vector<ContactEvent> golden_trace() {
  return {{10, 0, 2}, {20, 1, 2}, {30, 3, 1}, {40, 4, 1}, {50, 2, 4}, {60, 0, 3}};
}

struct Expected {
  std::set<ItemId> sc;
  std::vector<ItemId> oc;
  std::map<ChannelId, int> cc;
  std::map<ItemId, int> ic;
};

// Worked by hand, contact by contact.
inline std::vector<Expected> golden_table() {
  return {
      {{0}, {3}, {{1, 1}}, {{2, 1}, {3, 1}}},
      {{0, 1}, {3}, {{0, 1}, {1, 1}}, {{0, 1}, {1, 1}, {2, 1}, {3, 1}}},
      {{2}, {1}, {{0, 1}}, {{0, 1}, {1, 1}}},
      {{2, 3}, {}, {{0, 1}}, {{0, 1}, {2, 1}}},
      {{0, 1}, {2}, {{0, 1}, {1, 1}}, {{0, 1}, {2, 1}, {3, 1}}},
  };
}

inline bool matches(const NodeCaches& n, const Expected& e) {
  return n.sc == e.sc && n.oc == e.oc && n.cc == e.cc && n.ic == e.ic;
}

// One channel, one item held by node 1, five nodes; node 0 subscribes.
inline Scenario tiny_scenario() {
  return hand_scenario({{0, {}}, {0, {0}}, {0, {}}, {0, {}}, {0, {}}}, 1, 1, {1, 1, 0.0, 0.0, 1});
}

}  // namespace fixtures
