#include "rhsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rhsim/mobility.hpp"
#include "rhsim/rng.hpp"

namespace rhsim {

namespace {

std::size_t draw_categorical(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumulative_of(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

}  // namespace

double Scenario::initial_replication(ItemId item, CommunityId c) const {
  const auto& holders = items.at(item).holders;
  const auto n = std::count_if(holders.begin(), holders.end(),
                               [&](NodeId h) { return nodes[h].home == c; });
  return static_cast<double>(n) / community_sizes.at(c);
}

std::vector<NodeId> Scenario::members_of(CommunityId c) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes)
    if (n.home == c) out.push_back(n.id);
  return out;
}

std::vector<int> Scenario::subscriber_counts(CommunityId c) const {
  std::vector<int> counts(channels.size(), 0);
  for (const auto& n : nodes)
    if (n.home == c) ++counts[n.subscription];
  return counts;
}

std::vector<int> Scenario::global_subscriber_counts() const {
  std::vector<int> counts(channels.size(), 0);
  for (const auto& n : nodes) ++counts[n.subscription];
  return counts;
}

std::vector<double> zipf_popularity(int count, double s) {
  if (count <= 0) throw std::invalid_argument("zipf_popularity: count must be >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("zipf_popularity: exponent must be > 0");
  std::vector<double> w(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) w[k] = std::pow(static_cast<double>(k + 1), -s);
  // Sum smallest-first for accuracy.
  double total = 0.0;
  for (auto it = w.rbegin(); it != w.rend(); ++it) total += *it;
  for (auto& x : w) x /= total;
  return w;
}

std::vector<double> rotated_popularity(const std::vector<double>& base, CommunityId c) {
  const std::size_t n = base.size();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = base[(j + c) % n];
  return out;
}

std::vector<std::string> validate_config(const ScenarioConfig& c) {
  std::vector<std::string> v;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  need(c.communities >= 1, "communities must be >= 1");
  need(c.nodes_per_community >= 1, "nodes_per_community must be >= 1");
  need(c.channels >= 1, "channels must be >= 1");
  need(c.items_per_channel >= 1, "items_per_channel must be >= 1");
  need(c.zipf_exponent > 0.0, "zipf_exponent must be > 0");
  need(c.destination_zipf_exponent > 0.0, "destination_zipf_exponent must be > 0");
  need(c.travellers_per_community >= 0, "travellers_per_community must be >= 0");
  need(c.travellers_per_community <= c.nodes_per_community,
       "travellers_per_community exceeds community size");
  need(c.travellers_per_community == 0 || c.communities >= 2,
       "travellers need at least two communities");
  need(c.placement.kind != PlacementKind::PerCommunityQuota || c.placement.quota >= 1,
       "placement_quota must be >= 1");
  need(c.sim_duration_s > 0.0, "sim_duration_s must be > 0");

  const auto& r = c.recognition;
  need(r.channel_threshold >= 1, "channel_threshold must be >= 1");
  need(r.item_threshold >= 1, "item_threshold must be >= 1");
  need(r.channel_forget >= 0.0 && r.channel_forget <= 1.0, "channel_forget must be in [0,1]");
  need(r.item_forget >= 0.0 && r.item_forget <= 1.0, "item_forget must be in [0,1]");
  need(r.oc_capacity >= 1, "oc_capacity must be >= 1");

  const auto& m = c.mobility;
  need(m.area_side_m > 0.0, "area_side_m must be > 0");
  need(m.transmission_range_m > 0.0, "transmission_range_m must be > 0");
  need(m.speed_min_mps >= 0.0 && m.speed_max_mps >= m.speed_min_mps,
       "speed range must satisfy 0 <= speed_min <= speed_max");
  need(m.pause_s >= 0.0, "pause_s must be >= 0");
  need(m.mean_sojourn_s > 0.0, "mean_sojourn_s must be > 0");
  need(m.encounter_rate > 0.0, "encounter_rate must be > 0");
  need(m.time_step_s > 0.0, "time_step_s must be > 0");
  need(m.travel_time == TravelTimeMode::Instant || m.speed_max_mps > 0.0,
       "distance_over_speed travel requires speed_max > 0");

  const auto& h = c.hybrid;
  need(h.analytic_epsilon > 0.0, "analytic_epsilon must be > 0");
  need(h.analytic_window >= 1, "analytic_window must be >= 1");
  need(h.analytic_max_steps >= 1, "analytic_max_steps must be >= 1");
  for (auto t : h.tagged_communities)
    need(t < static_cast<CommunityId>(c.communities), "tagged community out of range");

  need(c.output.sampling_interval_s > 0.0, "sampling_interval_s must be > 0");
  need(c.output.replicas >= 1, "replicas must be >= 1");
  return v;
}

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  if (auto v = validate_config(config); !v.empty()) {
    std::ostringstream os;
    os << "invalid scenario parameters:";
    for (const auto& s : v) os << "\n  " << s;
    throw std::invalid_argument(os.str());
  }

  Scenario s;
  s.config = config;
  s.config.seed = seed;
  const auto ncomm = static_cast<CommunityId>(config.communities);
  const auto nper = static_cast<NodeId>(config.nodes_per_community);
  const auto nch = static_cast<ChannelId>(config.channels);

  s.community_sizes.assign(ncomm, config.nodes_per_community);

  s.channels.resize(nch);
  for (ChannelId j = 0; j < nch; ++j)
    s.channels[j] = {j, static_cast<ItemId>(j * config.items_per_channel), config.items_per_channel};

  const auto base = zipf_popularity(config.channels, config.zipf_exponent);
  if (config.subscription_law == SubscriptionLaw::Global) {
    s.popularity.push_back(base);
  } else {
    for (CommunityId c = 0; c < ncomm; ++c) s.popularity.push_back(rotated_popularity(base, c));
  }

  // Subscriptions.
  Rng sub_rng(stream_seed(seed, Stream::Subscriptions));
  std::vector<std::vector<double>> cumulative;
  for (const auto& p : s.popularity) cumulative.push_back(cumulative_of(p));
  s.nodes.resize(static_cast<std::size_t>(ncomm) * nper);
  for (CommunityId c = 0; c < ncomm; ++c) {
    const auto& cum = cumulative.size() == 1 ? cumulative.front() : cumulative[c];
    for (NodeId k = 0; k < nper; ++k) {
      auto& n = s.nodes[c * nper + k];
      n.id = c * nper + k;
      n.home = c;
      n.subscription = static_cast<ChannelId>(draw_categorical(cum, sub_rng));
    }
  }

  // Travellers: a random subset of each community, destinations per law.
  const int ntrav = config.travellers_per_community;
  if (ntrav > 0) {
    Rng dest_rng(stream_seed(seed, Stream::Destinations));
    const auto layout = make_grid_layout(config.communities, config.mobility.area_side_m);
    for (CommunityId c = 0; c < ncomm; ++c) {
      std::vector<NodeId> members(nper);
      std::iota(members.begin(), members.end(), c * nper);
      // Partial Fisher-Yates.
      for (int i = 0; i < ntrav; ++i) {
        const auto j = i + dest_rng.below(nper - i);
        std::swap(members[i], members[j]);
      }
      std::vector<NodeId> chosen(members.begin(), members.begin() + ntrav);
      std::sort(chosen.begin(), chosen.end());

      std::vector<double> dest_cum;
      std::vector<CommunityId> by_distance;
      if (config.destination_law == DestinationLaw::ZipfDistance) {
        for (CommunityId d = 0; d < ncomm; ++d)
          if (d != c) by_distance.push_back(d);
        std::stable_sort(by_distance.begin(), by_distance.end(), [&](CommunityId a, CommunityId b) {
          return layout.distance(c, a) < layout.distance(c, b);
        });
        dest_cum = cumulative_of(zipf_popularity(static_cast<int>(by_distance.size()),
                                                 config.destination_zipf_exponent));
      }
      for (int i = 0; i < ntrav; ++i) {
        auto& n = s.nodes[chosen[i]];
        n.is_traveller = true;
        if (config.destination_law == DestinationLaw::AllOthers) {
          const auto offset = 1 + static_cast<CommunityId>(i) % (ncomm - 1);
          n.destination = (c + offset) % ncomm;
        } else {
          n.destination = by_distance[draw_categorical(dest_cum, dest_rng)];
        }
      }
    }
  }

  // Items and initial placement.
  Rng place_rng(stream_seed(seed, Stream::Placement));
  const auto total_nodes = static_cast<std::uint64_t>(s.nodes.size());
  std::vector<std::vector<NodeId>> subscribers_of(nch);
  if (config.placement.kind == PlacementKind::OnSubscribers)
    for (const auto& n : s.nodes) subscribers_of[n.subscription].push_back(n.id);

  s.items.resize(static_cast<std::size_t>(nch) * config.items_per_channel);
  for (ChannelId j = 0; j < nch; ++j) {
    for (int k = 0; k < config.items_per_channel; ++k) {
      const ItemId id = s.channels[j].first_item + static_cast<ItemId>(k);
      auto& item = s.items[id];
      item.id = id;
      item.channel = j;
      NodeId holder = 0;
      switch (config.placement.kind) {
        case PlacementKind::UniformRandom:
          holder = static_cast<NodeId>(place_rng.below(total_nodes));
          break;
        case PlacementKind::OnSubscribers: {
          const auto& subs = subscribers_of[j];
          holder = subs.empty() ? static_cast<NodeId>(place_rng.below(total_nodes))
                                : subs[place_rng.below(subs.size())];
          break;
        }
        case PlacementKind::PerCommunityQuota: {
          const auto c = static_cast<CommunityId>(k / config.placement.quota) % ncomm;
          holder = c * nper + static_cast<NodeId>(place_rng.below(nper));
          break;
        }
      }
      item.holders.push_back(holder);
    }
  }
  return s;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v = validate_config(s.config);
  auto add = [&](std::string msg) { v.push_back(std::move(msg)); };

  // Communities and nodes.
  std::vector<int> counted(s.community_sizes.size(), 0);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    if (n.id != i) add("node " + std::to_string(i) + ": id is not contiguous");
    if (n.home >= s.community_sizes.size()) {
      add("node " + std::to_string(i) + ": home community out of range");
      continue;
    }
    ++counted[n.home];
    if (n.subscription >= s.channels.size())
      add("node " + std::to_string(i) + ": subscription out of range");
    if (n.is_traveller != n.destination.has_value())
      add("node " + std::to_string(i) + ": destination present iff traveller violated");
    if (n.destination && (*n.destination >= s.community_sizes.size() || *n.destination == n.home))
      add("node " + std::to_string(i) + ": invalid destination");
  }
  for (std::size_t c = 0; c < s.community_sizes.size(); ++c)
    if (counted[c] != s.community_sizes[c])
      add("community " + std::to_string(c) + ": node count " + std::to_string(counted[c]) +
          " does not match size " + std::to_string(s.community_sizes[c]));

  // Channels and items.
  ItemId expected_first = 0;
  for (std::size_t j = 0; j < s.channels.size(); ++j) {
    const auto& ch = s.channels[j];
    if (ch.id != j) add("channel " + std::to_string(j) + ": id is not contiguous");
    if (ch.item_count < 1) add("channel " + std::to_string(j) + ": item_count must be >= 1");
    if (ch.first_item != expected_first)
      add("channel " + std::to_string(j) + ": item range is not contiguous");
    expected_first = ch.first_item + static_cast<ItemId>(std::max(ch.item_count, 0));
  }
  if (expected_first != s.items.size()) add("item count does not match channel item ranges");
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& it = s.items[i];
    if (it.id != i) add("item " + std::to_string(i) + ": id is not contiguous");
    if (it.channel >= s.channels.size()) {
      add("item " + std::to_string(i) + ": channel out of range");
      continue;
    }
    const auto& ch = s.channels[it.channel];
    if (i < ch.first_item || i >= ch.first_item + static_cast<ItemId>(ch.item_count))
      add("item " + std::to_string(i) + ": outside its channel's id range");
    if (it.holders.empty()) add("item " + std::to_string(i) + ": has no initial holder");
    for (auto h : it.holders)
      if (h >= s.nodes.size()) add("item " + std::to_string(i) + ": holder out of range");
  }

  // Popularity.
  const std::size_t scopes = s.popularity.size();
  if (scopes != 1 && scopes != s.community_sizes.size())
    add("popularity: expected one scope or one per community");
  for (std::size_t k = 0; k < scopes; ++k) {
    const auto& p = s.popularity[k];
    if (p.size() != s.channels.size()) {
      add("popularity scope " + std::to_string(k) + ": wrong number of channels");
      continue;
    }
    double sum = 0.0;
    for (double x : p) {
      if (x < 0.0 || x > 1.0) add("popularity scope " + std::to_string(k) + ": value outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      add("popularity scope " + std::to_string(k) + ": sums to " + std::to_string(sum) +
          ", not normalized to 1");
  }
  return v;
}

namespace presets {

ScenarioConfig validation() {
  ScenarioConfig c;
  c.name = "validation";
  c.communities = 3;
  c.nodes_per_community = 15;
  c.channels = 3;
  c.items_per_channel = 99;
  c.travellers_per_community = 2;
  c.destination_law = DestinationLaw::AllOthers;
  c.placement = {PlacementKind::UniformRandom, 2};
  c.recognition = {10, 10, 0.5, 0.9, 5};
  c.mobility.area_side_m = 1000.0;
  c.mobility.transmission_range_m = 20.0;
  c.mobility.mean_sojourn_s = 6000.0;
  c.sim_duration_s = 125000.0;
  return c;
}

ScenarioConfig urban() {
  ScenarioConfig c;
  c.name = "urban";
  c.communities = 50;
  c.nodes_per_community = 200;
  c.channels = 50;
  c.items_per_channel = 100;
  c.travellers_per_community = 49;
  c.destination_law = DestinationLaw::AllOthers;
  c.placement = {PlacementKind::UniformRandom, 2};
  c.recognition = {10, 10, 0.5, 0.9, 10};
  c.mobility.area_side_m = 1000.0;
  c.mobility.transmission_range_m = 20.0;
  c.mobility.mean_sojourn_s = 4000.0;
  c.sim_duration_s = 125000.0;
  return c;
}

ScenarioConfig regional() {
  ScenarioConfig c;
  c.name = "regional";
  c.communities = 250;
  c.nodes_per_community = 10000;
  c.channels = 10000;
  c.items_per_channel = 500;
  c.subscription_law = SubscriptionLaw::Global;
  c.travellers_per_community = 25;
  c.destination_law = DestinationLaw::ZipfDistance;
  c.placement = {PlacementKind::OnSubscribers, 2};
  c.recognition = {10, 10, 0.5, 0.9, 5000};
  c.mobility.area_side_m = 100000.0;
  c.mobility.transmission_range_m = 20.0;
  c.mobility.mean_sojourn_s = 4000.0;
  c.sim_duration_s = 125000.0;
  return c;
}

}  // namespace presets

}  // namespace rhsim
