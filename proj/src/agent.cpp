#include "rhsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace rhsim {

ItemCatalog::ItemCatalog(const Scenario& s) {
  channel_of_.reserve(s.items.size());
  for (const auto& it : s.items) channel_of_.push_back(it.channel);
}

bool NodeCaches::holds(ItemId a) const { return li.count(a) || sc.count(a) || in_oc(a); }

bool NodeCaches::in_oc(ItemId a) const { return std::find(oc.begin(), oc.end(), a) != oc.end(); }

bool PeerView::visible(ItemId a) const {
  return li->count(a) || sc->count(a) || std::find(oc.begin(), oc.end(), a) != oc.end();
}

RecognitionDelta update_recognition(NodeCaches& node, const PeerView& peer,
                                    const RecognitionParams& params, Rng& rng) {
  RecognitionDelta d;

  // Make sure the peer's channel is tracked, then walk cc in id order.
  node.cc.try_emplace(peer.subscription, 0);
  for (auto& [channel, level] : node.cc) {
    if (channel == peer.subscription) {
      if (level < params.channel_threshold) {
        ++level;
        ++d.cc_increments;
      }
    } else if (level >= 1 && rng.bernoulli(std::pow(params.channel_forget, level))) {
      --level;
      ++d.cc_decrements;
    }
  }

  // Every visible item becomes tracked; then one ordered pass.
  auto track = [&](ItemId a) { node.ic.try_emplace(a, 0); };
  for (auto a : *peer.li) track(a);
  for (auto a : *peer.sc) track(a);
  for (auto a : peer.oc) track(a);
  for (auto& [item, level] : node.ic) {
    if (peer.visible(item)) {
      if (level < params.item_threshold) {
        ++level;
        ++d.ic_increments;
      }
    } else if (level >= 1 && rng.bernoulli(std::pow(params.item_forget, level))) {
      --level;
      ++d.ic_decrements;
    }
  }
  return d;
}

std::vector<ItemId> fetch_subscribed(NodeCaches& node, const PeerView& peer,
                                     const ItemCatalog& catalog) {
  std::vector<ItemId> added;
  auto take = [&](ItemId a) {
    if (catalog.channel(a) == node.subscription && node.sc.insert(a).second) added.push_back(a);
  };
  for (auto a : *peer.li) take(a);
  for (auto a : *peer.sc) take(a);
  for (auto a : peer.oc) take(a);
  std::sort(added.begin(), added.end());
  return added;
}

std::vector<ItemId> select_oc_contents(const NodeCaches& node, const PeerView& peer,
                                       const RecognitionParams& params,
                                       const std::map<ItemId, int>& pre_encounter_ic,
                                       const ItemCatalog& catalog) {
  auto level_of = [](const std::map<ItemId, int>& ic, ItemId a) {
    auto it = ic.find(a);
    return it == ic.end() ? 0 : it->second;
  };
  auto channel_recognized = [&](ItemId a) {
    auto it = node.cc.find(catalog.channel(a));
    return it != node.cc.end() && it->second >= params.channel_threshold;
  };
  auto storable = [&](ItemId a) {
    return catalog.channel(a) != node.subscription && !node.li.count(a) && channel_recognized(a);
  };

  // (level, from_own, id)
  std::vector<std::tuple<int, int, ItemId>> candidates;
  for (auto a : node.oc) {
    const int level = level_of(node.ic, a);
    if (storable(a) && level >= 1) candidates.emplace_back(level, 1, a);
  }
  auto consider_peer_item = [&](ItemId a) {
    if (node.in_oc(a) || !storable(a)) return;
    if (level_of(pre_encounter_ic, a) >= params.item_threshold) return;
    candidates.emplace_back(level_of(node.ic, a), 0, a);
  };
  for (auto a : peer.oc) consider_peer_item(a);
  for (auto a : *peer.li) consider_peer_item(a);

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<ItemId> out;
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(params.oc_capacity), candidates.size());
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(std::get<2>(candidates[i]));
  return out;
}

ExchangeOutcome encounter_side(NodeCaches& node, const NodeCaches& peer_snapshot,
                               const RecognitionParams& params, const ItemCatalog& catalog,
                               Rng& rng) {
  ExchangeOutcome out;
  const PeerView peer = PeerView::of(peer_snapshot);
  const auto pre_ic = node.ic;
  out.counters = update_recognition(node, peer, params, rng);
  out.sc_added = fetch_subscribed(node, peer, catalog);
  out.oc = select_oc_contents(node, peer, params, pre_ic, catalog);
  for (auto a : node.oc)
    if (std::find(out.oc.begin(), out.oc.end(), a) == out.oc.end()) out.oc_dropped.push_back(a);
  node.oc = out.oc;
  return out;
}

std::pair<ExchangeOutcome, ExchangeOutcome> encounter(NodeCaches& a, NodeCaches& b,
                                                      const RecognitionParams& params,
                                                      const ItemCatalog& catalog, Rng& rng) {
  const NodeCaches a_pre = a;
  const NodeCaches b_pre = b;
  auto oa = encounter_side(a, b_pre, params, catalog, rng);
  auto ob = encounter_side(b, a_pre, params, catalog, rng);
  return {std::move(oa), std::move(ob)};
}

std::vector<std::string> check_invariants(const NodeCaches& node, const RecognitionParams& params,
                                          const ItemCatalog& catalog) {
  std::vector<std::string> v;
  if (node.oc.size() > static_cast<std::size_t>(params.oc_capacity)) v.push_back("oc exceeds capacity");
  std::set<ItemId> seen;
  for (auto a : node.oc) {
    if (!seen.insert(a).second) v.push_back("oc holds item " + std::to_string(a) + " twice");
    if (catalog.channel(a) == node.subscription)
      v.push_back("oc holds subscribed-channel item " + std::to_string(a));
    if (node.li.count(a)) v.push_back("oc holds local item " + std::to_string(a));
  }
  for (auto a : node.sc)
    if (catalog.channel(a) != node.subscription)
      v.push_back("sc holds foreign item " + std::to_string(a));
  for (const auto& [c, level] : node.cc)
    if (level < 0 || level > params.channel_threshold)
      v.push_back("channel counter out of range for " + std::to_string(c));
  for (const auto& [a, level] : node.ic)
    if (level < 0 || level > params.item_threshold)
      v.push_back("item counter out of range for " + std::to_string(a));
  return v;
}

std::vector<NodeCaches> initial_caches(const Scenario& s) {
  std::vector<NodeCaches> caches(s.nodes.size());
  for (const auto& n : s.nodes) caches[n.id].subscription = n.subscription;
  for (const auto& it : s.items) {
    for (auto h : it.holders) {
      caches[h].li.insert(it.id);
      if (caches[h].subscription == it.channel) caches[h].sc.insert(it.id);
    }
  }
  return caches;
}

}  // namespace rhsim
