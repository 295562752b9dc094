#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rhsim/rng.hpp"
#include "rhsim/scenario.hpp"

namespace rhsim {

/// Item id -> channel id lookup shared by every node.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  explicit ItemCatalog(std::vector<ChannelId> channel_of) : channel_of_(std::move(channel_of)) {}
  explicit ItemCatalog(const Scenario& s);

  ChannelId channel(ItemId a) const { return channel_of_[a]; }
  std::size_t size() const { return channel_of_.size(); }

 private:
  std::vector<ChannelId> channel_of_;
};

/// One node's protocol state: local items, subscribed-channel cache,
/// opportunistic cache and the two recognition caches.
struct NodeCaches {
  ChannelId subscription = 0;
  std::set<ItemId> li;
  std::set<ItemId> sc;
  std::vector<ItemId> oc;  // ranked, best first; at most B entries
  std::map<ChannelId, int> cc;
  std::map<ItemId, int> ic;

  bool holds(ItemId a) const;
  bool in_oc(ItemId a) const;
};

/// What a node can observe of an encountered peer. Refers to a snapshot that
/// must outlive the view.
struct PeerView {
  ChannelId subscription = 0;
  const std::set<ItemId>* li = nullptr;
  const std::set<ItemId>* sc = nullptr;
  std::span<const ItemId> oc;

  static PeerView of(const NodeCaches& n) { return {n.subscription, &n.li, &n.sc, n.oc}; }
  bool visible(ItemId a) const;
};

struct RecognitionDelta {
  int cc_increments = 0;
  int cc_decrements = 0;
  int ic_increments = 0;
  int ic_decrements = 0;
};

struct ExchangeOutcome {
  std::vector<ItemId> sc_added;
  std::vector<ItemId> oc;          // new contents
  std::vector<ItemId> oc_dropped;  // previously held, no longer in oc
  RecognitionDelta counters;
};

/// Counter updates for one encounter. The peer's channel counter goes up by one
/// (saturating at R_c); every other tracked channel at level i >= 1 goes down by
/// one with probability alpha^i. Items visible at the peer go up (saturating at
/// R); every other tracked item at level i >= 1 goes down with probability
/// gamma^i. Random draws are taken in ascending id order.
RecognitionDelta update_recognition(NodeCaches& node, const PeerView& peer,
                                    const RecognitionParams& params, Rng& rng);

/// Copies every peer item of the node's channel into sc; returns the additions.
std::vector<ItemId> fetch_subscribed(NodeCaches& node, const PeerView& peer,
                                     const ItemCatalog& catalog);

/// Take-the-best ranking of the opportunistic cache after an encounter.
/// Candidates are own-oc and peer oc/li items of recognized foreign channels
/// that are not local items; peer items already recognized before the
/// encounter are never fetched, own items whose level fell to 0 are dropped.
/// Ascending item level, then peer before own, then ascending id.
std::vector<ItemId> select_oc_contents(const NodeCaches& node, const PeerView& peer,
                                       const RecognitionParams& params,
                                       const std::map<ItemId, int>& pre_encounter_ic,
                                       const ItemCatalog& catalog);

/// Full exchange for one side, given the other side's pre-encounter snapshot.
ExchangeOutcome encounter_side(NodeCaches& node, const NodeCaches& peer_snapshot,
                               const RecognitionParams& params, const ItemCatalog& catalog,
                               Rng& rng);

/// Simultaneous exchange: each side sees the other's pre-encounter caches.
/// Side `a` draws its random numbers before side `b`.
std::pair<ExchangeOutcome, ExchangeOutcome> encounter(NodeCaches& a, NodeCaches& b,
                                                      const RecognitionParams& params,
                                                      const ItemCatalog& catalog, Rng& rng);

/// Structural invariants of one node; empty when all hold.
std::vector<std::string> check_invariants(const NodeCaches& node, const RecognitionParams& params,
                                          const ItemCatalog& catalog);

/// Initial caches of every node in a scenario: local items from the placement,
/// own-channel local items also counted in sc.
std::vector<NodeCaches> initial_caches(const Scenario& s);

}  // namespace rhsim
