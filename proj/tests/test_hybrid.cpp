#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "rhsim/hybrid.hpp"
#include "rhsim/output.hpp"

using namespace rhsim;

namespace {

// Channels of `per` items each, all three communities share nothing but ids.
Scenario items_only(int channels, int per) {
  std::vector<std::pair<ChannelId, std::vector<ItemId>>> nodes;
  std::vector<ItemId> all;
  for (int a = 0; a < channels * per; ++a) all.push_back(static_cast<ItemId>(a));
  nodes.push_back({0, all});
  return fixtures::hand_scenario(nodes, channels, per, {1, 1, 0.0, 0.0, 5});
}

CommunityAvailability availability(const Scenario& s, const std::vector<ItemId>& items,
                                   std::vector<int> subscribers, int size) {
  CommunityAvailability a;
  a.available = DynamicBitset(s.item_count());
  a.available_count.assign(s.channels.size(), 0);
  for (auto x : items) {
    a.available.set(x);
    ++a.available_count[s.channel_of(x)];
  }
  a.subscribers = std::move(subscribers);
  a.size = size;
  return a;
}

TravellerState traveller_on(const Scenario& s, ChannelId sub) {
  TravellerState t;
  t.subscription = sub;
  t.sc = DynamicBitset(static_cast<std::size_t>(s.channels[sub].item_count));
  return t;
}

std::vector<ItemId> range(ItemId lo, ItemId hi) {
  std::vector<ItemId> v;
  for (ItemId a = lo; a < hi; ++a) v.push_back(a);
  return v;
}

// Literal sampling: materialize the multiset, then pick distinct ids by
// uniform slot with rejection of repeats.
std::vector<ItemId> reference_sample(const std::vector<ItemId>& e, const std::vector<double>& weight,
                                     std::size_t slots, int b, Rng& rng) {
  std::vector<double> cum;
  double total = 0.0;
  for (double w : weight) cum.push_back(total += w);
  std::vector<ItemId> pool;
  for (std::size_t k = 0; k < slots; ++k) {
    const double u = rng.uniform() * total;
    pool.push_back(e[std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()]);
  }
  std::set<ItemId> distinct(pool.begin(), pool.end());
  const std::size_t want = std::min<std::size_t>(b, distinct.size());
  std::set<ItemId> chosen;
  while (chosen.size() < want) chosen.insert(pool[rng.below(pool.size())]);
  return {chosen.begin(), chosen.end()};
}

}  // namespace

TEST_CASE("eligibility follows channel recognition") {
  auto s = items_only(3, 4);
  auto avail = availability(s, {0, 1, 4, 5, 9}, {2, 0, 1}, 10);
  CHECK(eligible_items(s, avail, true) == std::vector<ItemId>{0, 1, 9});
  CHECK(eligible_items(s, avail, false) == std::vector<ItemId>{0, 1, 4, 5, 9});
}

TEST_CASE("tiny eligible sets") {
  auto s = items_only(2, 4);
  auto t = traveller_on(s, 0);
  Rng rng(1);
  auto one = availability(s, {6}, {1, 1}, 15);
  CHECK(sample_opportunistic_cache(s, one, t, {1.0, 1.0}, true, 3, rng) == std::vector<ItemId>{6});
  auto own_only = availability(s, {0, 1, 2}, {1, 1}, 15);
  CHECK(sample_opportunistic_cache(s, own_only, t, {1.0, 1.0}, true, 3, rng).empty());
  auto unrecognized = availability(s, {5, 6}, {1, 0}, 15);
  CHECK(sample_opportunistic_cache(s, unrecognized, t, {1.0, 1.0}, true, 3, rng).empty());
  CHECK(sample_opportunistic_cache(s, unrecognized, t, {1.0, 1.0}, false, 3, rng).size() == 2);
}

TEST_CASE("local items are never sampled") {
  auto s = items_only(2, 4);
  auto t = traveller_on(s, 0);
  t.li = {4, 5};
  auto avail = availability(s, range(0, 8), {1, 1}, 15);
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    auto oc = sample_opportunistic_cache(s, avail, t, {1.0, 1.0}, true, 2, rng);
    CHECK(oc == std::vector<ItemId>{6, 7});
  }
}

TEST_CASE("uniform weights give uniform inclusion") {
  auto s = items_only(2, 100);
  auto t = traveller_on(s, 0);
  auto avail = availability(s, range(100, 200), {1, 1}, 15);
  Rng rng(2718);
  std::vector<double> hits(100, 0.0);
  const int trials = 100000;
  for (int k = 0; k < trials; ++k) {
    auto oc = sample_opportunistic_cache(s, avail, t, {1.0, 1.0}, true, 5, rng);
    REQUIRE(oc.size() == 5);
    for (auto a : oc) hits[a - 100] += 1.0;
  }
  const double expected = trials * 5.0 / 100.0;
  double chi2 = 0.0;
  for (double h : hits) chi2 += (h - expected) * (h - expected) / expected;
  boost::math::chi_squared dist(99);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("lazy sampling matches the materialized multiset") {
  auto s = items_only(3, 3);
  auto t = traveller_on(s, 0);
  auto avail = availability(s, {3, 4, 5, 6, 7}, {1, 1, 1}, 4);
  const ChannelWeights w{1.0, 1.0, 4.0};
  const std::vector<ItemId> e{3, 4, 5, 6, 7};
  const std::vector<double> we{1, 1, 1, 4, 4};
  const int trials = 60000;
  std::map<std::vector<ItemId>, double> lib, ref;
  Rng r1(10), r2(20);
  for (int k = 0; k < trials; ++k) {
    lib[sample_opportunistic_cache(s, avail, t, w, true, 3, r1)] += 1.0 / trials;
    ref[reference_sample(e, we, 4 * 3, 3, r2)] += 1.0 / trials;
  }
  for (auto& [set, p] : ref) {
    CAPTURE(set.size());
    CHECK(std::abs(lib[set] - p) < 0.01);
  }
  for (auto& [set, p] : lib) CHECK(ref.count(set));
}

TEST_CASE("a small multiset can hold fewer distinct items than the capacity") {
  auto s = items_only(2, 50);
  auto t = traveller_on(s, 0);
  auto avail = availability(s, range(50, 100), {1, 1}, 1);
  Rng rng(4);
  std::map<std::size_t, int> sizes;
  for (int k = 0; k < 5000; ++k) ++sizes[sample_opportunistic_cache(s, avail, t, {1, 1}, true, 5, rng).size()];
  // Five draws from fifty items repeat with probability about 0.19.
  CHECK(sizes[4] > 600);
  CHECK(sizes[5] > 3500);
}

TEST_CASE("exit collects the traveller's channel") {
  auto s = items_only(2, 4);
  auto t = traveller_on(s, 1);
  auto avail = availability(s, {1, 5, 7}, {1, 1}, 10);
  Rng rng(1);
  on_traveller_exit(s, t, avail, {1, 1}, true, 2, rng);
  CHECK(t.sc.test(1));
  CHECK(t.sc.test(3));
  CHECK(t.sc.count() == 2);
  CHECK(t.oc == std::vector<ItemId>{1});
}

TEST_CASE("deposits") {
  auto s = items_only(3, 4);
  SUBCASE("nothing new") {
    auto t = traveller_on(s, 0);
    t.sc.set(0);
    t.oc = {5};
    auto avail = availability(s, {0, 5}, {1, 1, 1}, 10);
    CHECK(on_traveller_enter(s, t, avail, true).empty());
    CHECK(avail.available.count() == 2);
  }
  SUBCASE("own channel always deposits") {
    auto t = traveller_on(s, 2);
    t.sc.set(1);
    auto avail = availability(s, {}, {3, 3, 0}, 10);
    CHECK(on_traveller_enter(s, t, avail, true) == std::vector<ItemId>{9});
    CHECK(avail.available.test(9));
    CHECK(avail.available_count[2] == 1);
  }
  SUBCASE("unsubscribed channel is held back") {
    auto t = traveller_on(s, 0);
    t.oc = {5, 9};
    t.li = {10};
    auto avail = availability(s, {}, {1, 0, 1}, 10);
    CHECK(on_traveller_enter(s, t, avail, true) == std::vector<ItemId>{9, 10});
    CHECK_FALSE(avail.available.test(5));
    auto off = availability(s, {}, {1, 0, 1}, 10);
    CHECK(on_traveller_enter(s, t, off, false) == std::vector<ItemId>{5, 9, 10});
  }
  SUBCASE("arrival picks up the local channel") {
    auto t = traveller_on(s, 1);
    auto avail = availability(s, {4, 6}, {1, 1, 1}, 10);
    on_traveller_enter(s, t, avail, true);
    CHECK(t.sc.count() == 2);
  }
}

TEST_CASE("one community without travellers stays flat") {
  auto cfg = presets::validation();
  cfg.communities = 1;
  cfg.travellers_per_community = 0;
  cfg.sim_duration_s = 20000;
  auto s = generate_scenario(cfg, 5);
  HybridOptions opt;
  auto res = run_hybrid(s, 5, opt);
  REQUIRE(!res.hit.empty());
  std::map<Scope, double> first;
  for (const auto& h : res.hit) {
    auto [it, fresh] = first.try_emplace(h.scope, h.value);
    CHECK(h.value == it->second);
  }
  CHECK(res.events.empty());
}

TEST_CASE("hybrid series are monotone and deterministic") {
  auto cfg = presets::validation();
  cfg.sim_duration_s = 60000;
  auto s = generate_scenario(cfg, 8);
  for (auto mode : {HybridMode::EqualSteadyState, HybridMode::AnalyticDriven}) {
    HybridOptions opt;
    opt.mode = mode;
    opt.event_log = true;
    auto a = run_hybrid(s, 8, opt);
    auto b = run_hybrid(s, 8, opt);
    CHECK(hitrate_csv(a.hit) == hitrate_csv(b.hit));
    CHECK(events_csv(a.events) == events_csv(b.events));
    std::map<Scope, double> last;
    for (const auto& h : a.hit) {
      CHECK(h.value <= 1.0);
      auto [it, fresh] = last.try_emplace(h.scope, h.value);
      CHECK(h.value >= it->second);
      it->second = h.value;
    }
    for (std::size_t k = 1; k < a.event_hit.size(); ++k)
      CHECK(a.event_hit[k].second >= a.event_hit[k - 1].second);
    CHECK(a.first_event_s > 0.0);
    CHECK(!a.events.empty());
    if (mode == HybridMode::AnalyticDriven) CHECK(a.model_solves > 0);
  }
}

TEST_CASE("both modes agree on the validation scenario") {
  auto s = generate_scenario(presets::validation(), 3);
  double gap = 0.0;
  std::vector<double> final_hit;
  for (auto mode : {HybridMode::EqualSteadyState, HybridMode::AnalyticDriven}) {
    HybridOptions opt;
    opt.mode = mode;
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      auto r = run_hybrid(s, replica_seed(3, k), opt);
      for (const auto& h : r.hit)
        if (h.scope == Scope::global() && h.time_s == s.config.sim_duration_s) sum += h.value / 3.0;
    }
    final_hit.push_back(sum);
  }
  gap = std::abs(final_hit[0] - final_hit[1]);
  MESSAGE("equal " << final_hit[0] << " analytic " << final_hit[1]);
  CHECK(gap <= 0.05);
}

TEST_CASE("recognition on beats recognition off") {
  auto cfg = presets::validation();
  cfg.communities = 4;
  cfg.nodes_per_community = 10;
  cfg.channels = 30;
  cfg.items_per_channel = 20;
  cfg.travellers_per_community = 3;
  cfg.subscription_law = SubscriptionLaw::Global;
  cfg.placement = {PlacementKind::OnSubscribers, 2};
  cfg.recognition.oc_capacity = 5;
  cfg.mobility.mean_sojourn_s = 4000;
  cfg.sim_duration_s = 40000;
  auto s = generate_scenario(cfg, 13);
  auto layout = build_layout(s);
  std::map<double, double> on, off;
  for (int k = 0; k < 4; ++k) {
    const auto seed = replica_seed(13, k);
    auto sched = generate_traveller_schedule(s, layout, seed, cfg.sim_duration_s);
    HybridOptions opt;
    auto a = run_hybrid(s, sched, seed, opt);
    opt.channel_recognition = false;
    auto b = run_hybrid(s, sched, seed, opt);
    for (const auto& h : a.hit)
      if (h.scope == Scope::global()) on[h.time_s] += h.value;
    for (const auto& h : b.hit)
      if (h.scope == Scope::global()) off[h.time_s] += h.value;
  }
  for (auto [t, v] : on) {
    CAPTURE(t);
    CHECK(v >= off.at(t) - 1e-12);
  }
}

TEST_CASE("schedule mismatches are rejected") {
  auto s = generate_scenario(presets::validation(), 1);
  NodeId resident = 0;
  while (s.nodes[resident].is_traveller) ++resident;
  NodeId trav = 0;
  while (!s.nodes[trav].is_traveller) ++trav;
  HybridOptions opt;
  std::vector<TravellerEvent> not_traveller{{10, resident, TravelKind::Exit, s.nodes[resident].home}};
  CHECK_THROWS_AS(run_hybrid(s, not_traveller, 1, opt), std::invalid_argument);
  std::vector<TravellerEvent> wrong_first{{10, trav, TravelKind::Enter, *s.nodes[trav].destination}};
  CHECK_THROWS_AS(run_hybrid(s, wrong_first, 1, opt), std::invalid_argument);
  std::vector<TravellerEvent> unsorted{{10, trav, TravelKind::Exit, s.nodes[trav].home},
                                       {5, trav, TravelKind::Enter, *s.nodes[trav].destination}};
  CHECK_THROWS_AS(run_hybrid(s, unsorted, 1, opt), std::invalid_argument);
  std::vector<TravellerEvent> wrong_place{{10, trav, TravelKind::Exit, *s.nodes[trav].destination}};
  CHECK_THROWS_AS(run_hybrid(s, wrong_place, 1, opt), std::invalid_argument);
}

TEST_CASE("bitset") {
  DynamicBitset b(200);
  CHECK(b.set(3));
  CHECK_FALSE(b.set(3));
  b.set(64);
  b.set(130);
  b.set(199);
  CHECK(b.count() == 4);
  CHECK(b.count(4, 131) == 2);
  CHECK(b.select(0, 0) == 3);
  CHECK(b.select(0, 2) == 130);
  CHECK(b.select(65, 1) == 199);
  CHECK(b.select(65, 2) == 200);
  CHECK(b.memory_bytes() == 32);
}
