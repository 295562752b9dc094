#include "rhsim/hybrid.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace rhsim {

namespace {

// Rejections tolerated before the remaining slots of A are realized at once.
constexpr long kLazyAttempts = 64;

bool contains(const std::vector<ItemId>& v, ItemId a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

// Draws single items with probability proportional to channel weight, uniform
// within a channel, excluding the traveller's channel and local items.
class ItemDraw {
 public:
  ItemDraw(const Scenario& s, const CommunityAvailability& avail, const TravellerState& t,
           const ChannelWeights& w, bool channel_recognition)
      : s_(s), avail_(avail), t_(t) {
    double total = 0.0;
    for (ChannelId x = 0; x < s.channels.size(); ++x) {
      if (x == t.subscription || !avail.recognized(x, channel_recognition)) continue;
      const int n = avail.available_count[x];
      if (n <= 0 || !(w[x] > 0.0)) continue;
      int local = 0;
      for (auto a : t.li)
        if (s.channel_of(a) == x && avail.available.test(a)) ++local;
      if (n - local <= 0) continue;
      distinct_ += static_cast<std::size_t>(n - local);
      total += w[x] * (n - local);
      channels_.push_back(x);
      cumulative_.push_back(total);
    }
  }

  std::size_t distinct() const { return distinct_; }

  ItemId operator()(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    const ChannelId x = channels_[static_cast<std::size_t>(it - cumulative_.begin())];
    const auto& ch = s_.channels[x];
    const auto n = static_cast<std::uint64_t>(avail_.available_count[x]);
    while (true) {
      const auto pos = avail_.available.select(ch.first_item, rng.below(n));
      const auto a = static_cast<ItemId>(pos);
      if (!contains(t_.li, a)) return a;
    }
  }

 private:
  const Scenario& s_;
  const CommunityAvailability& avail_;
  const TravellerState& t_;
  std::vector<ChannelId> channels_;
  std::vector<double> cumulative_;
  std::size_t distinct_ = 0;
};

// Slots of A are i.i.d. draws, so they are realized only when picked. A pick
// is a uniform slot whose item was not chosen yet; once rejections pile up
// the rest of A is realized and picks continue on multiplicities.
std::vector<ItemId> draw_distinct(const ItemDraw& draw, std::size_t slots, int capacity, Rng& rng) {
  std::unordered_map<std::uint64_t, ItemId> realized;
  std::vector<ItemId> out;
  long rejections = 0;
  const long limit = kLazyAttempts + 8L * capacity;
  while (static_cast<int>(out.size()) < capacity && rejections < limit) {
    const auto j = rng.below(slots);
    auto it = realized.find(j);
    if (it == realized.end()) it = realized.emplace(j, draw(rng)).first;
    if (contains(out, it->second))
      ++rejections;
    else
      out.push_back(it->second);
  }
  if (static_cast<int>(out.size()) >= capacity) return out;

  std::map<ItemId, std::uint64_t> multiplicity;
  for (const auto& [j, a] : realized) ++multiplicity[a];
  for (std::size_t k = realized.size(); k < slots; ++k) ++multiplicity[draw(rng)];
  std::vector<std::pair<ItemId, std::uint64_t>> pool;
  std::uint64_t remaining = 0;
  for (const auto& [a, m] : multiplicity)
    if (!contains(out, a)) {
      pool.emplace_back(a, m);
      remaining += m;
    }
  while (static_cast<int>(out.size()) < capacity && !pool.empty()) {
    auto u = rng.below(remaining);
    std::size_t k = 0;
    while (u >= pool[k].second) u -= pool[k++].second;
    out.push_back(pool[k].first);
    remaining -= pool[k].second;
    pool.erase(pool.begin() + static_cast<long>(k));
  }
  return out;
}

}  // namespace

std::vector<ItemId> eligible_items(const Scenario& s, const CommunityAvailability& avail,
                                   bool channel_recognition) {
  std::vector<ItemId> out;
  for (const auto& ch : s.channels) {
    if (!avail.recognized(ch.id, channel_recognition)) continue;
    for (ItemId a = ch.first_item; a < ch.first_item + static_cast<ItemId>(ch.item_count); ++a)
      if (avail.available.test(a)) out.push_back(a);
  }
  return out;
}

std::vector<ItemId> sample_opportunistic_cache(const Scenario& s, const CommunityAvailability& avail,
                                               const TravellerState& t, const ChannelWeights& w,
                                               bool channel_recognition, int capacity, Rng& rng) {
  if (capacity <= 0) return {};
  const ItemDraw draw(s, avail, t, w, channel_recognition);
  if (draw.distinct() == 0) return {};
  const std::size_t slots = static_cast<std::size_t>(std::max(avail.size, 1)) * capacity;
  auto out = draw_distinct(draw, slots, capacity, rng);
  std::sort(out.begin(), out.end());
  return out;
}

void on_traveller_exit(const Scenario& s, TravellerState& t, const CommunityAvailability& avail,
                       const ChannelWeights& w, bool channel_recognition, int capacity, Rng& rng) {
  const auto& ch = s.channels[t.subscription];
  for (int k = 0; k < ch.item_count; ++k)
    if (avail.available.test(ch.first_item + k)) t.sc.set(k);
  t.oc = sample_opportunistic_cache(s, avail, t, w, channel_recognition, capacity, rng);
}

std::vector<ItemId> on_traveller_enter(const Scenario& s, TravellerState& t,
                                       CommunityAvailability& avail, bool channel_recognition) {
  std::vector<ItemId> fresh;
  auto deposit = [&](ItemId a) {
    const auto x = s.channel_of(a);
    if (x != t.subscription && !avail.recognized(x, channel_recognition)) return;
    if (avail.available.set(a)) {
      ++avail.available_count[x];
      fresh.push_back(a);
    }
  };
  const auto& ch = s.channels[t.subscription];
  for (int k = 0; k < ch.item_count; ++k)
    if (t.sc.test(k)) deposit(ch.first_item + k);
  for (auto a : t.oc) deposit(a);
  for (auto a : t.li) deposit(a);
  for (int k = 0; k < ch.item_count; ++k)
    if (avail.available.test(ch.first_item + k)) t.sc.set(k);
  std::sort(fresh.begin(), fresh.end());
  return fresh;
}

namespace {

class HybridRun {
 public:
  HybridRun(const Scenario& s, std::uint64_t seed, const HybridOptions& o)
      : s_(s), o_(o), rng_(stream_seed(seed, Stream::Hybrid)), scopes_(default_scopes(s)),
        route_(s, scopes_), hits_(scopes_) {
    const auto ncomm = s.community_count();
    const auto nch = s.channels.size();
    avail_.resize(ncomm);
    for (CommunityId c = 0; c < ncomm; ++c) {
      auto& a = avail_[c];
      a.community = c;
      a.available = DynamicBitset(s.items.size());
      a.available_count.assign(nch, 0);
      a.subscribers.assign(nch, 0);
      a.size = s.community_sizes[c];
    }
    for (const auto& n : s.nodes) ++avail_[n.home].subscribers[n.subscription];
    for (const auto& it : s.items)
      for (auto h : it.holders) {
        auto& a = avail_[s.nodes[h].home];
        if (a.available.set(it.id)) ++a.available_count[it.channel];
      }

    traveller_of_.assign(s.nodes.size(), -1);
    present_.resize(ncomm);
    for (const auto& n : s.nodes) {
      if (!n.is_traveller) continue;
      TravellerState t;
      t.node = n.id;
      t.subscription = n.subscription;
      t.home = n.home;
      t.destination = n.destination.value_or(n.home);
      t.location = n.home;
      t.sc = DynamicBitset(static_cast<std::size_t>(s.channels[n.subscription].item_count));
      traveller_of_[n.id] = static_cast<long>(travellers_.size());
      travellers_.push_back(std::move(t));
      present_[n.home].push_back(n.id);
    }
    for (const auto& it : s.items)
      for (auto h : it.holders)
        if (traveller_of_[h] >= 0) travellers_[traveller_of_[h]].li.push_back(it.id);

    // Resident groups: non-travellers sharing (home, channel).
    std::vector<std::vector<int>> group_size(ncomm, std::vector<int>(nch, 0));
    for (const auto& n : s.nodes)
      if (!n.is_traveller) ++group_size[n.home][n.subscription];
    group_unit_.assign(ncomm, std::vector<long>(nch, -1));
    for (CommunityId c = 0; c < ncomm; ++c)
      for (ChannelId x = 0; x < nch; ++x)
        if (group_size[c][x] > 0)
          group_unit_[c][x] = static_cast<long>(
              hits_.add_unit(group_size[c][x], channel_share(c, x), route_.for_group(c, x)));
    for (auto& t : travellers_) {
      const auto& ch = s.channels[t.subscription];
      for (int k = 0; k < ch.item_count; ++k)
        if (avail_[t.home].available.test(ch.first_item + k)) t.sc.set(k);
      traveller_unit_.push_back(hits_.add_unit(1.0, traveller_hit(t), route_.for_group(t.home, t.subscription)));
    }

    weights_.assign(ncomm, ChannelWeights(nch, 1.0));
    dirty_.assign(ncomm, true);
  }

  HybridResult run(std::span<const TravellerEvent> schedule) {
    validate(schedule);
    const double duration = o_.duration_s > 0.0 ? o_.duration_s : s_.config.sim_duration_s;
    std::size_t next = 0;
    for (long k = 0;; ++k) {
      const double t = k * o_.sampling_interval_s;
      if (t > duration) break;
      for (; next < schedule.size() && schedule[next].time <= t; ++next) process(schedule[next]);
      hits_.sample(t, o_.replica, result_.hit);
    }
    std::size_t bytes = 0;
    for (const auto& a : avail_) bytes += a.available.memory_bytes();
    result_.availability_bytes = bytes;
    return std::move(result_);
  }

 private:
  double channel_share(CommunityId c, ChannelId x) const {
    const int k = s_.channels[x].item_count;
    return k > 0 ? static_cast<double>(avail_[c].available_count[x]) / k : 1.0;
  }

  double traveller_hit(const TravellerState& t) const {
    const int k = s_.channels[t.subscription].item_count;
    return k > 0 ? static_cast<double>(t.sc.count()) / k : 1.0;
  }

  void validate(std::span<const TravellerEvent> schedule) const {
    std::vector<CommunityId> where(s_.nodes.size());
    for (const auto& n : s_.nodes) where[n.id] = n.home;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const auto& e = schedule[i];
      auto fail = [&](const std::string& why) {
        throw std::invalid_argument("traveller schedule event " + std::to_string(i) + ": " + why);
      };
      if (e.traveller >= s_.nodes.size() || traveller_of_[e.traveller] < 0) fail("not a traveller");
      if (i > 0 && event_before(e, schedule[i - 1])) fail("out of order");
      const auto& t = travellers_[traveller_of_[e.traveller]];
      if (e.community != t.home && e.community != t.destination) fail("community off the route");
      if (e.kind == TravelKind::Exit) {
        if (where[e.traveller] != e.community) fail("exit from a community it is not in");
        where[e.traveller] = kNoCommunity;
      } else {
        if (where[e.traveller] != kNoCommunity) fail("enter while not in transit");
        where[e.traveller] = e.community;
      }
    }
  }

  const ChannelWeights& weights_for(CommunityId c) {
    if (o_.mode == HybridMode::EqualSteadyState || !dirty_[c]) return weights_[c];
    dirty_[c] = false;
    const auto& a = avail_[c];
    CommunityModelConfig m;
    m.params = s_.config.recognition;
    m.community_size = a.size;
    m.encounter_rate = o_.encounter_rate > 0.0 ? o_.encounter_rate : s_.config.mobility.encounter_rate;
    m.epsilon = s_.config.hybrid.analytic_epsilon;
    m.window = s_.config.hybrid.analytic_window;
    m.max_steps = s_.config.hybrid.analytic_max_steps;
    const auto subs = s_.subscriber_counts(c);
    for (auto n : subs) m.pop.push_back(a.size > 0 ? static_cast<double>(n) / a.size : 0.0);
    std::vector<ChannelId> present;
    for (ChannelId x = 0; x < s_.channels.size(); ++x) {
      if (a.available_count[x] == 0) continue;
      m.classes.push_back({x, static_cast<double>(a.available_count[x]), 1.0 / std::max(a.size, 1)});
      present.push_back(x);
    }
    auto& w = weights_[c];
    std::fill(w.begin(), w.end(), 0.0);
    if (!m.classes.empty()) {
      const auto key = std::make_pair(c, a.available_count);
      auto it = memo_.find(key);
      if (it == memo_.end()) {
        const auto r = run_to_steady_state(m, initial_state(m), {false, 1});
        ++result_.model_solves;
        it = memo_.emplace(key, r.r).first;
      }
      for (std::size_t k = 0; k < present.size(); ++k) w[present[k]] = it->second[k];
    }
    return w;
  }

  void credit(CommunityId c, const std::vector<ItemId>& fresh) {
    std::vector<ChannelId> touched;
    for (auto a : fresh) {
      const auto x = s_.channel_of(a);
      if (touched.empty() || touched.back() != x) touched.push_back(x);
    }
    for (auto x : touched)
      if (group_unit_[c][x] >= 0) hits_.raise(static_cast<std::size_t>(group_unit_[c][x]), channel_share(c, x));
    for (auto n : present_[c]) {
      auto& t = travellers_[traveller_of_[n]];
      if (!std::binary_search(touched.begin(), touched.end(), t.subscription)) continue;
      const auto& ch = s_.channels[t.subscription];
      for (auto a : fresh)
        if (s_.channel_of(a) == t.subscription) t.sc.set(a - ch.first_item);
      hits_.raise(traveller_unit_[traveller_of_[n]], traveller_hit(t));
    }
  }

  void remove_present(CommunityId c, NodeId n) {
    auto& p = present_[c];
    p.erase(std::find(p.begin(), p.end(), n));
  }

  void meet_in_transit(TravellerState& t) {
    const auto key = pair_key(t.home, t.destination);
    auto& others = transit_[key];
    for (auto m : others) {
      auto& u = travellers_[traveller_of_[m]];
      exchange_subscribed(t, u);
      exchange_subscribed(u, t);
      hits_.raise(traveller_unit_[traveller_of_[m]], traveller_hit(u));
    }
    hits_.raise(traveller_unit_[traveller_of_[t.node]], traveller_hit(t));
    others.push_back(t.node);
  }

  void exchange_subscribed(TravellerState& to, const TravellerState& from) {
    const auto& ch = s_.channels[to.subscription];
    auto take = [&](ItemId a) {
      if (s_.channel_of(a) == to.subscription) to.sc.set(a - ch.first_item);
    };
    if (from.subscription == to.subscription)
      for (int k = 0; k < ch.item_count; ++k)
        if (from.sc.test(k)) to.sc.set(k);
    for (auto a : from.oc) take(a);
    for (auto a : from.li) take(a);
  }

  bool transit_meetings() const {
    return s_.config.mobility.in_transit_contacts &&
           s_.config.mobility.travel_time == TravelTimeMode::DistanceOverSpeed;
  }

  static std::uint64_t pair_key(CommunityId a, CommunityId b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
  }

  void process(const TravellerEvent& e) {
    if (result_.first_event_s < 0.0) result_.first_event_s = e.time;
    auto& t = travellers_[traveller_of_[e.traveller]];
    auto& a = avail_[e.community];
    int deposited = 0;
    if (e.kind == TravelKind::Exit) {
      const auto& w = weights_for(e.community);
      on_traveller_exit(s_, t, a, w, o_.channel_recognition, s_.config.recognition.oc_capacity, rng_);
      hits_.raise(traveller_unit_[traveller_of_[e.traveller]], traveller_hit(t));
      --a.subscribers[t.subscription];
      remove_present(e.community, t.node);
      t.location = kNoCommunity;
      if (transit_meetings()) meet_in_transit(t);
    } else {
      if (transit_meetings()) {
        auto& others = transit_[pair_key(t.home, t.destination)];
        others.erase(std::find(others.begin(), others.end(), t.node));
      }
      t.location = e.community;
      ++a.subscribers[t.subscription];
      present_[e.community].push_back(t.node);
      const auto fresh = on_traveller_enter(s_, t, a, o_.channel_recognition);
      deposited = static_cast<int>(fresh.size());
      hits_.raise(traveller_unit_[traveller_of_[e.traveller]], traveller_hit(t));
      if (!fresh.empty()) {
        dirty_[e.community] = true;
        credit(e.community, fresh);
      }
    }
    result_.event_hit.emplace_back(e.time, hits_.value(0));
    if (o_.event_log) result_.events.push_back({e.time, e.traveller, e.kind, e.community, deposited});
  }

  const Scenario& s_;
  HybridOptions o_;
  Rng rng_;
  std::vector<Scope> scopes_;
  ScopeIndex route_;
  HitAccumulator hits_;
  std::vector<CommunityAvailability> avail_;
  std::vector<TravellerState> travellers_;
  std::vector<long> traveller_of_;
  std::vector<std::vector<NodeId>> present_;
  std::vector<std::vector<long>> group_unit_;
  std::vector<std::size_t> traveller_unit_;
  std::vector<ChannelWeights> weights_;
  std::vector<bool> dirty_;
  std::map<std::pair<CommunityId, std::vector<int>>, std::vector<double>> memo_;
  std::map<std::uint64_t, std::vector<NodeId>> transit_;
  HybridResult result_;
};

}  // namespace

HybridResult run_hybrid(const Scenario& s, std::span<const TravellerEvent> schedule,
                        std::uint64_t seed, const HybridOptions& options) {
  if (!(options.sampling_interval_s > 0.0)) throw std::invalid_argument("sampling interval must be > 0");
  HybridRun run(s, seed, options);
  return run.run(schedule);
}

HybridResult run_hybrid(const Scenario& s, std::uint64_t seed, const HybridOptions& options) {
  const double duration = options.duration_s > 0.0 ? options.duration_s : s.config.sim_duration_s;
  const auto schedule = generate_traveller_schedule(s, build_layout(s), seed, duration);
  return run_hybrid(s, schedule, seed, options);
}

}  // namespace rhsim
