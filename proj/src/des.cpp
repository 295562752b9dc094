#include "rhsim/des.hpp"

#include <algorithm>
#include <string>

#include "rhsim/rng.hpp"

namespace rhsim {

namespace {

struct ResidentIndex {
  std::vector<std::vector<NodeId>> members;
  std::vector<std::vector<int>> subscribers;  // [community][channel]
};

ResidentIndex index_residents(const Scenario& s) {
  ResidentIndex r;
  r.members.resize(s.community_count());
  for (CommunityId c = 0; c < s.community_count(); ++c) {
    r.members[c] = s.members_of(c);
    r.subscribers.push_back(s.subscriber_counts(c));
  }
  return r;
}

void record_replication(const Scenario& s, const ResidentIndex& idx,
                        const std::vector<NodeCaches>& caches, double t,
                        std::vector<ReplicationSample>& out) {
  const auto nch = s.channels.size();
  std::vector<long> any(nch), oc(nch);
  for (CommunityId c = 0; c < s.community_count(); ++c) {
    std::fill(any.begin(), any.end(), 0);
    std::fill(oc.begin(), oc.end(), 0);
    for (auto n : idx.members[c]) {
      const auto& node = caches[n];
      // li and sc can overlap on own-channel items; count each item once.
      for (auto a : node.li)
        if (!node.sc.count(a) && !node.in_oc(a)) ++any[s.channel_of(a)];
      for (auto a : node.sc) ++any[s.channel_of(a)];
      for (auto a : node.oc) {
        ++any[s.channel_of(a)];
        ++oc[s.channel_of(a)];
      }
    }
    const double nc = static_cast<double>(idx.members[c].size());
    for (ChannelId x = 0; x < nch; ++x) {
      const double k = s.channels[x].item_count;
      const double non_subs = nc - idx.subscribers[c][x];
      ReplicationSample r{t, c, x, 0.0, 0.0};
      if (k > 0 && nc > 0) r.any = any[x] / (k * nc);
      if (k > 0 && non_subs > 0) r.oc = oc[x] / (k * non_subs);
      out.push_back(r);
    }
  }
}

void audit_encounter(const NodeCaches& before, const NodeCaches& after, const NodeCaches& peer,
                     const RecognitionParams& params, const ItemCatalog& catalog) {
  const auto bad = check_invariants(after, params, catalog);
  if (!bad.empty()) throw std::logic_error("node invariant violated: " + bad.front());
  auto check = [&](ItemId a) {
    if (!before.holds(a) && !peer.holds(a))
      throw std::logic_error("item " + std::to_string(a) + " appeared without a source");
  };
  for (auto a : after.sc) check(a);
  for (auto a : after.oc) check(a);
}

}  // namespace

DesResult run_des(const Scenario& s, std::span<const ContactEvent> trace, std::uint64_t seed,
                  const DesOptions& options) {
  const double duration = options.duration_s > 0.0 ? options.duration_s : s.config.sim_duration_s;
  if (!(options.sampling_interval_s > 0.0)) throw std::invalid_argument("sampling interval must be > 0");
  const auto& params = s.config.recognition;
  const ItemCatalog catalog(s);
  const auto idx = index_residents(s);

  DesResult out;
  auto caches = initial_caches(s);

  const auto scopes = default_scopes(s);
  const ScopeIndex route(s, scopes);
  HitAccumulator hits(scopes);
  std::vector<std::size_t> unit(s.nodes.size());
  auto node_hit = [&](NodeId n) {
    const auto k = s.channels[caches[n].subscription].item_count;
    return k > 0 ? static_cast<double>(caches[n].sc.size()) / k : 1.0;
  };
  for (const auto& n : s.nodes)
    unit[n.id] = hits.add_unit(1.0, node_hit(n.id), route.for_group(n.home, n.subscription));

  std::size_t next = 0;
  double last_time = -1.0;
  auto advance_to = [&](double t_limit) {
    for (; next < trace.size() && trace[next].time <= t_limit; ++next) {
      const auto& e = trace[next];
      if (e.time < last_time)
        throw MalformedTrace("contact trace time regression at index " + std::to_string(next));
      if (e.a >= caches.size() || e.b >= caches.size() || e.a == e.b)
        throw MalformedTrace("contact trace names an invalid pair at index " + std::to_string(next));
      last_time = e.time;
      const NodeId lo = std::min(e.a, e.b), hi = std::max(e.a, e.b);
      Rng rng(mix_seed({seed, static_cast<std::uint64_t>(Stream::Encounter), lo, hi, next}));
      if (options.audit) {
        const NodeCaches a0 = caches[lo], b0 = caches[hi];
        encounter(caches[lo], caches[hi], params, catalog, rng);
        audit_encounter(a0, caches[lo], b0, params, catalog);
        audit_encounter(b0, caches[hi], a0, params, catalog);
      } else {
        encounter(caches[lo], caches[hi], params, catalog, rng);
      }
      hits.raise(unit[lo], node_hit(lo));
      hits.raise(unit[hi], node_hit(hi));
      ++out.contacts;
    }
  };

  for (long k = 0;; ++k) {
    const double t = k * options.sampling_interval_s;
    if (t > duration) break;
    advance_to(t);
    hits.sample(t, options.replica, out.hit);
    if (options.record_replication) record_replication(s, idx, caches, t, out.replication);
  }
  // Remaining contacts before the end still shape the final state.
  advance_to(duration);
  out.final_caches = std::move(caches);
  return out;
}

DesResult run_des(const Scenario& s, std::uint64_t seed, const DesOptions& options) {
  const double duration = options.duration_s > 0.0 ? options.duration_s : s.config.sim_duration_s;
  const auto layout = build_layout(s);
  const auto schedule = generate_traveller_schedule(s, layout, seed, duration);
  const auto trace = generate_contact_trace(s, layout, schedule, seed, duration);
  return run_des(s, trace, seed, options);
}

double estimate_encounter_rate(std::span<const ContactEvent> trace, std::size_t node_count,
                               double duration) {
  if (trace.empty()) throw std::domain_error("encounter rate undefined for an empty trace");
  if (node_count == 0 || !(duration > 0.0))
    throw std::invalid_argument("encounter rate needs nodes and a positive duration");
  return 2.0 * static_cast<double>(trace.size()) / (static_cast<double>(node_count) * duration);
}

}  // namespace rhsim
