#include "rhsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rhsim/rng.hpp"

namespace rhsim {

Point CommunityLayout::centroid(CommunityId c) const {
  const auto& o = cell_origin.at(c);
  return {o.x + cell_side_m / 2.0, o.y + cell_side_m / 2.0};
}

double CommunityLayout::distance(CommunityId a, CommunityId b) const {
  const auto pa = centroid(a);
  const auto pb = centroid(b);
  return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

CommunityLayout make_grid_layout(int communities, double area_side_m) {
  if (communities < 1) throw std::invalid_argument("layout: need at least one community");
  if (!(area_side_m > 0.0)) throw std::invalid_argument("layout: area side must be > 0");
  int g = 1;
  while (g * g < communities) ++g;
  CommunityLayout l;
  l.grid_side = g;
  l.area_side_m = area_side_m;
  l.cell_side_m = area_side_m / g;
  for (int k = 0; k < communities; ++k)
    l.cell_origin.push_back({(k % g) * l.cell_side_m, (k / g) * l.cell_side_m});
  return l;
}

CommunityLayout build_layout(const Scenario& s) {
  return make_grid_layout(static_cast<int>(s.community_count()), s.config.mobility.area_side_m);
}

namespace {

int tie_rank(const TravellerEvent& e) {
  if (e.kind == TravelKind::Exit) return 1;
  return e.instant ? 2 : 0;
}

}  // namespace

bool event_before(const TravellerEvent& a, const TravellerEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  const int ra = tie_rank(a), rb = tie_rank(b);
  if (ra != rb) return ra < rb;
  return a.traveller < b.traveller;
}

std::vector<TravellerEvent> generate_traveller_schedule(const Scenario& s,
                                                        const CommunityLayout& layout,
                                                        std::uint64_t seed, double duration) {
  const auto& m = s.config.mobility;
  std::vector<TravellerEvent> events;
  for (const auto& n : s.nodes) {
    if (!n.is_traveller) continue;
    Rng rng(stream_seed(seed, Stream::Travellers, n.id));
    CommunityId at = n.home;
    double t = 0.0;
    while (true) {
      t += rng.exponential(m.mean_sojourn_s);
      if (t >= duration) break;
      const CommunityId to = at == n.home ? *n.destination : n.home;
      events.push_back({t, n.id, TravelKind::Exit, at, false});
      double travel = 0.0;
      if (m.travel_time == TravelTimeMode::DistanceOverSpeed) {
        const double speed = rng.uniform(m.speed_min_mps, m.speed_max_mps);
        travel = speed > 0.0 ? layout.distance(at, to) / speed : 0.0;
      }
      t += travel;
      if (t >= duration) break;
      events.push_back({t, n.id, TravelKind::Enter, to, travel == 0.0});
      at = to;
    }
  }
  std::sort(events.begin(), events.end(), event_before);
  return events;
}

void ContactDetector::observe(double time, std::span<const NodeId> nodes,
                              std::span<const Point> positions, std::vector<ContactEvent>& out) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const double dx = positions[i].x - positions[j].x;
      const double dy = positions[i].y - positions[j].y;
      if (dx * dx + dy * dy >= range_sq_) continue;
      const NodeId a = std::min(nodes[i], nodes[j]);
      const NodeId b = std::max(nodes[i], nodes[j]);
      const auto k = key(a, b);
      seen_this_round_.insert(k);
      if (in_range_.insert(k).second) out.push_back({time, a, b});
    }
  }
}

void ContactDetector::end_round() {
  for (auto it = in_range_.begin(); it != in_range_.end();) {
    if (seen_this_round_.count(*it))
      ++it;
    else
      it = in_range_.erase(it);
  }
  seen_this_round_.clear();
}

namespace {

// Occupancy of every community, with O(1) insert/remove.
class Occupancy {
 public:
  Occupancy(const Scenario& s) : where_(s.nodes.size()), slot_(s.nodes.size()), members_(s.community_count()) {
    for (const auto& n : s.nodes) place(n.id, n.home);
  }
  void place(NodeId n, CommunityId c) {
    where_[n] = c;
    slot_[n] = members_[c].size();
    members_[c].push_back(n);
  }
  void remove(NodeId n) {
    const auto c = where_[n];
    if (c == kNoCommunity) return;
    auto& m = members_[c];
    const auto last = m.back();
    m[slot_[n]] = last;
    slot_[last] = slot_[n];
    m.pop_back();
    where_[n] = kNoCommunity;
  }
  void apply(const TravellerEvent& e) {
    if (e.kind == TravelKind::Exit)
      remove(e.traveller);
    else {
      remove(e.traveller);
      place(e.traveller, e.community);
    }
  }
  const std::vector<NodeId>& members(CommunityId c) const { return members_[c]; }
  CommunityId where(NodeId n) const { return where_[n]; }

 private:
  std::vector<CommunityId> where_;
  std::vector<std::size_t> slot_;
  std::vector<std::vector<NodeId>> members_;
};

std::vector<ContactEvent> homogeneous_contacts(const Scenario& s,
                                               std::span<const TravellerEvent> schedule,
                                               Rng& rng, double duration) {
  const auto ncomm = s.community_count();
  std::vector<double> pair_rate(ncomm);
  for (std::size_t c = 0; c < ncomm; ++c)
    pair_rate[c] = s.config.mobility.encounter_rate / std::max(1, s.community_sizes[c] - 1);

  Occupancy occ(s);
  std::vector<ContactEvent> out;
  std::vector<double> rate(ncomm);
  std::size_t next_move = 0;
  double t = 0.0;
  while (t < duration) {
    double total = 0.0;
    for (std::size_t c = 0; c < ncomm; ++c) {
      const double n = static_cast<double>(occ.members(static_cast<CommunityId>(c)).size());
      rate[c] = pair_rate[c] * n * (n - 1.0) / 2.0;
      total += rate[c];
    }
    const double move_at = next_move < schedule.size() ? schedule[next_move].time : duration;
    const double candidate = total > 0.0 ? t + rng.exponential(1.0 / total) : duration;
    if (candidate >= std::min(move_at, duration)) {
      // Occupancy changes first; exponential clocks restart (memoryless).
      if (move_at >= duration) break;
      t = move_at;
      occ.apply(schedule[next_move++]);
      continue;
    }
    t = candidate;
    double u = rng.uniform() * total;
    std::size_t c = 0;
    while (c + 1 < ncomm && u >= rate[c]) u -= rate[c++];
    while (rate[c] == 0.0) ++c;  // guard against rounding onto an empty community
    const auto& m = occ.members(static_cast<CommunityId>(c));
    const auto i = rng.below(m.size());
    auto j = rng.below(m.size() - 1);
    if (j >= i) ++j;
    out.push_back({t, std::min(m[i], m[j]), std::max(m[i], m[j])});
  }
  return out;
}

struct Walker {
  Point pos;
  Point target;
  double speed = 0.0;
  double pause_left = 0.0;
};

std::vector<ContactEvent> geometric_contacts(const Scenario& s, const CommunityLayout& layout,
                                             std::span<const TravellerEvent> schedule, Rng& rng,
                                             double duration) {
  const auto& m = s.config.mobility;
  const double dt = m.time_step_s;
  auto random_point = [&](CommunityId c) {
    const auto& o = layout.cell_origin[c];
    return Point{o.x + rng.uniform() * layout.cell_side_m, o.y + rng.uniform() * layout.cell_side_m};
  };
  auto new_leg = [&](Walker& w, CommunityId c) {
    w.target = random_point(c);
    w.speed = rng.uniform(m.speed_min_mps, m.speed_max_mps);
  };

  Occupancy occ(s);
  std::vector<Walker> walkers(s.nodes.size());
  for (const auto& n : s.nodes) {
    walkers[n.id].pos = random_point(n.home);
    new_leg(walkers[n.id], n.home);
  }

  ContactDetector detector(m.transmission_range_m);
  std::vector<ContactEvent> out;
  std::vector<Point> pos;
  auto observe_all = [&](double t) {
    for (CommunityId c = 0; c < s.community_count(); ++c) {
      const auto& members = occ.members(c);
      pos.clear();
      for (auto n : members) pos.push_back(walkers[n].pos);
      detector.observe(t, members, pos, out);
    }
    detector.end_round();
  };

  std::size_t next_move = 0;
  observe_all(0.0);
  const auto steps = static_cast<long>(std::floor(duration / dt));
  for (long k = 1; k <= steps; ++k) {
    const double t = k * dt;
    if (t >= duration) break;
    for (CommunityId c = 0; c < s.community_count(); ++c) {
      for (auto n : occ.members(c)) {
        auto& w = walkers[n];
        double budget = dt;
        while (budget > 0.0) {
          if (w.pause_left > 0.0) {
            const double p = std::min(w.pause_left, budget);
            w.pause_left -= p;
            budget -= p;
            continue;
          }
          const double dx = w.target.x - w.pos.x, dy = w.target.y - w.pos.y;
          const double dist = std::hypot(dx, dy);
          if (w.speed <= 0.0) break;
          const double step = w.speed * budget;
          if (step < dist) {
            w.pos.x += dx / dist * step;
            w.pos.y += dy / dist * step;
            budget = 0.0;
          } else {
            w.pos = w.target;
            budget -= dist / w.speed;
            w.pause_left = m.pause_s;
            new_leg(w, c);
          }
        }
      }
    }
    while (next_move < schedule.size() && schedule[next_move].time <= t) {
      const auto& e = schedule[next_move++];
      occ.apply(e);
      if (e.kind == TravelKind::Enter) {
        walkers[e.traveller].pos = random_point(e.community);
        new_leg(walkers[e.traveller], e.community);
      }
    }
    observe_all(t);
  }
  return out;
}

std::vector<ContactEvent> transit_contacts(const Scenario& s, std::span<const TravellerEvent> schedule) {
  struct Transit {
    double start, end;
    NodeId who;
    std::uint64_t pair;
  };
  std::vector<Transit> transits;
  std::vector<std::size_t> open(s.nodes.size(), SIZE_MAX);
  std::vector<CommunityId> from(s.nodes.size(), kNoCommunity);
  for (const auto& e : schedule) {
    if (e.kind == TravelKind::Exit) {
      from[e.traveller] = e.community;
      open[e.traveller] = transits.size();
      transits.push_back({e.time, e.time, e.traveller, 0});
    } else if (open[e.traveller] != SIZE_MAX) {
      auto& tr = transits[open[e.traveller]];
      tr.end = e.time;
      const auto a = std::min(from[e.traveller], e.community);
      const auto b = std::max(from[e.traveller], e.community);
      tr.pair = (static_cast<std::uint64_t>(a) << 32) | b;
      open[e.traveller] = SIZE_MAX;
    }
  }
  std::vector<ContactEvent> out;
  for (std::size_t i = 0; i < transits.size(); ++i) {
    for (std::size_t j = i + 1; j < transits.size(); ++j) {
      const auto& x = transits[i];
      const auto& y = transits[j];
      if (x.pair != y.pair || x.who == y.who || x.end <= x.start || y.end <= y.start) continue;
      if (x.start < y.end && y.start < x.end)
        out.push_back({std::max(x.start, y.start), std::min(x.who, y.who), std::max(x.who, y.who)});
    }
  }
  return out;
}

}  // namespace

std::vector<ContactEvent> generate_contact_trace(const Scenario& s, const CommunityLayout& layout,
                                                 std::span<const TravellerEvent> schedule,
                                                 std::uint64_t seed, double duration) {
  Rng rng(stream_seed(seed, Stream::Contacts));
  std::vector<ContactEvent> out = s.config.mobility.mode == MobilityMode::HomogeneousMixing
                                      ? homogeneous_contacts(s, schedule, rng, duration)
                                      : geometric_contacts(s, layout, schedule, rng, duration);
  if (s.config.mobility.in_transit_contacts) {
    auto extra = transit_contacts(s, schedule);
    out.insert(out.end(), extra.begin(), extra.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const ContactEvent& a, const ContactEvent& b) { return a.time < b.time; });
  }
  return out;
}

std::vector<ContactEvent> generate_contact_trace(const Scenario& s, const CommunityLayout& layout,
                                                 std::uint64_t seed, double duration) {
  const auto schedule = generate_traveller_schedule(s, layout, seed, duration);
  return generate_contact_trace(s, layout, schedule, seed, duration);
}

}  // namespace rhsim
