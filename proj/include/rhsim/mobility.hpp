#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "rhsim/scenario.hpp"

namespace rhsim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Square grid of square cells covering the simulation area. Community k
/// occupies cell (k mod grid_side, k div grid_side).
struct CommunityLayout {
  int grid_side = 1;
  double area_side_m = 0.0;
  double cell_side_m = 0.0;
  std::vector<Point> cell_origin;  // lower-left corner per community

  std::size_t community_count() const { return cell_origin.size(); }
  Point centroid(CommunityId c) const;
  double distance(CommunityId a, CommunityId b) const;
  std::size_t empty_cells() const {
    return static_cast<std::size_t>(grid_side) * grid_side - community_count();
  }
};

CommunityLayout make_grid_layout(int communities, double area_side_m);
CommunityLayout build_layout(const Scenario& s);

struct ContactEvent {
  double time = 0.0;
  NodeId a = 0;
  NodeId b = 0;
};

enum class TravelKind { Exit, Enter };

struct TravellerEvent {
  double time = 0.0;
  NodeId traveller = 0;
  TravelKind kind = TravelKind::Exit;
  CommunityId community = 0;
  /// Set on an Enter that happens at the same instant as its Exit.
  bool instant = false;
};

/// Global processing order: time, then Enter before Exit, then traveller id.
/// An instant Enter sorts after every Exit at that time so a traveller's own
/// Exit always precedes its arrival.
bool event_before(const TravellerEvent& a, const TravellerEvent& b);

/// Alternating Exit/Enter trips for every traveller, sorted by event_before.
std::vector<TravellerEvent> generate_traveller_schedule(const Scenario& s,
                                                        const CommunityLayout& layout,
                                                        std::uint64_t seed, double duration);

/// Time-sorted contacts. Travellers relocate according to `schedule`.
std::vector<ContactEvent> generate_contact_trace(const Scenario& s, const CommunityLayout& layout,
                                                 std::span<const TravellerEvent> schedule,
                                                 std::uint64_t seed, double duration);

/// Convenience overload deriving the traveller schedule from the same seed.
std::vector<ContactEvent> generate_contact_trace(const Scenario& s, const CommunityLayout& layout,
                                                 std::uint64_t seed, double duration);

/// Edge-triggered proximity detector: reports a pair once when its distance
/// drops below the range, and again only after it has separated.
class ContactDetector {
 public:
  explicit ContactDetector(double range_m) : range_sq_(range_m * range_m) {}

  /// `nodes[i]` is at `positions[i]`; all of them share one cell.
  /// Pairs not observed together in this call are considered separated.
  void observe(double time, std::span<const NodeId> nodes, std::span<const Point> positions,
               std::vector<ContactEvent>& out);
  /// Forget pairs involving nodes in a cell that were not refreshed.
  void end_round();

 private:
  static std::uint64_t key(NodeId a, NodeId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  double range_sq_;
  std::unordered_set<std::uint64_t> in_range_;
  std::unordered_set<std::uint64_t> seen_this_round_;
};

}  // namespace rhsim
