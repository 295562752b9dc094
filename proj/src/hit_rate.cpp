#include "rhsim/hit_rate.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

namespace rhsim {

std::string Scope::to_string() const {
  switch (kind) {
    case ScopeKind::Global:
      return "global";
    case ScopeKind::Community:
      return "community:" + std::to_string(a);
    case ScopeKind::Channel:
      return "channel:" + std::to_string(a);
    case ScopeKind::ChannelRank:
      return "rank:" + std::to_string(a);
    case ScopeKind::CommunityChannel:
      return "community:" + std::to_string(a) + "/channel:" + std::to_string(b);
  }
  return "global";
}

namespace {

std::uint32_t parse_id(std::string_view text, std::string_view whole) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw std::invalid_argument("bad scope: " + std::string(whole));
  return v;
}

bool take_prefix(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

}  // namespace

Scope Scope::parse(std::string_view text) {
  std::string_view s = text;
  if (s == "global") return global();
  if (take_prefix(s, "rank:")) return rank(static_cast<int>(parse_id(s, text)));
  if (take_prefix(s, "channel:")) return channel(parse_id(s, text));
  if (take_prefix(s, "community:")) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return community(parse_id(s, text));
    auto rest = s.substr(slash + 1);
    if (!take_prefix(rest, "channel:")) throw std::invalid_argument("bad scope: " + std::string(text));
    return community_channel(parse_id(s.substr(0, slash), text), parse_id(rest, text));
  }
  throw std::invalid_argument("bad scope: " + std::string(text));
}

std::vector<int> global_channel_ranks(const Scenario& s) {
  const auto counts = s.global_subscriber_counts();
  std::vector<ChannelId> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](ChannelId a, ChannelId b) { return counts[a] > counts[b]; });
  std::vector<int> rank(counts.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k) + 1;
  return rank;
}

std::vector<Scope> default_scopes(const Scenario& s) {
  std::vector<Scope> out{Scope::global()};
  for (CommunityId c = 0; c < s.community_count(); ++c) out.push_back(Scope::community(c));
  const auto nch = s.channels.size();
  if (nch <= 100) {
    for (ChannelId x = 0; x < nch; ++x) out.push_back(Scope::channel(x));
    for (std::size_t k = 1; k <= nch; ++k) out.push_back(Scope::rank(static_cast<int>(k)));
  } else if (nch <= 1000) {
    for (std::size_t k = 1; k <= nch; ++k) out.push_back(Scope::rank(static_cast<int>(k)));
  } else {
    for (int k : kReportedRanks)
      if (static_cast<std::size_t>(k) <= nch) out.push_back(Scope::rank(k));
  }
  for (auto c : s.config.hybrid.tagged_communities)
    for (ChannelId x = 0; x < nch; ++x) out.push_back(Scope::community_channel(c, x));
  return out;
}

HitAccumulator::HitAccumulator(std::vector<Scope> scopes)
    : scopes_(std::move(scopes)), sum_(scopes_.size(), 0.0), weight_(scopes_.size(), 0.0) {}

std::size_t HitAccumulator::add_unit(double weight, double value,
                                     const std::vector<std::size_t>& scope_indices) {
  for (auto k : scope_indices) {
    weight_[k] += weight;
    sum_[k] += weight * value;
  }
  units_.push_back({weight, value, scope_indices});
  return units_.size() - 1;
}

void HitAccumulator::raise(std::size_t unit, double value) {
  auto& u = units_[unit];
  if (value <= u.value) return;
  const double delta = u.weight * (value - u.value);
  u.value = value;
  for (auto k : u.scopes) sum_[k] += delta;
}

double HitAccumulator::value(std::size_t scope) const {
  if (weight_[scope] <= 0.0) return 0.0;
  return std::clamp(sum_[scope] / weight_[scope], 0.0, 1.0);
}

void HitAccumulator::sample(double time_s, int replica, std::vector<HitRateSample>& out) const {
  for (std::size_t k = 0; k < scopes_.size(); ++k)
    if (weight_[k] > 0.0) out.push_back({time_s, scopes_[k], value(k), replica});
}

ScopeIndex::ScopeIndex(const Scenario& s, const std::vector<Scope>& scopes)
    : rank_of_(global_channel_ranks(s)),
      community_(s.community_count(), -1),
      channel_(s.channels.size(), -1),
      rank_(s.channels.size() + 1, -1),
      community_channel_(s.community_count()) {
  for (std::size_t k = 0; k < scopes.size(); ++k) {
    const auto& sc = scopes[k];
    switch (sc.kind) {
      case ScopeKind::Global:
        global_.push_back(static_cast<long>(k));
        break;
      case ScopeKind::Community:
        if (sc.a < community_.size()) community_[sc.a] = static_cast<long>(k);
        break;
      case ScopeKind::Channel:
        if (sc.a < channel_.size()) channel_[sc.a] = static_cast<long>(k);
        break;
      case ScopeKind::ChannelRank:
        if (sc.a < rank_.size()) rank_[sc.a] = static_cast<long>(k);
        break;
      case ScopeKind::CommunityChannel:
        if (sc.a < community_channel_.size()) community_channel_[sc.a].push_back({sc.b, k});
        break;
    }
  }
}

std::vector<std::size_t> ScopeIndex::for_group(CommunityId home, ChannelId channel) const {
  std::vector<std::size_t> out;
  for (auto g : global_) out.push_back(static_cast<std::size_t>(g));
  if (community_[home] >= 0) out.push_back(static_cast<std::size_t>(community_[home]));
  if (channel_[channel] >= 0) out.push_back(static_cast<std::size_t>(channel_[channel]));
  const auto r = rank_of_[channel];
  if (rank_[r] >= 0) out.push_back(static_cast<std::size_t>(rank_[r]));
  for (const auto& [x, k] : community_channel_[home])
    if (x == channel) out.push_back(k);
  return out;
}

}  // namespace rhsim
