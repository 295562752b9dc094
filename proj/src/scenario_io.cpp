#include "rhsim/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

namespace rhsim {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("not a number: '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(v) + "'");
}

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

template <typename E, std::size_t N>
E parse_enum(std::string_view v, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (v == n.name) return n.value;
  std::string allowed;
  for (const auto& n : names) allowed += std::string(allowed.empty() ? "" : "|") + n.name;
  throw std::invalid_argument("expected one of " + allowed + ", got '" + std::string(v) + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E v, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (n.value == v) return n.name;
  return "?";
}

constexpr EnumName<SubscriptionLaw> kSubscriptionLaws[] = {
    {SubscriptionLaw::PerCommunityRotated, "per_community_rotated"},
    {SubscriptionLaw::Global, "global"}};
constexpr EnumName<DestinationLaw> kDestinationLaws[] = {
    {DestinationLaw::AllOthers, "all_others"}, {DestinationLaw::ZipfDistance, "zipf_distance"}};
constexpr EnumName<PlacementKind> kPlacements[] = {
    {PlacementKind::OnSubscribers, "on_subscribers"},
    {PlacementKind::UniformRandom, "uniform_random"},
    {PlacementKind::PerCommunityQuota, "per_community_quota"}};
constexpr EnumName<MobilityMode> kMobilityModes[] = {
    {MobilityMode::Geometric, "geometric"}, {MobilityMode::HomogeneousMixing, "homogeneous_mixing"}};
constexpr EnumName<TravelTimeMode> kTravelModes[] = {
    {TravelTimeMode::Instant, "instant"}, {TravelTimeMode::DistanceOverSpeed, "distance_over_speed"}};
constexpr EnumName<HybridMode> kHybridModes[] = {
    {HybridMode::EqualSteadyState, "equal"}, {HybridMode::AnalyticDriven, "analytic"}};

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

template <typename T>
Field int_field(std::string sec, std::string key, T& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::to_string(ref); },
          [&ref](std::string_view v) { ref = parse_number<T>(v); }};
}

Field double_field(std::string sec, std::string key, double& ref) {
  return {std::move(sec), std::move(key), [&ref] { return format_double_exact(ref); },
          [&ref](std::string_view v) { ref = parse_number<double>(v); }};
}

Field bool_field(std::string sec, std::string key, bool& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref](std::string_view v) { ref = parse_bool(v); }};
}

template <typename E, std::size_t N>
Field enum_field(std::string sec, std::string key, E& ref, const EnumName<E> (&names)[N]) {
  return {std::move(sec), std::move(key), [&ref, &names] { return enum_name(ref, names); },
          [&ref, &names](std::string_view v) { ref = parse_enum(v, names); }};
}

std::vector<Field> config_fields(ScenarioConfig& c) {
  std::vector<Field> f;
  f.push_back({"scenario", "name", [&c] { return c.name; },
               [&c](std::string_view v) { c.name = std::string(v); }});
  f.push_back(int_field("scenario", "communities", c.communities));
  f.push_back(int_field("scenario", "nodes_per_community", c.nodes_per_community));
  f.push_back(int_field("scenario", "channels", c.channels));
  f.push_back(int_field("scenario", "items_per_channel", c.items_per_channel));
  f.push_back(double_field("scenario", "zipf_exponent", c.zipf_exponent));
  f.push_back(enum_field("scenario", "subscription_law", c.subscription_law, kSubscriptionLaws));
  f.push_back(int_field("scenario", "travellers_per_community", c.travellers_per_community));
  f.push_back(enum_field("scenario", "destination_law", c.destination_law, kDestinationLaws));
  f.push_back(double_field("scenario", "destination_zipf_exponent", c.destination_zipf_exponent));
  f.push_back(enum_field("scenario", "placement", c.placement.kind, kPlacements));
  f.push_back(int_field("scenario", "placement_quota", c.placement.quota));
  f.push_back(bool_field("scenario", "channel_recognition", c.channel_recognition));
  f.push_back(double_field("scenario", "sim_duration_s", c.sim_duration_s));
  f.push_back(int_field("scenario", "seed", c.seed));

  auto& r = c.recognition;
  f.push_back(int_field("recognition", "channel_threshold", r.channel_threshold));
  f.push_back(int_field("recognition", "item_threshold", r.item_threshold));
  f.push_back(double_field("recognition", "channel_forget", r.channel_forget));
  f.push_back(double_field("recognition", "item_forget", r.item_forget));
  f.push_back(int_field("recognition", "oc_capacity", r.oc_capacity));

  auto& m = c.mobility;
  f.push_back(enum_field("mobility", "mode", m.mode, kMobilityModes));
  f.push_back(double_field("mobility", "area_side_m", m.area_side_m));
  f.push_back(double_field("mobility", "transmission_range_m", m.transmission_range_m));
  f.push_back(double_field("mobility", "speed_min_mps", m.speed_min_mps));
  f.push_back(double_field("mobility", "speed_max_mps", m.speed_max_mps));
  f.push_back(double_field("mobility", "pause_s", m.pause_s));
  f.push_back(double_field("mobility", "mean_sojourn_s", m.mean_sojourn_s));
  f.push_back(enum_field("mobility", "travel_time", m.travel_time, kTravelModes));
  f.push_back(bool_field("mobility", "in_transit_contacts", m.in_transit_contacts));
  f.push_back(double_field("mobility", "encounter_rate", m.encounter_rate));
  f.push_back(double_field("mobility", "time_step_s", m.time_step_s));

  auto& h = c.hybrid;
  f.push_back(enum_field("hybrid", "mode", h.mode, kHybridModes));
  f.push_back(double_field("hybrid", "analytic_epsilon", h.analytic_epsilon));
  f.push_back(int_field("hybrid", "analytic_window", h.analytic_window));
  f.push_back(int_field("hybrid", "analytic_max_steps", h.analytic_max_steps));
  f.push_back({"hybrid", "tagged_communities",
               [&h] {
                 std::string s;
                 for (auto t : h.tagged_communities) s += (s.empty() ? "" : " ") + std::to_string(t);
                 return s;
               },
               [&h](std::string_view v) {
                 h.tagged_communities.clear();
                 for (auto tok : split_ws(v)) h.tagged_communities.push_back(parse_number<CommunityId>(tok));
               }});

  auto& o = c.output;
  f.push_back(double_field("output", "sampling_interval_s", o.sampling_interval_s));
  f.push_back(int_field("output", "replicas", o.replicas));
  f.push_back(bool_field("output", "event_log", o.event_log));
  return f;
}

const char* const kSections[] = {"scenario", "recognition", "mobility", "hybrid", "output"};

struct Population {
  std::map<std::size_t, int> community;
  std::map<std::size_t, ChannelSpec> channel;
  std::map<std::size_t, NodeSpec> node;
  std::map<std::size_t, ItemSpec> item;
  std::map<std::size_t, std::vector<double>> popularity;
  bool any() const {
    return !community.empty() || !channel.empty() || !node.empty() || !item.empty() ||
           !popularity.empty();
  }
};

// Returns true if `key` was a population entry.
bool parse_population_entry(std::string_view key, std::string_view value, Population& pop) {
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) return false;
  const auto kind = key.substr(0, dot);
  if (kind != "community" && kind != "channel" && kind != "node" && kind != "item" &&
      kind != "popularity")
    return false;
  const auto idx = parse_number<std::size_t>(key.substr(dot + 1));
  const auto tok = split_ws(value);
  if (kind == "community") {
    if (tok.size() != 1) throw std::invalid_argument("expected <size>");
    pop.community[idx] = parse_number<int>(tok[0]);
  } else if (kind == "channel") {
    if (tok.size() != 2) throw std::invalid_argument("expected <first_item> <item_count>");
    pop.channel[idx] = {static_cast<ChannelId>(idx), parse_number<ItemId>(tok[0]),
                        parse_number<int>(tok[1])};
  } else if (kind == "node") {
    if (tok.size() != 3) throw std::invalid_argument("expected <home> <subscription> <destination|->");
    NodeSpec n;
    n.id = static_cast<NodeId>(idx);
    n.home = parse_number<CommunityId>(tok[0]);
    n.subscription = parse_number<ChannelId>(tok[1]);
    if (tok[2] != "-") {
      n.is_traveller = true;
      n.destination = parse_number<CommunityId>(tok[2]);
    }
    pop.node[idx] = n;
  } else if (kind == "item") {
    if (tok.size() != 2) throw std::invalid_argument("expected <channel> <holder>[,<holder>...]");
    ItemSpec it;
    it.id = static_cast<ItemId>(idx);
    it.channel = parse_number<ChannelId>(tok[0]);
    std::string_view rest = tok[1];
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      it.holders.push_back(parse_number<NodeId>(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    pop.item[idx] = std::move(it);
  } else {
    std::vector<double> p;
    for (auto t : tok) p.push_back(parse_number<double>(t));
    pop.popularity[idx] = std::move(p);
  }
  return true;
}

template <typename T>
std::vector<T> dense(const std::map<std::size_t, T>& m, const char* what) {
  std::vector<T> out;
  out.reserve(m.size());
  std::size_t expect = 0;
  for (const auto& [k, v] : m) {
    if (k != expect++)
      throw ScenarioError(std::string("scenario file: ") + what + " ids are not contiguous");
    out.push_back(v);
  }
  return out;
}

struct ParsedText {
  ScenarioConfig config;
  Population population;
};

ParsedText parse_text(std::string_view text) {
  ParsedText out;
  auto fields = config_fields(out.config);
  std::map<std::string, Field*, std::less<>> by_key;
  for (auto& f : fields) by_key[f.section + "." + f.key] = &f;

  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto fail = [&](const std::string& msg) {
      throw ScenarioError("scenario file line " + std::to_string(line_no) + ": " + msg);
    };
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (auto s : kSections) known = known || section == s;
      if (!known) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside of any section");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (section == "scenario" && parse_population_entry(key, value, out.population)) continue;
      auto it = by_key.find(section + "." + std::string(key));
      if (it == by_key.end()) fail("unknown key '" + std::string(key) + "' in [" + section + "]");
      it->second->set(value);
    } catch (const std::invalid_argument& e) {
      fail("key '" + std::string(key) + "': " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string format_double_exact(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string serialize_config(const ScenarioConfig& c) {
  ScenarioConfig copy = c;
  auto fields = config_fields(copy);
  std::ostringstream os;
  std::string current;
  for (const auto& f : fields) {
    if (f.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << f.section << "]\n";
      current = f.section;
    }
    os << f.key << " = " << f.get() << '\n';
  }
  return os.str();
}

std::string serialize_scenario(const Scenario& s) {
  std::string cfg = serialize_config(s.config);
  // Population entries go at the end of [scenario], before [recognition].
  const auto split = cfg.find("\n[recognition]");
  std::ostringstream pop;
  for (std::size_t c = 0; c < s.community_sizes.size(); ++c)
    pop << "community." << c << " = " << s.community_sizes[c] << '\n';
  for (const auto& ch : s.channels)
    pop << "channel." << ch.id << " = " << ch.first_item << ' ' << ch.item_count << '\n';
  for (std::size_t k = 0; k < s.popularity.size(); ++k) {
    pop << "popularity." << k << " =";
    for (double p : s.popularity[k]) pop << ' ' << format_double_exact(p);
    pop << '\n';
  }
  for (const auto& n : s.nodes) {
    pop << "node." << n.id << " = " << n.home << ' ' << n.subscription << ' ';
    if (n.destination)
      pop << *n.destination;
    else
      pop << '-';
    pop << '\n';
  }
  for (const auto& it : s.items) {
    pop << "item." << it.id << " = " << it.channel << ' ';
    for (std::size_t h = 0; h < it.holders.size(); ++h) pop << (h ? "," : "") << it.holders[h];
    pop << '\n';
  }
  return cfg.substr(0, split) + "\n" + pop.str() + cfg.substr(split);
}

ScenarioConfig parse_config(std::string_view text) {
  auto parsed = parse_text(text);
  if (parsed.population.any())
    throw ScenarioError("scenario file: population entries are not allowed in a configuration");
  return parsed.config;
}

Scenario parse_scenario(std::string_view text) {
  auto parsed = parse_text(text);
  if (!parsed.population.any()) return generate_scenario(parsed.config, parsed.config.seed);

  auto& p = parsed.population;
  if (p.community.empty() || p.channel.empty() || p.node.empty() || p.item.empty() ||
      p.popularity.empty())
    throw ScenarioError(
        "scenario file: a population needs community, channel, popularity, node and item entries");
  Scenario s;
  s.config = parsed.config;
  s.community_sizes = dense(p.community, "community");
  s.channels = dense(p.channel, "channel");
  s.popularity = dense(p.popularity, "popularity");
  s.nodes = dense(p.node, "node");
  s.items = dense(p.item, "item");
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

void save_scenario_file(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot write scenario file '" + path + "'");
  out << serialize_scenario(s);
  if (!out) throw ScenarioError("error writing scenario file '" + path + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(serialize_scenario(s)); }

}  // namespace rhsim
