// Acceptance gate: one PASS/FAIL line per criterion. Exit status 1 if any
// criterion fails. `--only N` runs a single criterion, `--stretch` adds the
// full-size regional run.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rhsim/analytic.hpp"
#include "rhsim/cli.hpp"
#include "rhsim/des.hpp"
#include "rhsim/hybrid.hpp"
#include "rhsim/metrics.hpp"
#include "rhsim/output.hpp"
#include "rhsim/scenario_io.hpp"

using namespace rhsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Mean over replicas of one scope, as (time, value) points.
std::vector<SeriesPoint> mean_series(const std::vector<HitRateSample>& all, Scope scope) {
  std::vector<HitRateSample> picked;
  for (const auto& h : all)
    if (h.scope == scope) picked.push_back(h);
  auto series = hit_rate_series(picked);
  if (series.empty()) return {};
  return points_of(series.front());
}

const AggregatedSeries* find_series(const std::vector<AggregatedSeries>& v, Scope scope) {
  for (const auto& s : v)
    if (s.scope == scope) return &s;
  return nullptr;
}

std::vector<HitRateSample> des_replicas(const Scenario& s, std::uint64_t base, int n,
                                        DesOptions opt = {}) {
  std::vector<HitRateSample> all;
  for (int k = 0; k < n; ++k) {
    opt.replica = k;
    auto r = run_des(s, replica_seed(base, k), opt);
    all.insert(all.end(), r.hit.begin(), r.hit.end());
  }
  return all;
}

std::vector<HitRateSample> hybrid_replicas(const Scenario& s, std::uint64_t base, int n,
                                           HybridOptions opt = {}) {
  std::vector<HitRateSample> all;
  for (int k = 0; k < n; ++k) {
    opt.replica = k;
    auto r = run_hybrid(s, replica_seed(base, k), opt);
    all.insert(all.end(), r.hit.begin(), r.hit.end());
  }
  return all;
}

bool monotone(const std::vector<SeriesPoint>& s) {
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k].value < s[k - 1].value - 1e-12) return false;
  return true;
}

// Random valid recognition parameters and a small class layout.
CommunityModelConfig random_config(Rng& rng) {
  CommunityModelConfig cfg;
  cfg.params.channel_threshold = 1 + static_cast<int>(rng.below(8));
  cfg.params.item_threshold = 1 + static_cast<int>(rng.below(8));
  cfg.params.channel_forget = rng.uniform();
  cfg.params.item_forget = rng.uniform();
  cfg.params.oc_capacity = 1 + static_cast<int>(rng.below(10));
  const int channels = 1 + static_cast<int>(rng.below(4));
  cfg.pop = zipf_popularity(channels, 0.2 + 2.0 * rng.uniform());
  cfg.community_size = 2 + static_cast<int>(rng.below(60));
  for (int j = 0; j < channels; ++j) {
    const int classes = 1 + static_cast<int>(rng.below(2));
    for (int k = 0; k < classes; ++k)
      cfg.classes.push_back({static_cast<ChannelId>(j), 1.0 + static_cast<double>(rng.below(200)),
                             static_cast<double>(rng.below(3)) / cfg.community_size});
  }
  return cfg;
}

bool chains_ok(const CommunityModelState& s) {
  for (const auto& v : s.v_channel)
    if (!is_simplex(v)) return false;
  for (const auto& c : s.classes) {
    if (!is_simplex(c.psi) || !is_simplex(c.v_item) || !is_simplex(c.phi)) return false;
    for (const auto* v : {&c.psi, &c.v_item, &c.phi})
      for (double x : *v)
        if (x < -1e-12) return false;
    if (!(c.r >= 0.0 && c.r <= 1.0)) return false;
  }
  return true;
}

ScenarioConfig single_community_config() {
  auto cfg = presets::validation();
  cfg.name = "single-community";
  cfg.communities = 1;
  cfg.nodes_per_community = 45;
  cfg.travellers_per_community = 0;
  cfg.recognition.channel_threshold = 5;
  cfg.recognition.item_threshold = 5;
  cfg.recognition.oc_capacity = 3;
  return cfg;
}

// 50 communities of 200 nodes, 500 channels with global subscriptions.
ScenarioConfig phase_config() {
  auto cfg = presets::regional();
  cfg.name = "regional-scaled";
  cfg.communities = 50;
  cfg.nodes_per_community = 200;
  cfg.channels = 500;
  cfg.items_per_channel = 20;
  cfg.travellers_per_community = 25;
  cfg.recognition.oc_capacity = 10;
  cfg.mobility.area_side_m = 100000.0 * std::sqrt(50.0 / 250.0);
  return cfg;
}

// ---------------------------------------------------------------------------

Verdict c1() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst_row = 0.0;
  bool ok = true;
  long steps = 0;
  for (int k = 0; k < 1000; ++k) {
    auto cfg = random_config(rng);
    const auto& p = cfg.params;
    const double x = rng.uniform();
    for (const auto& m : {cc_transition_matrix(x, p.channel_forget, p.channel_threshold),
                          ic_transition_matrix(x, p.item_forget, p.item_threshold),
                          oc_reorder_matrix(rng.uniform(), x, p.item_forget, p.item_threshold)})
      for (std::size_t i = 0; i < m.size(); ++i) worst_row = std::max(worst_row, std::abs(m.row_sum(i) - 1.0));
    // The first 100 tuples run the full horizon, the rest a shorter one.
    const long horizon = k < 100 ? 100000 : 2000;
    auto s = initial_state(cfg);
    for (long t = 0; t < horizon && ok; ++t) {
      s = model_step(cfg, s);
      ok = chains_ok(s);
    }
    steps += horizon;
    if (!ok) break;
  }
  const double secs = seconds_since(t0);
  const bool pass = ok && worst_row <= 1e-12 && secs < 60.0;
  return {pass, fmt("1000 tuples, worst row error %.2e, %ld model steps, simplex %s, %.1f s", worst_row,
                    steps, ok ? "held" : "VIOLATED", secs)};
}

Verdict c2() {
  const auto t0 = Clock::now();
  auto check = [](const CommunityModelConfig& cfg, long steps, double& worst) {
    auto s = initial_state(cfg);
    for (long t = 0; t < steps; ++t) {
      s = model_step(cfg, s);
      worst = std::max(worst, s.expected_oc_occupancy() - cfg.params.oc_capacity);
    }
  };
  double worst = -1e300;
  auto single = community_model_from_scenario(generate_scenario(single_community_config(), 1), 0, 0.01);
  check(single, 20000, worst);
  const double single_worst = worst;
  Rng rng(2002);
  for (int k = 0; k < 100; ++k) check(random_config(rng), 5000, worst);
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0,
          fmt("max(occupancy - B) = %.3g (single-community config %.3g), 101 configs, %.1f s", worst,
              single_worst, secs)};
}

Verdict c3() {
  const auto t0 = Clock::now();
  auto cfg = single_community_config();
  cfg.sim_duration_s = 60000.0;

  // Model with the configured popularity law.
  CommunityModelConfig law;
  law.params = cfg.recognition;
  law.pop = zipf_popularity(3, 1.0);
  law.community_size = 45;
  law.encounter_rate = cfg.mobility.encounter_rate;
  for (ChannelId j = 0; j < 3; ++j) law.classes.push_back({j, 99.0, 99.0 / 297.0 / 45.0});
  auto steady = run_to_steady_state(law, initial_state(law), {false, 1});
  const auto [lo, hi] = std::minmax_element(steady.r.begin(), steady.r.end());
  double mean = 0.0;
  for (double r : steady.r) mean += r / 3.0;
  const double spread = (*hi - *lo) / mean;

  // Realized population against the simulator.
  auto s = generate_scenario(cfg, 4);
  auto realized = community_model_from_scenario(s, 0, cfg.mobility.encounter_rate);
  const long step = std::lround(cfg.sim_duration_s * cfg.mobility.encounter_rate);
  auto st = initial_state(realized);
  for (long k = 0; k < step; ++k) st = model_step(realized, st);
  std::vector<double> model_r(3, 0.0), weight(3, 0.0);
  for (const auto& c : st.classes) {
    model_r[c.channel] += c.class_size * c.r;
    weight[c.channel] += c.class_size;
  }
  std::vector<double> des_r(3, 0.0);
  DesOptions opt;
  opt.sampling_interval_s = cfg.sim_duration_s;
  for (int k = 0; k < 10; ++k) {
    auto r = run_des(s, replica_seed(4, k), opt);
    for (const auto& x : r.replication)
      if (x.time_s == cfg.sim_duration_s) des_r[x.channel] += x.any / 10.0;
  }
  double gap = 0.0;
  std::string pairs;
  for (int j = 0; j < 3; ++j) {
    model_r[j] /= weight[j];
    gap = std::max(gap, std::abs(model_r[j] - des_r[j]));
    pairs += fmt("%s%.3f/%.3f", j ? " " : "", model_r[j], des_r[j]);
  }
  const double secs = seconds_since(t0);
  return {spread < 0.05 && gap <= 0.05 && secs < 600.0,
          fmt("steady r %.3f %.3f %.3f, relative spread %.3f (need < 0.05); model/DES r at %.0f s %s, "
              "max gap %.3f (need <= 0.05); %.1f s",
              steady.r[0], steady.r[1], steady.r[2], spread, cfg.sim_duration_s, pairs.c_str(), gap, secs)};
}

Verdict c4() {
  const auto t0 = Clock::now();
  struct Case {
    double sojourn, limit;
  };
  bool pass = true;
  std::string detail;
  for (auto [sojourn, limit] : {Case{6000, 0.05}, Case{600, 0.1}, Case{35, 0.2}}) {
    auto cfg = presets::validation();
    cfg.mobility.mean_sojourn_s = sojourn;
    auto s = generate_scenario(cfg, 5);
    auto des = mean_series(des_replicas(s, 5, 10), Scope::global());
    auto hyb = mean_series(hybrid_replicas(s, 5, 10), Scope::global());
    const double gap = std::abs(des.back().value - hyb.back().value);
    bool ok = gap <= limit;
    if (sojourn == 35) ok = ok && monotone(des) && monotone(hyb);
    pass = pass && ok;
    detail += fmt("%ssojourn %.0f: DES %.3f hybrid %.3f gap %.3f (<= %.2f)%s", detail.empty() ? "" : "; ",
                  sojourn, des.back().value, hyb.back().value, gap, limit,
                  sojourn == 35 ? (monotone(des) && monotone(hyb) ? " monotone" : " NOT monotone") : "");
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 1800.0, detail + fmt("; %.1f s", secs)};
}

Verdict c5() {
  const auto t0 = Clock::now();
  auto cfg = presets::urban();
  cfg.recognition.oc_capacity = 10;
  cfg.hybrid.tagged_communities = {0};
  auto s = generate_scenario(cfg, 6);
  auto series = hit_rate_series(hybrid_replicas(s, 6, 10));
  // Hit rates only exist for channels with a subscriber in the community.
  const auto subs = s.subscriber_counts(0);
  const auto& pop = s.popularity_for(0);
  ChannelId most = 0, least = 0;
  for (ChannelId x = 0; x < pop.size(); ++x) {
    if (pop[x] > pop[most]) most = x;
    if (subs[x] > 0 && (subs[least] == 0 || pop[x] < pop[least])) least = x;
  }
  const auto* a = find_series(series, Scope::community_channel(0, most));
  const auto* b = find_series(series, Scope::community_channel(0, least));
  if (!a || !b) return {false, "tagged community series missing"};
  const double ma = a->mean.back(), mb = b->mean.back();
  const double ca = a->ci95.back(), cb = b->ci95.back();
  const bool overlap = std::abs(ma - mb) <= ca + cb;
  const double secs = seconds_since(t0);
  return {std::abs(ma - mb) < 0.05 && overlap && secs < 900.0,
          fmt("community 0, channel %u: %.3f +- %.3f, channel %u: %.3f +- %.3f, difference %.3f, "
              "intervals %s; %.1f s",
              most, ma, ca, least, mb, cb, std::abs(ma - mb), overlap ? "overlap" : "disjoint", secs)};
}

Verdict c6() {
  const auto t0 = Clock::now();
  struct Case {
    int b;
    double at;
    bool at_least;
    double bound;
  };
  bool pass = true;
  std::string detail;
  for (auto c : {Case{25, 60000, true, 0.99}, Case{10, 125000, true, 0.9}, Case{3, 100000, false, 0.6}}) {
    auto cfg = presets::urban();
    cfg.placement = {PlacementKind::PerCommunityQuota, 2};
    cfg.recognition.oc_capacity = c.b;
    auto s = generate_scenario(cfg, 7);
    auto g = mean_series(hybrid_replicas(s, 7, 3), Scope::global());
    const double v = value_at(g, c.at);
    const bool ok = c.at_least ? v >= c.bound : v < c.bound;
    pass = pass && ok;
    detail += fmt("%sB=%d: %.3f at %.0f s (need %s %.2f)%s", detail.empty() ? "" : "; ", c.b, v, c.at,
                  c.at_least ? ">=" : "<", c.bound, ok ? "" : " MISS");
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 1800.0, detail + fmt("; %.1f s", secs)};
}

struct PhaseRuns {
  std::vector<AggregatedSeries> on, off;
  std::vector<double> first_event;
  Scenario s;
  double secs_on = 0.0, secs_off = 0.0;
};

const PhaseRuns& phase_runs() {
  static PhaseRuns runs = [] {
    PhaseRuns r;
    r.s = generate_scenario(phase_config(), 8);
    for (bool recognition : {true, false}) {
      const auto t0 = Clock::now();
      std::vector<HitRateSample> all;
      for (int k = 0; k < 4; ++k) {
        HybridOptions opt;
        opt.channel_recognition = recognition;
        opt.replica = k;
        auto res = run_hybrid(r.s, replica_seed(8, k), opt);
        all.insert(all.end(), res.hit.begin(), res.hit.end());
        if (recognition) r.first_event.push_back(res.first_event_s);
      }
      (recognition ? r.on : r.off) = hit_rate_series(all);
      (recognition ? r.secs_on : r.secs_off) = seconds_since(t0);
    }
    return r;
  }();
  return runs;
}

Verdict c7() {
  const auto& r = phase_runs();
  const auto counts = r.s.global_subscriber_counts();
  const auto ranks = global_channel_ranks(r.s);
  const int threshold = static_cast<int>(r.s.community_count());
  double above_min = 1.0, above_sum = 0.0, below_sum = 0.0;
  int above = 0, below = 0;
  std::string misses;
  for (ChannelId x = 0; x < counts.size(); ++x) {
    if (counts[x] == 0) continue;
    const auto* series = find_series(r.on, Scope::rank(ranks[x]));
    if (!series) return {false, "rank series missing"};
    const double v = series->mean.back();
    if (counts[x] >= threshold) {
      if (v < 0.9) misses += fmt("%s%d subscribers: %.3f", misses.empty() ? "" : ", ", counts[x], v);
      above_min = std::min(above_min, v);
      above_sum += v;
      ++above;
    } else {
      below_sum += v;
      ++below;
    }
  }
  const double above_mean = above_sum / above, below_mean = below_sum / below;
  const bool pass = above_min >= 0.9 && above_mean - below_mean >= 0.3 && r.secs_on < 1800.0;
  return {pass, fmt("%d channels with >= %d subscribers: min %.3f mean %.3f; %d below with subscribers: mean %.3f; "
                    "drop %.3f (need >= 0.3); under 0.9: [%s]; %.1f s",
                    above, threshold, above_min, above_mean, below, below_mean, above_mean - below_mean,
                    misses.c_str(), r.secs_on)};
}

Verdict c8() {
  const auto& r = phase_runs();
  const auto* on = find_series(r.on, Scope::global());
  const auto* off = find_series(r.off, Scope::global());
  if (!on || !off) return {false, "global series missing"};
  const double start = *std::min_element(r.first_event.begin(), r.first_event.end());
  int checked = 0, violations = 0;
  double worst = 1.0;
  for (std::size_t k = 0; k < on->time_s.size(); ++k) {
    if (on->time_s[k] <= start) continue;
    ++checked;
    const double d = on->mean[k] - off->mean[k];
    worst = std::min(worst, d);
    violations += d < 0.0;
  }
  const double secs = r.secs_on + r.secs_off;
  return {violations == 0 && checked > 0 && secs < 1800.0,
          fmt("%d samples after %.0f s, %d with OFF above ON, smallest ON-OFF %.4f, final %.3f vs %.3f; "
              "%.1f s",
              checked, start, violations, worst, on->mean.back(), off->mean.back(), secs)};
}

Verdict c9() {
  const auto t0 = Clock::now();
  auto s = fixtures::golden_scenario();
  auto res = run_des(s, fixtures::golden_trace(), 1);
  auto table = fixtures::golden_table();
  int matched = 0;
  for (std::size_t i = 0; i < table.size(); ++i) matched += fixtures::matches(res.final_caches[i], table[i]);

  auto tiny = fixtures::tiny_scenario();
  tiny.config.sim_duration_s = 1000.0;
  CommunityModelConfig cfg;
  cfg.params = tiny.config.recognition;
  cfg.pop = {1.0};
  cfg.classes = {{0, 1.0, 0.2}};
  cfg.community_size = 5;
  cfg.encounter_rate = tiny.config.mobility.encounter_rate;
  auto st = initial_state(cfg);
  std::vector<double> model{st.classes[0].r};
  for (int k = 0; k < 10; ++k) model.push_back((st = model_step(cfg, st)).classes[0].r);
  std::vector<double> des(11, 0.0);
  DesOptions opt;
  opt.sampling_interval_s = 100.0;
  const int replicas = 10000;
  for (int k = 0; k < replicas; ++k) {
    auto r = run_des(tiny, replica_seed(9, k), opt);
    for (std::size_t i = 0; i < des.size(); ++i) des[i] += r.replication[i].any / replicas;
  }
  double gap = 0.0;
  double at = 0.0;
  for (std::size_t i = 0; i < des.size(); ++i)
    if (std::abs(des[i] - model[i]) > gap) {
      gap = std::abs(des[i] - model[i]);
      at = 100.0 * i;
    }
  const double secs = seconds_since(t0);
  return {matched == 5 && gap <= 0.05,
          fmt("golden fixture %d/5 nodes exact; tiny config max |model - DES| %.3f at %.0f s (need <= 0.05); "
              "%.1f s",
              matched, gap, at, secs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Verdict c10() {
  const auto t0 = Clock::now();
  const auto dir = fs::temp_directory_path() / "rhsim_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto scn = (dir / "validation.cfg").string();
  std::ofstream(scn) << serialize_config(presets::validation());

  struct Engine {
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Engine> engines{
      {{"run-analytic", scn}, {"replication.csv", "trace.csv"}},
      {{"run-des", scn, "--replicas", "3"}, {"hitrate.csv", "hitrate_summary.csv", "des_replication.csv"}},
      {{"run-hybrid", scn, "--replicas", "3", "--event-log"}, {"hitrate.csv", "hitrate_summary.csv", "events.csv"}},
      {{"run-hybrid", scn, "--replicas", "3", "--mode", "analytic"}, {"hitrate.csv", "hitrate_summary.csv"}},
  };
  int compared = 0, differing = 0;
  std::ostringstream sink;
  for (std::size_t e = 0; e < engines.size(); ++e) {
    std::vector<fs::path> outs;
    for (auto [run, jobs] : {std::pair{0, "1"}, std::pair{1, "1"}, std::pair{2, "3"}}) {
      auto out = dir / fmt("e%zu_r%d", e, run);
      std::vector<std::string> args{"--seed", "11", "--jobs", jobs, "--out-dir", out.string()};
      args.insert(args.end(), engines[e].args.begin(), engines[e].args.end());
      if (cli_dispatch(args, sink, sink) != 0) return {false, "engine run failed: " + engines[e].args[0]};
      outs.push_back(out);
    }
    for (const auto& f : engines[e].files)
      for (std::size_t k = 1; k < outs.size(); ++k) {
        ++compared;
        differing += slurp(outs[0] / f) != slurp(outs[k] / f) || slurp(outs[0] / f).empty();
      }
  }
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  return {differing == 0, fmt("%d file comparisons (rerun and --jobs 1 vs 3) over 4 engine modes, %d differ; "
                              "%.1f s",
                              compared, differing, secs)};
}

Verdict stretch() {
  const auto t0 = Clock::now();
  auto s = generate_scenario(presets::regional(), 12);
  HybridOptions opt;
  auto res = run_hybrid(s, 12, opt);
  std::map<int, double> by_rank;
  for (const auto& h : res.hit)
    if (h.scope.kind == ScopeKind::ChannelRank) by_rank[static_cast<int>(h.scope.a)] = h.value;
  double through_1000 = by_rank.count(1000) ? std::min(by_rank[1], by_rank[1000]) : 0.0;
  return {through_1000 >= 0.999,
          fmt("availability %.1f MB, rank-1 %.3f rank-1000 %.3f; %.1f s", res.availability_bytes / 1e6,
              by_rank[1], by_rank[1000], seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  bool with_stretch = false;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--stretch")) with_stretch = true;
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 stochasticity suite", c1},
      {"2 capacity bound", c2},
      {"3 single-community steady replication", c3},
      {"4 hybrid vs DES on the validation scenario", c4},
      {"5 most vs least popular channel, urban", c5},
      {"6 urban opportunistic cache sizes", c6},
      {"7 phase transition, scaled regional", c7},
      {"8 channel recognition ablation", c8},
      {"9 oracle equivalence", c9},
      {"10 determinism", c10},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k) + 1 != only) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  if (with_stretch) {
    Verdict v;
    try {
      v = stretch();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s stretch regional full size (non-gating): %s\n", v.pass ? "PASS" : "FAIL", v.detail.c_str());
  }
  return failed ? 1 : 0;
}
