#include "rhsim/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "rhsim/analytic.hpp"
#include "rhsim/des.hpp"
#include "rhsim/hybrid.hpp"
#include "rhsim/metrics.hpp"
#include "rhsim/output.hpp"
#include "rhsim/replicas.hpp"
#include "rhsim/scenario_io.hpp"

namespace rhsim {

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int jobs = 1;
};

std::optional<ScenarioConfig> preset(const std::string& name) {
  if (name == "validation") return presets::validation();
  if (name == "urban") return presets::urban();
  if (name == "regional") return presets::regional();
  return std::nullopt;
}

Scenario load(const std::string& spec) {
  if (auto p = preset(spec)) return generate_scenario(*p);
  return load_scenario_file(spec);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int replicas_or_default(int flag, const Scenario& s) { return flag > 0 ? flag : s.config.output.replicas; }

double encounter_rate_for(const Scenario& s, std::uint64_t seed) {
  if (s.config.mobility.mode == MobilityMode::HomogeneousMixing) return s.config.mobility.encounter_rate;
  const auto trace = generate_contact_trace(s, build_layout(s), seed, s.config.sim_duration_s);
  return estimate_encounter_rate(trace, s.node_count(), s.config.sim_duration_s);
}

void finish(const Globals& g, RunManifest m, const Scenario& s, std::uint64_t seed,
            std::chrono::steady_clock::time_point t0, std::ostream& out) {
  m.scenario_hash = scenario_hash(s);
  m.seed = seed;
  m.jobs = g.jobs;
  m.wall_clock_s = seconds_since(t0);
  m.outputs.push_back("manifest.txt");
  write_output(g.out_dir, "manifest.txt", manifest_text(m));
  for (const auto& f : m.outputs) out << "wrote " << (std::filesystem::path(g.out_dir) / f).string() << '\n';
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recognition-heuristic dissemination simulator", "rhsim"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Base seed (overrides the scenario seed)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads for replicas")->check(CLI::PositiveNumber);

  std::string spec, output_file;
  auto* gen = app.add_subcommand("gen-scenario", "Materialize a scenario from a preset or config file");
  gen->add_option("spec", spec, "Preset name (validation, urban, regional) or config file")->required();
  gen->add_option("-o,--output", output_file, "Scenario file to write")->required();

  std::string scenario_path;
  long max_steps = 0;
  unsigned community = 0;
  long stride = 1;
  auto* analytic = app.add_subcommand("run-analytic", "Steady state of one community's model");
  analytic->add_option("scenario", scenario_path, "Scenario file or preset")->required();
  analytic->add_option("--max-steps", max_steps, "Step cap (default from the scenario)");
  analytic->add_option("--community", community, "Community to model");
  analytic->add_option("--stride", stride, "Trace every n-th step")->check(CLI::PositiveNumber);

  int replicas = 0;
  bool audit = false;
  auto* des = app.add_subcommand("run-des", "Per-node discrete-event simulation");
  des->add_option("scenario", scenario_path, "Scenario file or preset")->required();
  des->add_option("--replicas", replicas, "Replica count")->check(CLI::PositiveNumber);
  des->add_flag("--audit", audit, "Check invariants and item lineage after every encounter");

  std::string mode = "equal";
  bool no_recognition = false, event_log = false;
  auto* hybrid = app.add_subcommand("run-hybrid", "Hybrid community-level simulation");
  hybrid->add_option("scenario", scenario_path, "Scenario file or preset")->required();
  hybrid->add_option("--mode", mode, "equal or analytic")->check(CLI::IsMember({"equal", "analytic"}));
  hybrid->add_option("--replicas", replicas, "Replica count")->check(CLI::PositiveNumber);
  hybrid->add_flag("--no-channel-recognition", no_recognition, "Disable channel recognition");
  hybrid->add_flag("--event-log", event_log, "Write events.csv for replica 0");

  std::string csv_a, csv_b, scope_text = "global";
  auto* compare = app.add_subcommand("compare", "Gap statistics between two hit-rate CSVs");
  compare->add_option("a", csv_a, "First hitrate.csv")->required();
  compare->add_option("b", csv_b, "Second hitrate.csv")->required();
  compare->add_option("--scope", scope_text, "Scope to compare");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (*seed_opt) g.seed = seed_value;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (*gen) {
      auto config = preset(spec);
      const Scenario s = config ? generate_scenario(*config, g.seed.value_or(config->seed))
                        : g.seed ? generate_scenario(load_scenario_file(spec).config, *g.seed)
                                 : load_scenario_file(spec);
      save_scenario_file(s, output_file);
      out << "wrote " << output_file << " (" << s.node_count() << " nodes, " << s.item_count() << " items)\n";
      return 0;
    }
    if (*analytic) {
      const auto s = load(scenario_path);
      if (community >= s.community_count()) throw std::invalid_argument("--community out of range");
      const auto seed = g.seed.value_or(s.config.seed);
      auto m = community_model_from_scenario(s, community, encounter_rate_for(s, seed));
      if (max_steps > 0) m.max_steps = max_steps;
      const auto r = run_to_steady_state(m, initial_state(m), {true, stride});
      RunManifest man;
      man.engine = "analytic";
      man.mode = "steady_state";
      man.outputs = {"replication.csv", "trace.csv"};
      write_output(g.out_dir, "replication.csv", replication_csv(r.trace));
      write_output(g.out_dir, "trace.csv", trace_csv(r.trace));
      out << (r.converged ? "converged" : "not converged") << " after " << r.steps << " steps\n";
      finish(g, man, s, seed, t0, out);
      return 0;
    }
    if (*des) {
      const auto s = load(scenario_path);
      const auto seed = g.seed.value_or(s.config.seed);
      const int k = replicas_or_default(replicas, s);
      const auto results = run_replicas<DesResult>(k, g.jobs, [&](int rep) {
        DesOptions o;
        o.sampling_interval_s = s.config.output.sampling_interval_s;
        o.replica = rep;
        o.audit = audit;
        auto r = run_des(s, replica_seed(seed, static_cast<std::uint64_t>(rep)), o);
        r.final_caches.clear();
        return r;
      });
      std::vector<HitRateSample> hits;
      std::vector<std::vector<ReplicationSample>> repl;
      for (const auto& r : results) {
        hits.insert(hits.end(), r.hit.begin(), r.hit.end());
        repl.push_back(r.replication);
      }
      RunManifest man;
      man.engine = "des";
      man.mode = s.config.mobility.mode == MobilityMode::Geometric ? "geometric" : "homogeneous_mixing";
      man.replicas = k;
      man.outputs = {"hitrate.csv", "hitrate_summary.csv", "des_replication.csv"};
      write_output(g.out_dir, "hitrate.csv", hitrate_csv(hits));
      write_output(g.out_dir, "hitrate_summary.csv", hitrate_summary_csv(hit_rate_series(hits)));
      write_output(g.out_dir, "des_replication.csv", des_replication_csv(repl));
      finish(g, man, s, seed, t0, out);
      return 0;
    }
    if (*hybrid) {
      const auto s = load(scenario_path);
      const auto seed = g.seed.value_or(s.config.seed);
      const int k = replicas_or_default(replicas, s);
      const bool recognition = s.config.channel_recognition && !no_recognition;
      const auto hmode = mode == "analytic" ? HybridMode::AnalyticDriven : HybridMode::EqualSteadyState;
      const bool log = event_log || s.config.output.event_log;
      const auto results = run_replicas<HybridResult>(k, g.jobs, [&](int rep) {
        HybridOptions o;
        o.mode = hmode;
        o.channel_recognition = recognition;
        o.sampling_interval_s = s.config.output.sampling_interval_s;
        o.replica = rep;
        o.event_log = log && rep == 0;
        return run_hybrid(s, replica_seed(seed, static_cast<std::uint64_t>(rep)), o);
      });
      std::vector<HitRateSample> hits;
      for (const auto& r : results) hits.insert(hits.end(), r.hit.begin(), r.hit.end());
      RunManifest man;
      man.engine = "hybrid";
      man.mode = std::string(mode) + (recognition ? "" : "+no_channel_recognition");
      man.replicas = k;
      man.outputs = {"hitrate.csv", "hitrate_summary.csv"};
      write_output(g.out_dir, "hitrate.csv", hitrate_csv(hits));
      write_output(g.out_dir, "hitrate_summary.csv", hitrate_summary_csv(hit_rate_series(hits)));
      if (log) {
        write_output(g.out_dir, "events.csv", events_csv(results.front().events));
        man.outputs.push_back("events.csv");
      }
      finish(g, man, s, seed, t0, out);
      return 0;
    }
    if (*compare) {
      const auto scope = Scope::parse(scope_text);
      auto series_of = [&](const std::string& path) {
        for (const auto& a : hit_rate_series(read_hitrate_csv(path)))
          if (a.scope == scope) return points_of(a);
        throw std::invalid_argument(path + " has no samples for scope " + scope_text);
      };
      const auto gap = compare_series(series_of(csv_a), series_of(csv_b));
      out << "max_abs_gap = " << format_sig9(gap.max_abs_gap) << '\n'
          << "mean_abs_gap = " << format_sig9(gap.mean_abs_gap) << '\n'
          << "final_gap = " << format_sig9(gap.final_gap) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace rhsim
