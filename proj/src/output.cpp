#include "rhsim/output.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace rhsim {

std::string format_sig9(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, r.ptr);
}

namespace {

const char* kind_name(TravelKind k) { return k == TravelKind::Exit ? "exit" : "enter"; }

}  // namespace

std::string hitrate_csv(const std::vector<HitRateSample>& samples) {
  std::string out = "time_s,scope,value,replica\n";
  for (const auto& s : samples) {
    out += format_sig9(s.time_s);
    out += ',';
    out += s.scope.to_string();
    out += ',';
    out += format_sig9(s.value);
    out += ',';
    out += std::to_string(s.replica);
    out += '\n';
  }
  return out;
}

std::string hitrate_summary_csv(const std::vector<AggregatedSeries>& series) {
  std::string out = "time_s,scope,mean,ci95,replicas\n";
  for (const auto& a : series)
    for (std::size_t k = 0; k < a.time_s.size(); ++k) {
      out += format_sig9(a.time_s[k]) + ',' + a.scope.to_string() + ',' + format_sig9(a.mean[k]) + ',';
      if (!std::isnan(a.ci95[k])) out += format_sig9(a.ci95[k]);
      out += ',' + std::to_string(a.replicas) + '\n';
    }
  return out;
}

std::string replication_csv(const std::vector<TraceRow>& rows) {
  std::string out = "step,time_s,channel_rank,item_class,r\n";
  for (const auto& r : rows)
    out += std::to_string(r.step) + ',' + format_sig9(r.time_s) + ',' + std::to_string(r.channel_rank) +
           ',' + std::to_string(r.item_class) + ',' + format_sig9(r.r) + '\n';
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = "step,time_s,channel_rank,item_class,r,p_sc,p_oc\n";
  for (const auto& r : rows)
    out += std::to_string(r.step) + ',' + format_sig9(r.time_s) + ',' + std::to_string(r.channel_rank) +
           ',' + std::to_string(r.item_class) + ',' + format_sig9(r.r) + ',' + format_sig9(r.p_sc) +
           ',' + format_sig9(r.p_oc) + '\n';
  return out;
}

std::string des_replication_csv(const std::vector<std::vector<ReplicationSample>>& replicas) {
  std::string out = "time_s,community,channel,r,r_oc,replica\n";
  for (std::size_t k = 0; k < replicas.size(); ++k)
    for (const auto& r : replicas[k])
      out += format_sig9(r.time_s) + ',' + std::to_string(r.community) + ',' + std::to_string(r.channel) +
             ',' + format_sig9(r.any) + ',' + format_sig9(r.oc) + ',' + std::to_string(k) + '\n';
  return out;
}

std::string events_csv(const std::vector<HybridEventRecord>& events) {
  std::string out = "time_s,traveller,kind,community,deposited_count\n";
  for (const auto& e : events)
    out += format_sig9(e.time_s) + ',' + std::to_string(e.traveller) + ',' + kind_name(e.kind) + ',' +
           std::to_string(e.community) + ',' + std::to_string(e.deposited) + '\n';
  return out;
}

std::string manifest_text(const RunManifest& m) {
  std::ostringstream os;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.scenario_hash));
  os << "scenario_hash = " << hash << '\n'
     << "seed = " << m.seed << '\n'
     << "engine = " << m.engine << '\n'
     << "mode = " << m.mode << '\n'
     << "code_version = " << m.code_version << '\n'
     << "replicas = " << m.replicas << '\n'
     << "jobs = " << m.jobs << '\n'
     << "wall_clock_s = " << format_sig9(m.wall_clock_s) << '\n'
     << "outputs =";
  for (const auto& f : m.outputs) os << ' ' << f;
  os << '\n';
  return os.str();
}

std::string write_output(const std::string& dir, const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir.empty() ? "." : dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  const auto path = (fs::path(dir.empty() ? "." : dir) / name).string();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw std::runtime_error("write failed for " + path);
  return path;
}

std::vector<HitRateSample> parse_hitrate_csv(const std::string& text) {
  std::vector<HitRateSample> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("time_s,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t p; (p = line.find(',', start)) != std::string::npos; start = p + 1)
      f.push_back(line.substr(start, p - start));
    f.push_back(line.substr(start));
    auto fail = [&] { throw std::runtime_error("hitrate csv line " + std::to_string(lineno) + ": malformed"); };
    if (f.size() != 4) fail();
    HitRateSample s;
    try {
      std::size_t used = 0;
      s.time_s = std::stod(f[0], &used);
      if (used != f[0].size()) fail();
      s.scope = Scope::parse(f[1]);
      s.value = std::stod(f[2], &used);
      if (used != f[2].size()) fail();
      s.replica = std::stoi(f[3], &used);
      if (used != f[3].size()) fail();
    } catch (const std::logic_error&) {
      fail();
    }
    out.push_back(s);
  }
  return out;
}

std::vector<HitRateSample> read_hitrate_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_hitrate_csv(os.str());
}

}  // namespace rhsim
