#include "rhsim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace rhsim {

namespace {

void check_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0,1]");
}

// Shared birth-death structure of the recognition chains: up with
// probability `up`, down from level i with weight^i * (1 - up).
Matrix recognition_matrix(double up, double weight, int top) {
  Matrix p(static_cast<std::size_t>(top) + 1);
  p(0, 0) = 1.0 - up;
  p(0, 1) = up;
  double w = 1.0;
  for (int i = 1; i <= top; ++i) {
    w *= weight;
    const double down = w * (1.0 - up);
    p(i, i - 1) = down;
    if (i < top) {
      p(i, i + 1) = up;
      p(i, i) = 1.0 - (up + down);
    } else {
      p(i, i) = 1.0 - down;
    }
  }
  return p;
}

// recognition_matrix applied to v without building the matrix.
void recognition_apply(const ChainVector& v, double up, double weight, int top, ChainVector& out) {
  out.assign(v.size(), 0.0);
  out[0] += v[0] * (1.0 - up);
  out[1] += v[0] * up;
  double w = 1.0;
  for (int i = 1; i <= top; ++i) {
    w *= weight;
    const double down = w * (1.0 - up);
    out[i - 1] += v[i] * down;
    if (i < top) {
      out[i + 1] += v[i] * up;
      out[i] += v[i] * (1.0 - (up + down));
    } else {
      out[i] += v[i] * (1.0 - down);
    }
  }
}

void reorder_apply(const ChainVector& phi, double v, double r, double gamma, int top,
                   ChainVector& out) {
  out.assign(phi.size(), 0.0);
  out[0] += phi[0];
  double g = 1.0;
  for (int i = 1; i <= top; ++i) {
    g *= gamma;
    const double leave = i == 1 ? (1.0 - v) + v * gamma * (1.0 - r) : 1.0 - v;
    const double back = i >= 2 ? v * g * (1.0 - r) : 0.0;
    const double fwd = i < top ? v * r : 0.0;
    out[0] += phi[i] * leave;
    if (i >= 2) out[i - 1] += phi[i] * back;
    if (i < top) out[i + 1] += phi[i] * fwd;
    out[i] += phi[i] * (1.0 - (leave + back + fwd));
  }
}

}  // namespace

double Matrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j);
  return s;
}

ChainVector apply(const ChainVector& v, const Matrix& p) {
  if (v.size() != p.size()) throw std::invalid_argument("apply: dimension mismatch");
  ChainVector out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += v[i] * p(i, j);
  }
  return out;
}

bool is_simplex(const ChainVector& v, double tol) {
  double s = 0.0;
  for (double x : v) {
    if (x < -tol || x > 1.0 + tol || std::isnan(x)) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

Matrix cc_transition_matrix(double pop, double alpha, int channel_threshold) {
  check_unit(pop, "pop");
  check_unit(alpha, "alpha");
  if (channel_threshold < 1) throw std::invalid_argument("channel_threshold must be >= 1");
  return recognition_matrix(pop, alpha, channel_threshold);
}

Matrix ic_transition_matrix(double r, double gamma, int item_threshold) {
  check_unit(r, "r");
  check_unit(gamma, "gamma");
  if (item_threshold < 1) throw std::invalid_argument("item_threshold must be >= 1");
  return recognition_matrix(r, gamma, item_threshold);
}

ChainVector sc_step(const ChainVector& psi, double r) {
  return {psi[0] * (1.0 - r), psi[1] + psi[0] * r};
}

Matrix oc_reorder_matrix(double v, double r, double gamma, int top) {
  check_unit(v, "v_recognized");
  check_unit(r, "r");
  check_unit(gamma, "gamma");
  if (top < 1) throw std::invalid_argument("item_threshold must be >= 1");
  Matrix p(static_cast<std::size_t>(top) + 1);
  p(0, 0) = 1.0;
  for (int i = 1; i <= top; ++i) {
    ChainVector unit(static_cast<std::size_t>(top) + 1, 0.0), row;
    unit[i] = 1.0;
    reorder_apply(unit, v, r, gamma, top, row);
    for (int j = 0; j <= top; ++j) p(i, j) = row[j];
  }
  return p;
}

ChainVector oc_reorder_step(const ChainVector& phi, double v_recognized, double r, double gamma,
                            int item_threshold) {
  if (phi.size() != static_cast<std::size_t>(item_threshold) + 1)
    throw std::invalid_argument("oc_reorder_step: phi has wrong length");
  if (!is_simplex(phi)) throw std::invalid_argument("oc_reorder_step: phi is not a simplex");
  check_unit(v_recognized, "v_recognized");
  check_unit(r, "r");
  check_unit(gamma, "gamma");
  ChainVector out;
  reorder_apply(phi, v_recognized, r, gamma, item_threshold, out);
  return out;
}

void AdmissionWorkspace::reset(int item_threshold) {
  const auto n = static_cast<std::size_t>(item_threshold) + 1;
  for (auto* v : {&b_prime, &n0, &free_slots, &b_next, &entry_scale, &removal}) v->assign(n, 0.0);
}

std::vector<ChainVector> oc_admission_step(AdmissionWorkspace& ws,
                                           std::span<const AdmissionInput> classes,
                                           int oc_capacity, int item_threshold) {
  const int top = item_threshold;
  ws.reset(top);

  // Expected sub-queue sizes after reordering, and eligible entrants per level.
  // An item outside the cache enters at level i when the peer holds it, its
  // channel is recognized and its level was i-1; local items never enter.
  for (const auto& c : classes) {
    const auto& phi = *c.phi_prime;
    const auto& prev = *c.v_item_prev;
    const double reach = c.class_size * (1.0 - c.r0) * c.r * c.v_recognized * phi[0];
    for (int i = 1; i <= top; ++i) {
      ws.b_prime[i] += c.class_size * phi[i];
      ws.n0[i] += reach * prev[i - 1];
    }
  }

  // Lower levels have precedence over the whole cache.
  double free = static_cast<double>(oc_capacity);
  for (int i = 1; i <= top; ++i) {
    ws.free_slots[i] = free;
    const double n0 = ws.n0[i];
    const double bp = ws.b_prime[i];
    ws.b_next[i] = std::min(n0 + bp, free);
    ws.entry_scale[i] = n0 <= free ? 1.0 : free / n0;
    if (n0 + bp <= free) {
      ws.removal[i] = 0.0;
    } else if (n0 > free) {
      ws.removal[i] = 1.0;
    } else {
      ws.removal[i] = bp > 0.0 ? 1.0 - (free - n0) / bp : 0.0;
    }
    free -= ws.b_next[i];
    if (free < 0.0) free = 0.0;
  }

  std::vector<ChainVector> out;
  out.reserve(classes.size());
  for (const auto& c : classes) {
    const auto& phi = *c.phi_prime;
    const auto& prev = *c.v_item_prev;
    ChainVector next(phi.size(), 0.0);
    const double reach = (1.0 - c.r0) * c.r * c.v_recognized;
    double entered = 0.0;
    double removed = 0.0;
    for (int i = 1; i <= top; ++i) {
      const double p_enter = reach * prev[i - 1] * ws.entry_scale[i];
      entered += p_enter;
      next[i] = phi[0] * p_enter + phi[i] * (1.0 - ws.removal[i]);
      removed += phi[i] * ws.removal[i];
    }
    next[0] = phi[0] * (1.0 - entered) + removed;
    out.push_back(std::move(next));
  }
  return out;
}

double ItemClassState::p_oc() const {
  double s = 0.0;
  for (std::size_t i = 1; i < phi.size(); ++i) s += phi[i];
  return s;
}

double CommunityModelState::expected_oc_occupancy() const {
  double total = 0.0;
  for (const auto& c : classes) total += c.class_size * c.p_oc();
  return total;
}

CommunityModelState initial_state(const CommunityModelConfig& config) {
  const auto& p = config.params;
  CommunityModelState s;
  ChainVector v0(static_cast<std::size_t>(p.channel_threshold) + 1, 0.0);
  v0[0] = 1.0;
  s.v_channel.assign(config.pop.size(), v0);
  ChainVector level0(static_cast<std::size_t>(p.item_threshold) + 1, 0.0);
  level0[0] = 1.0;
  for (const auto& spec : config.classes) {
    if (spec.channel >= config.pop.size()) throw std::invalid_argument("item class channel out of range");
    ItemClassState c;
    c.channel = spec.channel;
    c.class_size = spec.class_size;
    c.r0 = spec.r0;
    c.psi = {1.0, 0.0};
    c.v_item = level0;
    c.phi = level0;
    c.r = spec.r0;
    s.classes.push_back(std::move(c));
  }
  return s;
}

CommunityModelState model_step(const CommunityModelConfig& config, const CommunityModelState& state) {
  const auto& p = config.params;
  const int rc = p.channel_threshold;
  const int top = p.item_threshold;

  CommunityModelState next;
  next.step = state.step + 1;
  next.v_channel.resize(state.v_channel.size());
  for (std::size_t c = 0; c < state.v_channel.size(); ++c)
    recognition_apply(state.v_channel[c], config.pop[c], p.channel_forget, rc, next.v_channel[c]);

  const std::size_t n = state.classes.size();
  next.classes = state.classes;
  std::vector<ChainVector> phi_prime(n);
  std::vector<AdmissionInput> inputs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& cur = state.classes[k];
    auto& nxt = next.classes[k];
    const double v_rec = next.v_channel[cur.channel][rc];
    recognition_apply(cur.v_item, cur.r, p.item_forget, top, nxt.v_item);
    nxt.psi = sc_step(cur.psi, cur.r);
    reorder_apply(cur.phi, v_rec, cur.r, p.item_forget, top, phi_prime[k]);
    inputs[k] = {cur.class_size, cur.r0, cur.r, v_rec, &cur.v_item, &phi_prime[k]};
  }

  AdmissionWorkspace ws;
  auto phis = oc_admission_step(ws, inputs, p.oc_capacity, top);
  for (std::size_t k = 0; k < n; ++k) {
    auto& nxt = next.classes[k];
    nxt.phi = std::move(phis[k]);
    const double pop = config.pop[nxt.channel];
    const double r = nxt.r0 + (1.0 - nxt.r0) * (pop * nxt.psi[1] + (1.0 - pop) * nxt.p_oc());
    nxt.r = std::clamp(r, 0.0, 1.0);
  }
  return next;
}

std::vector<int> channel_ranks(const std::vector<double>& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pop[a] > pop[b]; });
  std::vector<int> rank(pop.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k) + 1;
  return rank;
}

SteadyStateResult run_to_steady_state(const CommunityModelConfig& config,
                                      CommunityModelState initial, TraceOptions trace) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (config.window < 1) throw std::invalid_argument("window must be >= 1");
  if (config.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!(config.encounter_rate > 0.0)) throw std::invalid_argument("encounter_rate must be > 0");

  SteadyStateResult res;
  const auto ranks = channel_ranks(config.pop);
  auto record = [&](const CommunityModelState& s) {
    if (!trace.enabled) return;
    for (std::size_t k = 0; k < s.classes.size(); ++k) {
      const auto& c = s.classes[k];
      res.trace.push_back({s.step, static_cast<double>(s.step) / config.encounter_rate,
                           ranks[c.channel], static_cast<int>(k), c.r, c.psi[1], c.p_oc()});
    }
  };

  CommunityModelState state = std::move(initial);
  record(state);
  int streak = 0;
  const long stride = std::max(1L, trace.stride);
  while (state.step < config.max_steps) {
    auto next = model_step(config, state);
    double delta = 0.0;
    for (std::size_t k = 0; k < next.classes.size(); ++k)
      delta = std::max(delta, std::abs(next.classes[k].r - state.classes[k].r));
    state = std::move(next);
    streak = delta < config.epsilon ? streak + 1 : 0;
    if (streak >= config.window) {
      res.converged = true;
      break;
    }
    if (state.step % stride == 0) record(state);
  }
  if (trace.enabled && (res.trace.empty() || res.trace.back().step != state.step)) record(state);
  res.steps = state.step;
  for (const auto& c : state.classes) res.r.push_back(c.r);
  res.final_state = std::move(state);
  return res;
}

CommunityModelConfig community_model_from_scenario(const Scenario& s, CommunityId c,
                                                   double encounter_rate) {
  CommunityModelConfig cfg;
  cfg.params = s.config.recognition;
  cfg.community_size = s.community_sizes.at(c);
  cfg.encounter_rate = encounter_rate;
  cfg.epsilon = s.config.hybrid.analytic_epsilon;
  cfg.window = s.config.hybrid.analytic_window;
  cfg.max_steps = s.config.hybrid.analytic_max_steps;
  const auto counts = s.subscriber_counts(c);
  cfg.pop.resize(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j)
    cfg.pop[j] = static_cast<double>(counts[j]) / cfg.community_size;

  std::map<std::pair<ChannelId, double>, double> groups;
  for (const auto& it : s.items) groups[{it.channel, s.initial_replication(it.id, c)}] += 1.0;
  for (const auto& [key, size] : groups) cfg.classes.push_back({key.first, size, key.second});
  return cfg;
}

}  // namespace rhsim
