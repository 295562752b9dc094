#pragma once

#include <span>
#include <vector>

#include "rhsim/scenario.hpp"

namespace rhsim {

/// Probability vector of one Markov chain.
using ChainVector = std::vector<double>;

/// Small dense row-stochastic matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double row_sum(std::size_t i) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Row vector times matrix.
ChainVector apply(const ChainVector& v, const Matrix& p);

bool is_simplex(const ChainVector& v, double tol = 1e-9);

/// Channel recognition chain over levels 0..R_c.
Matrix cc_transition_matrix(double pop, double alpha, int channel_threshold);

/// Item recognition chain over levels 0..R, driven by the replication r.
Matrix ic_transition_matrix(double r, double gamma, int item_threshold);

/// Subscribed-channel cache: absorbing two-state chain.
ChainVector sc_step(const ChainVector& psi, double r);

/// Internal reordering of the opportunistic cache after an encounter;
/// state 0 is "outside the cache". `v_recognized` is the probability that the
/// item's channel is recognized after the encounter.
Matrix oc_reorder_matrix(double v_recognized, double r, double gamma, int item_threshold);
ChainVector oc_reorder_step(const ChainVector& phi, double v_recognized, double r, double gamma,
                            int item_threshold);

/// Per level i in [1, R]: expected occupancy after reordering, eligible
/// entrants, free slots, final occupancy. Index 0 is unused.
struct AdmissionWorkspace {
  std::vector<double> b_prime;
  std::vector<double> n0;
  std::vector<double> free_slots;
  std::vector<double> b_next;
  std::vector<double> entry_scale;    // fraction of eligible entrants admitted
  std::vector<double> removal;        // p_{i,0} for old items

  void reset(int item_threshold);
};

/// Per-class inputs to the admission step.
struct AdmissionInput {
  double class_size = 1.0;
  double r0 = 0.0;
  double r = 0.0;               // replication before the encounter
  double v_recognized = 0.0;    // channel recognized after the encounter
  const ChainVector* v_item_prev = nullptr;  // item level before the encounter
  const ChainVector* phi_prime = nullptr;    // after reordering
};

/// Joint admission of new items into the opportunistic cache for every class.
/// Fills the workspace (B'_i, N_{0,i}, F_i, B_i^{t+1}) and returns the next
/// opportunistic-cache vector of each class.
std::vector<ChainVector> oc_admission_step(AdmissionWorkspace& ws,
                                           std::span<const AdmissionInput> classes,
                                           int oc_capacity, int item_threshold);

/// A group of items of one channel that share r0 and therefore evolve
/// identically.
struct ItemClassSpec {
  ChannelId channel = 0;
  double class_size = 1.0;
  double r0 = 0.0;
};

struct CommunityModelConfig {
  RecognitionParams params;
  std::vector<double> pop;  // Pop(c) per channel
  std::vector<ItemClassSpec> classes;
  int community_size = 1;
  double encounter_rate = 0.01;  // encounters per node per second
  double epsilon = 1e-6;
  int window = 10;
  long max_steps = 1000000;
};

struct ItemClassState {
  ChannelId channel = 0;
  double class_size = 1.0;
  double r0 = 0.0;
  ChainVector psi;     // 2 states
  ChainVector v_item;  // R+1 levels
  ChainVector phi;     // R+1 sub-queues, 0 = outside
  double r = 0.0;

  /// Probability of being in the opportunistic cache, any level.
  double p_oc() const;
};

struct CommunityModelState {
  std::vector<ChainVector> v_channel;  // R_c+1 levels per channel
  std::vector<ItemClassState> classes;
  long step = 0;

  /// Expected opportunistic-cache occupancy, summed over classes.
  double expected_oc_occupancy() const;
};

CommunityModelState initial_state(const CommunityModelConfig& config);

/// One encounter of the tagged node, all classes advanced synchronously from
/// the current snapshot.
CommunityModelState model_step(const CommunityModelConfig& config, const CommunityModelState& state);

struct TraceRow {
  long step = 0;
  double time_s = 0.0;
  int channel_rank = 0;  // 1 = most popular in the community
  int item_class = 0;
  double r = 0.0;
  double p_sc = 0.0;
  double p_oc = 0.0;
};

struct SteadyStateResult {
  bool converged = false;
  long steps = 0;
  std::vector<double> r;  // per class
  CommunityModelState final_state;
  std::vector<TraceRow> trace;
};

struct TraceOptions {
  bool enabled = true;
  long stride = 1;  // record every stride-th step (step 0 and the last are always kept)
};

/// Iterates model_step until the largest per-class change of r stays below
/// epsilon for `window` consecutive steps, or max_steps is reached.
SteadyStateResult run_to_steady_state(const CommunityModelConfig& config,
                                      CommunityModelState initial,
                                      TraceOptions trace = {});

/// Channel ranks by descending popularity, ties by id; rank 1 is the most
/// popular.
std::vector<int> channel_ranks(const std::vector<double>& pop);

/// Model of one community of a scenario: popularity from the realized resident
/// subscriptions, one class per (channel, r0).
CommunityModelConfig community_model_from_scenario(const Scenario& s, CommunityId c,
                                                   double encounter_rate);

}  // namespace rhsim
