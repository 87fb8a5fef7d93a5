#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfedac/actor.hpp"
#include "pfedac/critic.hpp"
#include "pfedac/env.hpp"
#include "pfedac/oracle.hpp"
#include "pfedac/policy.hpp"

namespace pfedac {

enum class Mode {
  kPfedac,      // shared subspace + personalized heads
  kLocalOnly,   // full d-dim critic per agent, no communication
  kFedavgFull,  // full d-dim critic averaged every round
};

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct Hyperparams {
  int horizon = 1;             // L
  int rank = 1;                // r
  double head_step = 0.0;      // beta
  double subspace_step = 0.0;  // zeta
  double actor_step = 0.0;     // alpha
  double radius = 1.0;         // U_omega
  Mode mode = Mode::kPfedac;
  ActorSuccessor actor_successor = ActorSuccessor::kTransition;
  int workers = 1;
  bool debug_invariants = false;
};

/// The inequalities a subspace step must satisfy before a run starts.
struct StepsizeCheck {
  bool ok = true;
  std::string violated;  // human-readable inequality, empty when ok
};

StepsizeCheck check_stepsize_conditions(double subspace_step, double reward_bound, double radius,
                                        int horizon, double gamma);

/// Largest subspace step satisfying every condition above.
double max_subspace_step(double reward_bound, double radius, int horizon, double gamma);

/// U_omega default: twice the largest ||z^{k,*}|| at the uniform initial
/// policy (an upper bound on ||omega^{k,*}|| in any orthonormal basis).
double default_radius(const Federation& fed, int horizon);

/// Largest reward bound across agents (U_r).
double federation_reward_bound(const Federation& fed);

struct AggregateResult {
  Eigen::MatrixXd basis;      // B_{t+1}
  Eigen::MatrixXd r;          // R_{t+1}, diag > 0
  Eigen::MatrixXd increment;  // Q_t = mean of local increments
  double q_frob = 0.0;
};

/// B_bar = B_t + mean_k(Delta B^k) in agent-index order, then thin QR with
/// diag(R) > 0. Throws RankDeficientAggregate.
AggregateResult aggregate_and_qr(const Eigen::MatrixXd& basis,
                                 const std::vector<Eigen::MatrixXd>& increments);

struct RoundMetrics {
  int round = 0;
  double x_bar = 0.0;                  // (1/K) sum ||x_t^k||^2
  std::optional<double> pad_frob_sq;   // ||m_t||_F^2
  std::optional<double> pad_spectral;
  bool pad_proxy = false;              // measured against SVD(Z*) instead of B*
  double g_bar = 0.0;                  // (1/K) sum ||grad J^k||^2
  double q_frob = 0.0;                 // of the aggregation that produced B_t
  double r_dev = 0.0;                  // ||R_t - I||_2
  int clamp_count = 0;                 // head clamps in the round that produced this state
  double wallclock_ms = 0.0;
  double lambda_plus_min = 0.0;        // of Z* Z*^T
  int gram_rank = 0;
  std::vector<double> agent_x_sq;
  std::vector<double> agent_grad_sq;
};

/// Per-agent by-products of one round, for tracing.
struct AgentRoundRecord {
  double abs_delta = 0.0;
  double max_abs_actor_delta = 0.0;
  bool clamped = false;
  double gradient_estimate_norm = 0.0;
  int resets = 0;
};

struct RoundReport {
  int round = 0;  // index of the state the round started from
  std::vector<AgentRoundRecord> agents;
  double q_frob = 0.0;
  double r_dev = 0.0;
  int clamp_count = 0;
};

/// Running pass/fail counts for named runtime invariants.
class InvariantTally {
 public:
  struct Entry {
    long checks = 0;
    long violations = 0;
    double worst_excess = 0.0;  // max(lhs - rhs) observed, may be negative
    long skipped = 0;
  };

  void record(const std::string& name, double lhs, double rhs);
  void skip(const std::string& name);
  const std::map<std::string, Entry>& entries() const { return entries_; }
  long total_violations() const;
  long total_checks() const;
  void merge(const InvariantTally& other);

 private:
  std::map<std::string, Entry> entries_;
};

struct AgentState {
  Eigen::VectorXd omega;  // r-dim head (pfedac) or d-dim critic (baselines)
  SoftmaxPolicy policy;
  CriticChain critic;
  ActorChain actor;
};

struct ServerState {
  Eigen::MatrixXd basis;  // B_t
  int round = 0;
  std::vector<RoundMetrics> metrics_history;
};

/// Barrier-synchronized federation loop. Agents are stepped concurrently by
/// `workers` threads; every reduction runs in agent-index order, so output is
/// identical for any worker count.
class Simulation {
 public:
  Simulation(Federation fed, Hyperparams hp, std::uint64_t seed);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  const Federation& federation() const { return fed_; }
  const Hyperparams& hyperparams() const { return hp_; }
  const ServerState& server() const { return server_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  std::vector<AgentState>& mutable_agents() { return agents_; }
  const InvariantTally& invariants() const { return tally_; }

  /// Current estimate B_t omega^k (pfedac) or z^k (baselines).
  Eigen::VectorXd critic_estimate(int agent) const;

  /// One round t -> t+1.
  RoundReport step();

  /// Oracle metrics at the current state; also runs the per-state invariant
  /// checks (orthonormality, lower bound on head errors).
  RoundMetrics measure();

  /// Measures the current state, then `rounds` rounds with a measurement
  /// every `stride` rounds (and always after the final one). Appends to the
  /// metrics history and returns the rows added.
  std::vector<RoundMetrics> run(int rounds, int stride,
                                const std::function<void(const RoundReport&)>& on_round = {},
                                bool record_wallclock = false);

 private:
  void agent_round(int k, std::vector<Eigen::MatrixXd>& increments,
                   std::vector<AgentRoundRecord>& records, std::vector<InvariantTally>& tallies);

  Federation fed_;
  Hyperparams hp_;
  ServerState server_;
  std::vector<AgentState> agents_;
  InvariantTally tally_;
  double last_q_frob_ = 0.0;
  double last_r_dev_ = 0.0;
  int last_clamps_ = 0;
  double reward_bound_ = 1.0;

  class Pool;
  std::unique_ptr<Pool> pool_;
};

/// Time averages over rounds burn_in..T-1 of the measured rows.
struct TimeAverages {
  double x_bar = 0.0;
  double g_bar = 0.0;
  std::optional<double> pad = std::nullopt;
  int rows = 0;
};

TimeAverages time_average(const std::vector<RoundMetrics>& history, int burn_in, int horizon_T);

/// Averages over rounds [begin, end) of the measured rows.
TimeAverages window_average(const std::vector<RoundMetrics>& history, int begin, int end);

/// Runs one comparison arm (local_only or fedavg_full) and returns its history.
std::vector<RoundMetrics> run_baseline(Mode mode, const Federation& fed, Hyperparams hp,
                                       std::uint64_t seed, int rounds, int stride);

struct SweepRow {
  int num_agents = 0;
  TimeAverages averages;
  double final_pad = 0.0;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  bool x_monotone = true;  // x_bar_T non-increasing in K
  bool g_monotone = true;
};

/// For each K, builds a federation with `make_federation(K)` and runs pfedac
/// for T rounds; reports time averages after the burn-in.
SweepSummary speedup_sweep(const std::vector<int>& agent_counts, int rounds, int burn_in,
                           int stride, const Hyperparams& hp, std::uint64_t seed,
                           const std::function<Federation(int)>& make_federation);

}  // namespace pfedac
