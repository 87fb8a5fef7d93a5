#include "pfedac/server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "pfedac/errors.hpp"
#include "pfedac/linalg.hpp"

namespace pfedac {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kPfedac: return "pfedac";
    case Mode::kLocalOnly: return "local_only";
    case Mode::kFedavgFull: return "fedavg_full";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  if (name == "pfedac") return Mode::kPfedac;
  if (name == "local_only") return Mode::kLocalOnly;
  if (name == "fedavg_full") return Mode::kFedavgFull;
  throw InvalidValue("unknown mode '" + name + "'");
}

StepsizeCheck check_stepsize_conditions(double subspace_step, double reward_bound, double radius,
                                        int horizon, double gamma) {
  const double u_delta = td_error_scale(reward_bound, radius);
  const double zeta = subspace_step;
  if (u_delta * radius * zeta / (horizon * (1.0 - gamma)) > 0.5)
    return {false, "U_delta*U_omega*zeta/(L*(1-gamma)) <= 1/2"};
  if (zeta > 1.0) return {false, "zeta <= 1"};
  if (zeta > 1.0 / (std::sqrt(6.0) * u_delta * radius))
    return {false, "zeta <= 1/(sqrt(6)*U_delta*U_omega)"};
  if (zeta > 1.0 / (2.0 * radius)) return {false, "zeta <= 1/(2*U_omega)"};
  return {};
}

double max_subspace_step(double reward_bound, double radius, int horizon, double gamma) {
  const double u_delta = td_error_scale(reward_bound, radius);
  double zeta = std::min({1.0, horizon * (1.0 - gamma) / (2.0 * u_delta * radius),
                          1.0 / (std::sqrt(6.0) * u_delta * radius), 1.0 / (2.0 * radius)});
  // Step down past rounding so the returned value passes the check itself.
  while (!check_stepsize_conditions(zeta, reward_bound, radius, horizon, gamma).ok)
    zeta = std::nextafter(zeta, 0.0);
  return zeta;
}

double default_radius(const Federation& fed, int horizon) {
  const SoftmaxPolicy uniform = SoftmaxPolicy::uniform(fed.num_actions(), fed.policy_rows);
  double largest = 0.0;
  for (const auto& mdp : fed.agents)
    largest = std::max(largest, td_system(mdp, uniform, fed.features, horizon).z_star.norm());
  return largest > 0.0 ? 2.0 * largest : 1.0;
}

double federation_reward_bound(const Federation& fed) {
  double bound = 0.0;
  for (const auto& mdp : fed.agents) bound = std::max(bound, mdp.reward_bound());
  return bound;
}

AggregateResult aggregate_and_qr(const Eigen::MatrixXd& basis,
                                 const std::vector<Eigen::MatrixXd>& increments) {
  if (increments.empty()) throw InvalidValue("aggregate_and_qr needs at least one proposal");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(basis.rows(), basis.cols());
  for (const auto& inc : increments) {
    if (inc.rows() != basis.rows() || inc.cols() != basis.cols())
      throw DimensionMismatch("local proposal has the wrong shape");
    sum += inc;
  }
  AggregateResult out;
  out.increment = sum / static_cast<double>(increments.size());
  out.q_frob = out.increment.norm();
  if (out.q_frob == 0.0) {
    // The exact factorization of an orthonormal basis; Householder would
    // reproduce it only up to rounding.
    out.basis = basis;
    out.r = Eigen::MatrixXd::Identity(basis.cols(), basis.cols());
    return out;
  }
  auto qr = thin_qr_positive(Eigen::MatrixXd(basis + out.increment));
  out.basis = std::move(qr.q);
  out.r = std::move(qr.r);
  return out;
}

// ---------------------------------------------------------------------------

void InvariantTally::record(const std::string& name, double lhs, double rhs) {
  Entry& e = entries_[name];
  const double excess = lhs - rhs;
  if (e.checks == 0 || excess > e.worst_excess) e.worst_excess = excess;
  ++e.checks;
  if (!(lhs <= rhs)) ++e.violations;
}

void InvariantTally::skip(const std::string& name) { ++entries_[name].skipped; }

long InvariantTally::total_violations() const {
  long n = 0;
  for (const auto& [name, e] : entries_) n += e.violations;
  return n;
}

long InvariantTally::total_checks() const {
  long n = 0;
  for (const auto& [name, e] : entries_) n += e.checks;
  return n;
}

void InvariantTally::merge(const InvariantTally& other) {
  for (const auto& [name, o] : other.entries_) {
    Entry& e = entries_[name];
    if (o.checks > 0 && (e.checks == 0 || o.worst_excess > e.worst_excess))
      e.worst_excess = o.worst_excess;
    e.checks += o.checks;
    e.violations += o.violations;
    e.skipped += o.skipped;
  }
}

// ---------------------------------------------------------------------------
// Persistent worker pool. Each generation hands out indices 0..count-1; the
// caller thread participates and returns once every worker has finished.

class Simulation::Pool {
 public:
  explicit Pool(int workers) {
    for (int i = 1; i < workers; ++i) threads_.emplace_back([this] { loop(); });
  }

  ~Pool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(int count, const std::function<void(int)>& job) {
    if (threads_.empty()) {
      for (int i = 0; i < count; ++i) job(i);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      job_ = &job;
      count_ = count;
      next_ = 0;
      finished_ = 0;
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    work(job, count);
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return finished_ == static_cast<int>(threads_.size()); });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void work(const std::function<void(int)>& job, int count) {
    for (int i = next_.fetch_add(1); i < count; i = next_.fetch_add(1)) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  void loop() {
    long seen = 0;
    for (;;) {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      const auto* job = job_;
      const int count = count_;
      lock.unlock();
      work(*job, count);
      lock.lock();
      if (++finished_ == static_cast<int>(threads_.size())) done_.notify_all();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int)>* job_ = nullptr;
  int count_ = 0;
  std::atomic<int> next_{0};
  int finished_ = 0;
  long generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

// ---------------------------------------------------------------------------

namespace {

// Slack for the floating-point forms of exact inequalities.
constexpr double kBoundSlack = 1e-9;
constexpr double kIdentitySlack = 1e-12;
constexpr double kOrthonormalTol = 1e-10;

}  // namespace

Simulation::Simulation(Federation fed, Hyperparams hp, std::uint64_t seed)
    : fed_(std::move(fed)), hp_(hp) {
  fed_.validate();
  if (hp_.horizon < 1) throw InvalidValue("L must be >= 1");
  if (hp_.workers < 1) throw InvalidValue("workers must be >= 1");
  if (!(hp_.radius > 0.0)) throw InvalidValue("U_omega must be positive");
  const int d = fed_.features.dim();
  if (hp_.mode == Mode::kPfedac && (hp_.rank < 1 || hp_.rank > d))
    throw InvalidValue("rank r must satisfy 1 <= r <= d");
  reward_bound_ = federation_reward_bound(fed_);

  if (hp_.mode == Mode::kPfedac) {
    Rng init(seed, StreamRole::kInitSubspace);
    server_.basis = thin_qr_positive(init.gaussian_matrix(d, hp_.rank)).q;
  }
  const int head_dim = hp_.mode == Mode::kPfedac ? hp_.rank : d;
  for (int k = 0; k < fed_.num_agents(); ++k) {
    const auto index = static_cast<std::uint64_t>(k);
    agents_.push_back({Eigen::VectorXd::Zero(head_dim),
                       SoftmaxPolicy::uniform(fed_.num_actions(), fed_.policy_rows),
                       CriticChain::start(fed_.initial_dist, Rng(seed, StreamRole::kCritic, index)),
                       ActorChain::start(fed_.initial_dist, Rng(seed, StreamRole::kActor, index))});
  }
  pool_ = std::make_unique<Pool>(std::min(hp_.workers, std::max(1, fed_.num_agents())));
}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

Eigen::VectorXd Simulation::critic_estimate(int agent) const {
  const auto& omega = agents_[agent].omega;
  return hp_.mode == Mode::kPfedac ? Eigen::VectorXd(server_.basis * omega) : omega;
}

void Simulation::agent_round(int k, std::vector<Eigen::MatrixXd>& increments,
                             std::vector<AgentRoundRecord>& records,
                             std::vector<InvariantTally>& tallies) {
  AgentState& agent = agents_[k];
  const FiniteMdp& mdp = fed_.agents[k];
  const double gamma = mdp.discount();
  const int horizon = hp_.horizon;
  const bool pfedac = hp_.mode == Mode::kPfedac;
  const Eigen::MatrixXd& basis =
      pfedac ? server_.basis : Eigen::MatrixXd(Eigen::MatrixXd::Identity(fed_.features.dim(),
                                                                         fed_.features.dim()));
  const Eigen::VectorXd value_coeffs = basis * agent.omega;

  // Critic.
  const Trajectory traj = sample_critic_block(agent.critic, mdp, agent.policy, horizon);
  const TdSample sample = td_l_error(traj, fed_.features, basis, agent.omega, gamma);
  HeadUpdate head;
  if (pfedac) {
    head = head_update({agent.omega, hp_.radius, hp_.head_step, hp_.subspace_step}, sample, basis,
                       fed_.features, traj);
    increments[k] =
        local_subspace_update(basis, sample, agent.omega, hp_.subspace_step, horizon);
  } else {
    head.omega = agent.omega + (hp_.head_step / horizon) * sample.td_feature;
  }

  // Actor.
  const ActorTrajectory actor_traj =
      sample_actor_block(agent.actor, mdp, fed_.initial_dist, agent.policy, horizon);
  const std::vector<double> deltas =
      actor_td_errors(actor_traj, fed_.features, value_coeffs, gamma, hp_.actor_successor);
  const Eigen::MatrixXd gradient = policy_gradient_estimate(deltas, actor_traj, agent.policy);
  SoftmaxPolicy next_policy = actor_step(agent.policy, gradient, hp_.actor_step);

  AgentRoundRecord& rec = records[k];
  rec.abs_delta = std::abs(sample.delta);
  for (double d : deltas) rec.max_abs_actor_delta = std::max(rec.max_abs_actor_delta, std::abs(d));
  rec.clamped = head.clamped;
  rec.gradient_estimate_norm = gradient.norm();
  rec.resets = actor_traj.reset_count();

  if (hp_.debug_invariants && pfedac) {
    InvariantTally& tally = tallies[k];
    const double u_delta = td_error_scale(reward_bound_, hp_.radius);
    const double critic_scale = u_delta / (1.0 - gamma);
    const auto phi0 = fed_.features.phi(traj.states.front());
    const Eigen::VectorXd end_diff =
        std::pow(gamma, horizon) * fed_.features.phi(traj.states.back()) - phi0;
    const TdSystem system = td_system(mdp, agent.policy, fed_.features, horizon);

    tally.record("td_error_bound", std::abs(sample.delta), critic_scale);
    tally.record("actor_td_error_bound", rec.max_abs_actor_delta, u_delta);
    tally.record("drift_norm_bound", phi0.norm() * end_diff.norm(), 2.0);
    tally.record("target_term_bound",
                 sample_target_term(traj, fed_.features, system.z_star, gamma).norm(),
                 critic_scale);
    const DecompositionResidual res =
        td_feature_decomposition_check(traj, fed_.features, basis, agent.omega, system, gamma);
    tally.record("td_decomposition_drift_form", res.drift_form, kIdentitySlack);
    tally.record("td_decomposition_noise_form", res.noise_form, kIdentitySlack);
    tally.record("head_radius", head.omega.norm(),
                 hp_.radius * (1.0 + 4 * std::numeric_limits<double>::epsilon()));
    tally.record("head_move_bound", (head.omega - agent.omega).norm(),
                 hp_.head_step * critic_scale / horizon + kBoundSlack);
    tally.record("increment_bound", increments[k].norm(),
                 hp_.subspace_step * u_delta * hp_.radius / (horizon * (1.0 - gamma)) +
                     kBoundSlack);
    tally.record("increment_orthogonality", (basis.transpose() * increments[k]).cwiseAbs().maxCoeff(),
                 kIdentitySlack);
    tally.record("actor_move_bound", (next_policy.logits() - agent.policy.logits()).norm(),
                 hp_.actor_step * std::sqrt(2.0) * u_delta + kBoundSlack);
  }

  agent.omega = std::move(head.omega);
  agent.policy = std::move(next_policy);
}

RoundReport Simulation::step() {
  const int num_agents = fed_.num_agents();
  std::vector<Eigen::MatrixXd> increments(num_agents);
  std::vector<InvariantTally> tallies(num_agents);
  RoundReport report;
  report.round = server_.round;
  report.agents.resize(num_agents);

  pool_->run(num_agents, [&](int k) { agent_round(k, increments, report.agents, tallies); });
  for (const auto& t : tallies) tally_.merge(t);

  for (const auto& rec : report.agents) report.clamp_count += rec.clamped ? 1 : 0;

  if (hp_.mode == Mode::kPfedac) {
    const AggregateResult agg = aggregate_and_qr(server_.basis, increments);
    const int r = hp_.rank;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(r, r);
    report.q_frob = agg.q_frob;
    report.r_dev = spectral_norm(agg.r - identity);
    if (hp_.debug_invariants) {
      const double gamma = fed_.discount();
      const double u_delta = td_error_scale(reward_bound_, hp_.radius);
      tally_.record("q_bound", agg.q_frob,
                    hp_.subspace_step * u_delta * hp_.radius / (hp_.horizon * (1.0 - gamma)) +
                        kBoundSlack);
      const double q_sq = agg.q_frob * agg.q_frob;
      if (check_stepsize_conditions(hp_.subspace_step, reward_bound_, hp_.radius, hp_.horizon,
                                    gamma)
              .ok) {
        const Eigen::MatrixXd r_inv =
            agg.r.triangularView<Eigen::Upper>().solve(identity);
        tally_.record("qr_r_minus_identity", report.r_dev, 2.0 * q_sq + kBoundSlack);
        tally_.record("qr_r_inverse_minus_identity", spectral_norm(r_inv - identity),
                      4.0 * q_sq + kBoundSlack);
        tally_.record("qr_r_inverse_norm", spectral_norm(r_inv),
                      1.0 / (1.0 - 2.0 * q_sq) + kBoundSlack);
      } else {
        tally_.skip("qr_r_minus_identity");
      }
      tally_.record("qr_reconstruction",
                    (agg.basis * agg.r - (server_.basis + agg.increment)).cwiseAbs().maxCoeff(),
                    kIdentitySlack);
    }
    server_.basis = agg.basis;
    tally_.record("orthonormality", orthonormality_error(server_.basis), kOrthonormalTol);
  } else if (hp_.mode == Mode::kFedavgFull) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(agents_.front().omega.size());
    for (const auto& a : agents_) mean += a.omega;
    mean /= static_cast<double>(num_agents);
    for (auto& a : agents_) a.omega = mean;
  }

  last_q_frob_ = report.q_frob;
  last_r_dev_ = report.r_dev;
  last_clamps_ = report.clamp_count;
  ++server_.round;
  return report;
}

RoundMetrics Simulation::measure() {
  const int num_agents = fed_.num_agents();
  RoundMetrics m;
  m.round = server_.round;
  m.q_frob = last_q_frob_;
  m.r_dev = last_r_dev_;
  m.clamp_count = last_clamps_;
  m.agent_x_sq.resize(num_agents);
  m.agent_grad_sq.resize(num_agents);
  std::vector<TdSystem> systems(num_agents);

  pool_->run(num_agents, [&](int k) {
    const FiniteMdp& mdp = fed_.agents[k];
    const SoftmaxPolicy& policy = agents_[k].policy;
    systems[k] = td_system(mdp, policy, fed_.features, hp_.horizon);
    m.agent_x_sq[k] = (critic_estimate(k) - systems[k].z_star).squaredNorm();
    m.agent_grad_sq[k] =
        exact_value_and_gradient(mdp, policy, fed_.initial_dist).grad_J.squaredNorm();
  });

  for (int k = 0; k < num_agents; ++k) {
    m.x_bar += m.agent_x_sq[k];
    m.g_bar += m.agent_grad_sq[k];
  }
  m.x_bar /= num_agents;
  m.g_bar /= num_agents;

  const Eigen::MatrixXd z = stack_fixed_points(systems);
  const auto spectrum = positive_spectrum(Eigen::MatrixXd(z * z.transpose()), kGramZeroCutoff);
  m.lambda_plus_min = spectrum.rank > 0 ? spectrum.min_positive : 0.0;
  m.gram_rank = static_cast<int>(spectrum.rank);

  if (hp_.mode != Mode::kPfedac) return m;

  const int r = hp_.rank;
  const int d = fed_.features.dim();
  if (fed_.b_star) {
    const auto pad = principal_angle_distance(server_.basis, *fed_.b_star);
    m.pad_frob_sq = pad.frob_sq;
    m.pad_spectral = pad.spectral;
    if (d >= 2 * r && m.gram_rank == r) {
      tally_.record("head_error_lower_bound",
                    m.lambda_plus_min * pad.frob_sq / (static_cast<double>(r) * num_agents),
                    m.x_bar + kBoundSlack);
    } else {
      tally_.skip("head_error_lower_bound");
    }
  } else if (z.cols() >= r) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU);
    const auto pad = principal_angle_distance(server_.basis, svd.matrixU().leftCols(r));
    m.pad_frob_sq = pad.frob_sq;
    m.pad_spectral = pad.spectral;
    m.pad_proxy = true;
  }
  return m;
}

std::vector<RoundMetrics> Simulation::run(int rounds, int stride,
                                          const std::function<void(const RoundReport&)>& on_round,
                                          bool record_wallclock) {
  if (stride < 1) throw InvalidValue("metrics stride must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const auto stamp = [&](RoundMetrics& row) {
    if (record_wallclock)
      row.wallclock_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
  };
  std::vector<RoundMetrics> added;
  const auto record = [&] {
    RoundMetrics row = measure();
    stamp(row);
    server_.metrics_history.push_back(row);
    added.push_back(std::move(row));
  };
  if (server_.metrics_history.empty() || server_.metrics_history.back().round != server_.round)
    record();
  for (int i = 1; i <= rounds; ++i) {
    const RoundReport report = step();
    if (on_round) on_round(report);
    if (i % stride == 0 || i == rounds) record();
  }
  return added;
}

// ---------------------------------------------------------------------------

TimeAverages window_average(const std::vector<RoundMetrics>& history, int begin, int end) {
  TimeAverages out;
  double pad_sum = 0.0;
  int pad_rows = 0;
  for (const auto& row : history) {
    if (row.round < begin || row.round >= end) continue;
    out.x_bar += row.x_bar;
    out.g_bar += row.g_bar;
    if (row.pad_frob_sq) {
      pad_sum += *row.pad_frob_sq;
      ++pad_rows;
    }
    ++out.rows;
  }
  if (out.rows > 0) {
    out.x_bar /= out.rows;
    out.g_bar /= out.rows;
  }
  if (pad_rows > 0) out.pad = pad_sum / pad_rows;
  return out;
}

TimeAverages time_average(const std::vector<RoundMetrics>& history, int burn_in, int horizon_T) {
  return window_average(history, burn_in, horizon_T);
}

std::vector<RoundMetrics> run_baseline(Mode mode, const Federation& fed, Hyperparams hp,
                                       std::uint64_t seed, int rounds, int stride) {
  if (mode == Mode::kPfedac) throw InvalidValue("run_baseline expects a baseline mode");
  hp.mode = mode;
  Simulation sim(fed, hp, seed);
  sim.run(rounds, stride);
  return sim.server().metrics_history;
}

SweepSummary speedup_sweep(const std::vector<int>& agent_counts, int rounds, int burn_in,
                           int stride, const Hyperparams& hp, std::uint64_t seed,
                           const std::function<Federation(int)>& make_federation) {
  SweepSummary summary;
  for (int k : agent_counts) {
    Simulation sim(make_federation(k), hp, seed);
    sim.run(rounds, stride);
    const auto& history = sim.server().metrics_history;
    SweepRow row;
    row.num_agents = k;
    row.averages = time_average(history, burn_in, rounds);
    row.final_pad = history.back().pad_frob_sq.value_or(0.0);
    summary.rows.push_back(row);
  }
  std::vector<SweepRow> sorted = summary.rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.num_agents < b.num_agents; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    summary.x_monotone =
        summary.x_monotone && sorted[i].averages.x_bar <= sorted[i - 1].averages.x_bar;
    summary.g_monotone =
        summary.g_monotone && sorted[i].averages.g_bar <= sorted[i - 1].averages.g_bar;
  }
  return summary;
}

}  // namespace pfedac
