#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pfedac/env.hpp"
#include "pfedac/policy.hpp"
#include "pfedac/rng.hpp"

namespace pfedac {

/// Live state of one agent's actor chain on the companion kernel
/// gamma P + (1 - gamma) eta.
struct ActorChain {
  int state = 0;
  Rng rng;

  static ActorChain start(const Eigen::VectorXd& eta, Rng rng);
};

/// Companion-chain block. Each step draws a ~ pi(.|s), a successor
/// s' ~ P(.|s,a), then flips a gamma-coin: heads keeps s', tails resets the
/// chain to a fresh draw from eta.
struct ActorTrajectory {
  std::vector<int> states;      // chain states s_hat_0..s_hat_L
  std::vector<int> actions;     // L
  std::vector<double> rewards;  // R(s_hat_l, a_hat_l), original reward table
  std::vector<int> successors;  // pre-reset P-successor of step l
  std::vector<bool> resets;     // step l ended in a reset to eta

  int length() const { return static_cast<int>(actions.size()); }
  int reset_count() const;
};

/// Which next state enters the one-step actor TD error.
enum class ActorSuccessor {
  /// The P-successor drawn before the reset coin. Its conditional mean given
  /// (s, a) is Q(s,a) - V(s) at the critic fixed point.
  kTransition,
  /// The companion-chain state s_hat_{l+1} (reset included).
  kChain,
};

ActorTrajectory sample_actor_block(ActorChain& chain, const FiniteMdp& mdp,
                                   const Eigen::VectorXd& eta, const SoftmaxPolicy& policy,
                                   int horizon);

/// delta_l = r_l + (gamma phi(s'_l) - phi(s_l))^T B omega, l = 0..L-1.
std::vector<double> actor_td_errors(const ActorTrajectory& traj, const FeatureMap& features,
                                    const Eigen::VectorXd& value_coeffs, double gamma,
                                    ActorSuccessor successor = ActorSuccessor::kTransition);

/// g = (1/L) sum_l delta_l grad log pi(a_l|s_l), in logit-table shape.
Eigen::MatrixXd policy_gradient_estimate(const std::vector<double>& deltas,
                                         const ActorTrajectory& traj,
                                         const SoftmaxPolicy& policy);

/// theta' = theta + alpha g.
SoftmaxPolicy actor_step(const SoftmaxPolicy& policy, const Eigen::MatrixXd& gradient,
                         double step);

}  // namespace pfedac
