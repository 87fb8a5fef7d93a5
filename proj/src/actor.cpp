#include "pfedac/actor.hpp"

#include <algorithm>

#include "pfedac/errors.hpp"

namespace pfedac {

ActorChain ActorChain::start(const Eigen::VectorXd& eta, Rng rng) {
  ActorChain chain{0, std::move(rng)};
  chain.state = chain.rng.categorical(eta);
  return chain;
}

int ActorTrajectory::reset_count() const {
  return static_cast<int>(std::count(resets.begin(), resets.end(), true));
}

ActorTrajectory sample_actor_block(ActorChain& chain, const FiniteMdp& mdp,
                                   const Eigen::VectorXd& eta, const SoftmaxPolicy& policy,
                                   int horizon) {
  const double gamma = mdp.discount();
  ActorTrajectory traj;
  traj.states.reserve(horizon + 1);
  int s = chain.state;
  traj.states.push_back(s);
  for (int l = 0; l < horizon; ++l) {
    const int a = chain.rng.categorical(policy.action_probs(s));
    const int successor = chain.rng.categorical(mdp.transition_row(s, a));
    const bool reset = !chain.rng.bernoulli(gamma);
    traj.actions.push_back(a);
    traj.rewards.push_back(mdp.reward(s, a));
    traj.successors.push_back(successor);
    traj.resets.push_back(reset);
    s = reset ? chain.rng.categorical(eta) : successor;
    traj.states.push_back(s);
  }
  chain.state = s;
  return traj;
}

std::vector<double> actor_td_errors(const ActorTrajectory& traj, const FeatureMap& features,
                                    const Eigen::VectorXd& value_coeffs, double gamma,
                                    ActorSuccessor successor) {
  std::vector<double> deltas(traj.length());
  for (int l = 0; l < traj.length(); ++l) {
    const int next =
        successor == ActorSuccessor::kTransition ? traj.successors[l] : traj.states[l + 1];
    deltas[l] = traj.rewards[l] +
                (gamma * features.phi(next) - features.phi(traj.states[l])).dot(value_coeffs);
  }
  return deltas;
}

Eigen::MatrixXd policy_gradient_estimate(const std::vector<double>& deltas,
                                         const ActorTrajectory& traj,
                                         const SoftmaxPolicy& policy) {
  if (static_cast<int>(deltas.size()) != traj.length())
    throw DimensionMismatch("deltas and trajectory are misaligned");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(policy.num_rows(), policy.num_actions());
  for (int l = 0; l < traj.length(); ++l) {
    const int s = traj.states[l];
    g.row(policy.row_of(s)) += deltas[l] * policy.grad_log_prob_row(s, traj.actions[l]).transpose();
  }
  return g / traj.length();
}

SoftmaxPolicy actor_step(const SoftmaxPolicy& policy, const Eigen::MatrixXd& gradient,
                         double step) {
  return SoftmaxPolicy(policy.logits() + step * gradient, policy.state_rows());
}

}  // namespace pfedac
