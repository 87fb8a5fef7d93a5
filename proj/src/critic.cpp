#include "pfedac/critic.hpp"

#include <cmath>

#include "pfedac/errors.hpp"
#include "pfedac/linalg.hpp"

namespace pfedac {

CriticChain CriticChain::start(const Eigen::VectorXd& eta, Rng rng) {
  CriticChain chain{0, std::move(rng)};
  chain.state = chain.rng.categorical(eta);
  return chain;
}

Trajectory sample_critic_block(CriticChain& chain, const FiniteMdp& mdp,
                               const SoftmaxPolicy& policy, int horizon) {
  Trajectory traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  int s = chain.state;
  traj.states.push_back(s);
  for (int l = 0; l < horizon; ++l) {
    const int a = chain.rng.categorical(policy.action_probs(s));
    traj.actions.push_back(a);
    traj.rewards.push_back(mdp.reward(s, a));
    s = chain.rng.categorical(mdp.transition_row(s, a));
    traj.states.push_back(s);
  }
  chain.state = s;
  return traj;
}

namespace {

double discounted_reward_sum(const Trajectory& traj, double gamma) {
  double sum = 0.0;
  double weight = 1.0;
  for (double r : traj.rewards) {
    sum += weight * r;
    weight *= gamma;
  }
  return sum;
}

}  // namespace

TdSample td_l_error(const Trajectory& traj, const FeatureMap& features, const Eigen::MatrixXd& basis,
                    const Eigen::VectorXd& omega, double gamma) {
  const int horizon = traj.length();
  const Eigen::VectorXd value_coeffs = basis * omega;
  const double end_weight = std::pow(gamma, horizon);
  TdSample out;
  out.delta = discounted_reward_sum(traj, gamma) +
              (end_weight * features.phi(traj.states.back()) - features.phi(traj.states.front()))
                  .dot(value_coeffs);
  out.td_feature = out.delta * features.phi(traj.states.front());
  return out;
}

double td_l_error_stepwise(const Trajectory& traj, const FeatureMap& features,
                           const Eigen::MatrixXd& basis, const Eigen::VectorXd& omega,
                           double gamma) {
  const Eigen::VectorXd value_coeffs = basis * omega;
  double sum = 0.0;
  double weight = 1.0;
  for (int l = 0; l < traj.length(); ++l) {
    const double step = traj.rewards[l] + (gamma * features.phi(traj.states[l + 1]) -
                                           features.phi(traj.states[l]))
                                              .dot(value_coeffs);
    sum += weight * step;
    weight *= gamma;
  }
  return sum;
}

Eigen::MatrixXd sample_drift(const Trajectory& traj, const FeatureMap& features, double gamma) {
  const auto phi0 = features.phi(traj.states.front());
  return phi0 * (std::pow(gamma, traj.length()) * features.phi(traj.states.back()) - phi0)
                    .transpose();
}

Eigen::VectorXd sample_target_term(const Trajectory& traj, const FeatureMap& features,
                                   const Eigen::VectorXd& z_star, double gamma) {
  double scalar = 0.0;
  double weight = 1.0;
  for (int l = 0; l < traj.length(); ++l) {
    scalar += weight * (traj.rewards[l] + (gamma * features.phi(traj.states[l + 1]) -
                                           features.phi(traj.states[l]))
                                              .dot(z_star));
    weight *= gamma;
  }
  return scalar * features.phi(traj.states.front());
}

Eigen::VectorXd markovian_noise(const Trajectory& traj, const FeatureMap& features,
                                const Eigen::VectorXd& estimate, const TdSystem& system,
                                double gamma) {
  const Eigen::VectorXd reward_term =
      discounted_reward_sum(traj, gamma) * features.phi(traj.states.front());
  return reward_term - system.b_bar + (sample_drift(traj, features, gamma) - system.A) * estimate;
}

DecompositionResidual td_feature_decomposition_check(const Trajectory& traj,
                                                     const FeatureMap& features,
                                                     const Eigen::MatrixXd& basis,
                                                     const Eigen::VectorXd& omega,
                                                     const TdSystem& system, double gamma) {
  const TdSample sample = td_l_error(traj, features, basis, omega, gamma);
  const Eigen::VectorXd estimate = basis * omega;
  const Eigen::VectorXd x = estimate - system.z_star;
  DecompositionResidual out;
  out.drift_form = (sample.td_feature - (sample_drift(traj, features, gamma) * x +
                                         sample_target_term(traj, features, system.z_star, gamma)))
                       .norm();
  out.noise_form =
      (sample.td_feature - (markovian_noise(traj, features, estimate, system, gamma) + system.A * x))
          .norm();
  return out;
}

HeadUpdate head_update(const CriticParams& params, const TdSample& sample,
                       const Eigen::MatrixXd& basis, const FeatureMap& features,
                       const Trajectory& traj) {
  const Eigen::VectorXd candidate =
      params.omega + (params.head_step / traj.length()) * sample.delta *
                         (basis.transpose() * features.phi(traj.states.front()));
  auto projected = project_to_ball(candidate, params.radius);
  return {std::move(projected.point), projected.clamped};
}

Eigen::MatrixXd local_subspace_update(const Eigen::MatrixXd& basis, const TdSample& sample,
                                      const Eigen::VectorXd& omega, double subspace_step,
                                      int horizon) {
  const Eigen::VectorXd innovation = complement_project(basis, sample.td_feature);
  return (subspace_step / horizon) * innovation * omega.transpose();
}

}  // namespace pfedac
