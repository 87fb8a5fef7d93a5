#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pfedac/env.hpp"
#include "pfedac/oracle.hpp"
#include "pfedac/policy.hpp"
#include "pfedac/rng.hpp"

namespace pfedac {

/// Live state of one agent's critic Markov chain. `state` carries over from
/// the last state of one block to the first state of the next.
struct CriticChain {
  int state = 0;
  Rng rng;

  /// Draws s_0 ~ eta from the agent's own stream.
  static CriticChain start(const Eigen::VectorXd& eta, Rng rng);
};

/// One block s_0, a_0, r_0, ..., s_L.
struct Trajectory {
  std::vector<int> states;   // L + 1
  std::vector<int> actions;  // L
  std::vector<double> rewards;

  int length() const { return static_cast<int>(actions.size()); }
};

struct CriticParams {
  Eigen::VectorXd omega;
  double radius = 1.0;        // U_omega
  double head_step = 0.0;     // beta
  double subspace_step = 0.0; // zeta
};

struct TdSample {
  double delta = 0.0;
  Eigen::VectorXd td_feature;  // delta * phi(s_0)
};

/// L transitions under pi x P from chain.state; advances the chain.
Trajectory sample_critic_block(CriticChain& chain, const FiniteMdp& mdp,
                               const SoftmaxPolicy& policy, int horizon);

/// delta_L = sum_l gamma^l r_l + (gamma^L phi(s_L) - phi(s_0))^T B omega.
TdSample td_l_error(const Trajectory& traj, const FeatureMap& features, const Eigen::MatrixXd& basis,
                    const Eigen::VectorXd& omega, double gamma);

/// Same quantity summed step by step:
/// sum_l gamma^l (r_l + (gamma phi(s_{l+1}) - phi(s_l))^T B omega).
double td_l_error_stepwise(const Trajectory& traj, const FeatureMap& features,
                           const Eigen::MatrixXd& basis, const Eigen::VectorXd& omega, double gamma);

/// A~ = phi(s_0) (gamma^L phi(s_L) - phi(s_0))^T.
Eigen::MatrixXd sample_drift(const Trajectory& traj, const FeatureMap& features, double gamma);

/// b_{t,L} = sum_l gamma^l (r_l + (gamma phi(s_{l+1}) - phi(s_l))^T z*) phi(s_0).
Eigen::VectorXd sample_target_term(const Trajectory& traj, const FeatureMap& features,
                                   const Eigen::VectorXd& z_star, double gamma);

/// xi = b~ - b_bar + (A~ - A_L) B omega, with b~ = sum_l gamma^l r_l phi(s_0).
Eigen::VectorXd markovian_noise(const Trajectory& traj, const FeatureMap& features,
                                const Eigen::VectorXd& estimate, const TdSystem& system,
                                double gamma);

struct DecompositionResidual {
  double drift_form = 0.0;  // ||delta phi - (A~ x + b)||
  double noise_form = 0.0;  // ||delta phi - (xi + A_L x)||
};

/// Residuals of the two exact rewrites of the TD feature, with x = B omega - z*.
DecompositionResidual td_feature_decomposition_check(const Trajectory& traj,
                                                     const FeatureMap& features,
                                                     const Eigen::MatrixXd& basis,
                                                     const Eigen::VectorXd& omega,
                                                     const TdSystem& system, double gamma);

struct HeadUpdate {
  Eigen::VectorXd omega;
  bool clamped = false;
};

/// omega' = Proj_{U_omega}(omega + (beta / L) delta B^T phi(s_0)).
HeadUpdate head_update(const CriticParams& params, const TdSample& sample,
                       const Eigen::MatrixXd& basis, const FeatureMap& features,
                       const Trajectory& traj);

/// (zeta / L) (I - B B^T) delta phi(s_0) omega^T. B^T times the result is 0.
Eigen::MatrixXd local_subspace_update(const Eigen::MatrixXd& basis, const TdSample& sample,
                                      const Eigen::VectorXd& omega, double subspace_step,
                                      int horizon);

/// U_delta = U_r + 2 U_omega.
inline double td_error_scale(double reward_bound, double radius) {
  return reward_bound + 2.0 * radius;
}

}  // namespace pfedac
