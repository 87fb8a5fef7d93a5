#pragma once

// Reference computations written independently of the library solvers:
// iteration instead of linear solves, explicit sums instead of matrix forms.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pfedac/env.hpp"
#include "pfedac/policy.hpp"

namespace testing_oracles {

inline Eigen::MatrixXd kernel_by_loops(const pfedac::FiniteMdp& mdp,
                                       const pfedac::SoftmaxPolicy& policy) {
  const int n = mdp.num_states();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions(); ++a)
      for (int t = 0; t < n; ++t) k(s, t) += policy.action_probs(s)(a) * mdp.transition(s, a, t);
  return k;
}

inline Eigen::VectorXd reward_by_loops(const pfedac::FiniteMdp& mdp,
                                       const pfedac::SoftmaxPolicy& policy) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s)
    for (int a = 0; a < mdp.num_actions(); ++a) r(s) += policy.action_probs(s)(a) * mdp.reward(s, a);
  return r;
}

/// Left power iteration mu <- mu K from uniform.
inline Eigen::VectorXd power_iteration(const Eigen::MatrixXd& kernel, int iterations = 20000) {
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(kernel.rows(), 1.0 / kernel.rows());
  for (int i = 0; i < iterations; ++i) mu = mu * kernel;
  return mu.transpose() / mu.sum();
}

/// Value iteration V <- r + gamma K V until the sup-norm change is below tol.
inline Eigen::VectorXd value_iteration(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& reward,
                                       double gamma, double tol = 1e-14) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(reward.size());
  for (int i = 0; i < 100000; ++i) {
    Eigen::VectorXd next = reward + gamma * kernel * v;
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = std::move(next);
    if (change < tol) break;
  }
  return v;
}

/// nu = (1 - gamma) sum_t gamma^t eta^T K^t, truncated series.
inline Eigen::VectorXd visitation_series(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& eta,
                                         double gamma) {
  Eigen::RowVectorXd term = eta.transpose();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(eta.size());
  double weight = 1.0 - gamma;
  for (int t = 0; t < 5000 && weight > 1e-18; ++t) {
    sum += weight * term;
    term = term * kernel;
    weight *= gamma;
  }
  return sum.transpose();
}

inline double binomial_sd(double p, int n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testing_oracles
