#pragma once

// Exact, sampling-free solvers for the stationary quantities a run is measured
// against. All functions are pure and safe to call concurrently.

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pfedac/env.hpp"
#include "pfedac/policy.hpp"

namespace pfedac {

/// K(s, s') = sum_a pi(a|s) P(s'|s,a).
Eigen::MatrixXd induced_kernel(const FiniteMdp& mdp, const Eigen::MatrixXd& pi);
/// r_pi(s) = sum_a pi(a|s) R(s,a).
Eigen::VectorXd policy_reward(const FiniteMdp& mdp, const Eigen::MatrixXd& pi);

/// Unique mu with mu K = mu, sum mu = 1. Throws SingularChain when the balance
/// system is numerically rank deficient.
Eigen::VectorXd stationary_distribution(const FiniteMdp& mdp, const SoftmaxPolicy& policy);
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel);

/// nu = (1 - gamma) eta^T (I - gamma K)^{-1}.
Eigen::VectorXd discounted_visitation(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                      const Eigen::VectorXd& eta);

struct StationaryQuantities {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  double J = 0.0;
  Eigen::MatrixXd grad_J;  // logit-table shape (policy rows x |A|)
  Eigen::VectorXd V;
  Eigen::MatrixXd Q;       // |S| x |A|
};

/// Exact V, Q, J = eta^T V and the policy gradient in advantage form,
/// grad J = 1/(1-gamma) E_{nu x pi}[(Q - V) grad log pi].
StationaryQuantities exact_value_and_gradient(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                              const Eigen::VectorXd& eta);

/// J alone, for finite-difference checks.
double exact_return(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                    const Eigen::VectorXd& eta);

struct TdSystem {
  Eigen::MatrixXd A;       // A_L = Phi^T D_mu (gamma^L K^L - I) Phi
  Eigen::VectorXd b_bar;   // sum_{l<L} gamma^l Phi^T D_mu K^l r_pi
  Eigen::VectorXd z_star;  // A_L z + b_bar = 0
  Eigen::VectorXd mu;
  double lambda_margin = 0.0;  // -lambda_max(sym(A_L)) / L; > 0 certifies exploration
  bool singular = false;       // A_L rank deficient; z_star is then least squares
  int horizon = 1;

  double residual() const { return (A * z_star + b_bar).norm(); }
};

TdSystem td_system(const FiniteMdp& mdp, const SoftmaxPolicy& policy, const FeatureMap& features,
                   int horizon);

struct AgentDiagnostics {
  double lambda_margin = 0.0;
  bool exploration_ok = false;
  bool singular = false;
  double fixed_point_residual = 0.0;
  double fixed_point_norm = 0.0;
};

/// Pointwise certificate: exploration margins are evaluated at the supplied
/// policies only, never uniformly over all policies.
struct AssumptionReport {
  std::vector<AgentDiagnostics> agents;
  double feature_norm_max = 0.0;
  bool bounded_features = false;
  double nu_hat = 0.0;  // lambda+_min(Z* Z*^T) / K
  int gram_rank = 0;
  int target_rank = 0;
  bool degenerate = false;   // Z* Z*^T has no positive eigenvalue
  bool rank_matches = false; // numerical rank equals target_rank

  nlohmann::json to_json() const;
};

/// Fixed points of all agents stacked as columns of a d x K matrix.
Eigen::MatrixXd stack_fixed_points(const std::vector<TdSystem>& systems);

/// Relative cutoff below which an eigenvalue of Z* Z*^T counts as zero.
inline constexpr double kGramZeroCutoff = 1e-9;

AssumptionReport check_assumptions(const Federation& fed, const std::vector<SoftmaxPolicy>& policies,
                                   const FeatureMap& features, int horizon, int rank);

}  // namespace pfedac
