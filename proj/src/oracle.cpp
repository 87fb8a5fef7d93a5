#include "pfedac/oracle.hpp"

#include <cmath>

#include "pfedac/errors.hpp"
#include "pfedac/linalg.hpp"

namespace pfedac {

namespace {

// Reciprocal condition estimate below which a dense solve is declared singular.
constexpr double kSingularRcond = 1e-13;

Eigen::VectorXd solve_refined(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                              const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = lu.solve(rhs);
  x += lu.solve(rhs - a * x);
  return x;
}

}  // namespace

Eigen::MatrixXd induced_kernel(const FiniteMdp& mdp, const Eigen::MatrixXd& pi) {
  const int n = mdp.num_states();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.num_actions(); ++a) k.row(s) += pi(s, a) * mdp.transition_row(s, a);
  return k;
}

Eigen::VectorXd policy_reward(const FiniteMdp& mdp, const Eigen::MatrixXd& pi) {
  return mdp.rewards().cwiseProduct(pi).rowwise().sum();
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel) {
  const Eigen::Index n = kernel.rows();
  // (K^T - I) mu = 0 with the last balance equation replaced by sum(mu) = 1.
  Eigen::MatrixXd system = kernel.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > kSingularRcond))
    throw SingularChain("stationary balance system is rank deficient (reducible chain?)");
  Eigen::VectorXd mu = solve_refined(lu, system, rhs);
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  const double residual = (mu.transpose() * kernel - mu.transpose()).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw SingularChain("stationary distribution residual " + std::to_string(residual) +
                        " exceeds tolerance");
  return mu;
}

Eigen::VectorXd stationary_distribution(const FiniteMdp& mdp, const SoftmaxPolicy& policy) {
  return stationary_distribution(induced_kernel(mdp, policy.probabilities()));
}

Eigen::VectorXd discounted_visitation(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                      const Eigen::VectorXd& eta) {
  const int n = mdp.num_states();
  const double gamma = mdp.discount();
  const Eigen::MatrixXd kernel = induced_kernel(mdp, policy.probabilities());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * kernel.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd nu = solve_refined(lu, system, (1.0 - gamma) * eta);
  nu = nu.cwiseMax(0.0);
  return nu / nu.sum();
}

StationaryQuantities exact_value_and_gradient(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                                              const Eigen::VectorXd& eta) {
  const int n = mdp.num_states();
  const int num_actions = mdp.num_actions();
  const double gamma = mdp.discount();
  const Eigen::MatrixXd pi = policy.probabilities();
  const Eigen::MatrixXd kernel = induced_kernel(mdp, pi);

  StationaryQuantities out;
  const Eigen::MatrixXd resolvent = Eigen::MatrixXd::Identity(n, n) - gamma * kernel;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(resolvent);
  out.V = solve_refined(lu, resolvent, policy_reward(mdp, pi));

  out.Q.resize(n, num_actions);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < num_actions; ++a)
      out.Q(s, a) = mdp.reward(s, a) + gamma * mdp.transition_row(s, a).dot(out.V);
  out.J = eta.dot(out.V);

  out.mu = stationary_distribution(kernel);
  out.nu = discounted_visitation(mdp, policy, eta);

  // d/dtheta[row(s), b] of E_{a~pi}[A(s,a) log pi(a|s)] = pi(b|s) A(s,b).
  Eigen::MatrixXd per_state(n, num_actions);
  for (int s = 0; s < n; ++s)
    for (int b = 0; b < num_actions; ++b)
      per_state(s, b) = out.nu(s) * pi(s, b) * (out.Q(s, b) - out.V(s));
  out.grad_J = policy.fold_state_gradient(per_state) / (1.0 - gamma);
  return out;
}

double exact_return(const FiniteMdp& mdp, const SoftmaxPolicy& policy,
                    const Eigen::VectorXd& eta) {
  const int n = mdp.num_states();
  const Eigen::MatrixXd pi = policy.probabilities();
  const Eigen::MatrixXd resolvent =
      Eigen::MatrixXd::Identity(n, n) - mdp.discount() * induced_kernel(mdp, pi);
  return eta.dot(resolvent.partialPivLu().solve(policy_reward(mdp, pi)));
}

TdSystem td_system(const FiniteMdp& mdp, const SoftmaxPolicy& policy, const FeatureMap& features,
                   int horizon) {
  if (horizon < 1) throw InvalidValue("TD horizon L must be >= 1");
  if (features.num_states() != mdp.num_states())
    throw DimensionMismatch("feature map does not match the MDP");
  const int n = mdp.num_states();
  const double gamma = mdp.discount();
  const Eigen::MatrixXd pi = policy.probabilities();
  const Eigen::MatrixXd kernel = induced_kernel(mdp, pi);
  const Eigen::VectorXd r_pi = policy_reward(mdp, pi);
  const Eigen::MatrixXd& phi = features.matrix;

  TdSystem sys;
  sys.horizon = horizon;
  sys.mu = stationary_distribution(kernel);

  // returns(s) = E[sum_{l<L} gamma^l r_l | s_0 = s]; k_power ends as K^L.
  Eigen::VectorXd returns = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd k_power = Eigen::MatrixXd::Identity(n, n);
  double discount_power = 1.0;
  for (int l = 0; l < horizon; ++l) {
    returns += discount_power * (k_power * r_pi);
    k_power = k_power * kernel;
    discount_power *= gamma;
  }
  const Eigen::MatrixXd weighted = phi.transpose() * sys.mu.asDiagonal();
  sys.A = weighted * (discount_power * k_power * phi - phi);
  sys.b_bar = weighted * returns;
  sys.lambda_margin = -symmetric_part_max_eigenvalue(sys.A) / horizon;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.A);
  if (lu.rcond() > kSingularRcond) {
    sys.z_star = solve_refined(lu, sys.A, -sys.b_bar);
  } else {
    sys.singular = true;
    sys.z_star = sys.A.completeOrthogonalDecomposition().solve(-sys.b_bar);
  }
  return sys;
}

Eigen::MatrixXd stack_fixed_points(const std::vector<TdSystem>& systems) {
  if (systems.empty()) return {};
  Eigen::MatrixXd z(systems.front().z_star.size(), static_cast<Eigen::Index>(systems.size()));
  for (std::size_t k = 0; k < systems.size(); ++k)
    z.col(static_cast<Eigen::Index>(k)) = systems[k].z_star;
  return z;
}

AssumptionReport check_assumptions(const Federation& fed,
                                   const std::vector<SoftmaxPolicy>& policies,
                                   const FeatureMap& features, int horizon, int rank) {
  if (static_cast<int>(policies.size()) != fed.num_agents())
    throw InvalidValue("check_assumptions needs one policy per agent");
  AssumptionReport report;
  report.target_rank = rank;
  report.feature_norm_max = features.max_row_norm();
  report.bounded_features = report.feature_norm_max <= 1.0 + 1e-12;

  std::vector<TdSystem> systems;
  systems.reserve(policies.size());
  for (int k = 0; k < fed.num_agents(); ++k) {
    systems.push_back(td_system(fed.agents[k], policies[k], features, horizon));
    const TdSystem& sys = systems.back();
    report.agents.push_back({sys.lambda_margin, sys.lambda_margin > 0.0, sys.singular,
                             sys.residual(), sys.z_star.norm()});
  }
  const Eigen::MatrixXd z = stack_fixed_points(systems);
  const Eigen::MatrixXd gram = z * z.transpose();
  const auto spectrum = positive_spectrum(gram, kGramZeroCutoff);
  report.gram_rank = static_cast<int>(spectrum.rank);
  report.degenerate = spectrum.rank == 0;
  report.nu_hat = report.degenerate ? 0.0 : spectrum.min_positive / fed.num_agents();
  report.rank_matches = report.gram_rank == rank;
  return report;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json agents_json = nlohmann::json::array();
  for (const auto& a : agents)
    agents_json.push_back({{"lambda_margin", a.lambda_margin},
                           {"exploration_ok", a.exploration_ok},
                           {"singular", a.singular},
                           {"fixed_point_residual", a.fixed_point_residual},
                           {"fixed_point_norm", a.fixed_point_norm}});
  bool all_explore = true;
  for (const auto& a : agents) all_explore = all_explore && a.exploration_ok;
  return {{"agents", agents_json},
          {"feature_norm_max", feature_norm_max},
          {"nu_hat", nu_hat},
          {"gram_rank", gram_rank},
          {"target_rank", target_rank},
          {"flags",
           {{"exploration_ok", all_explore},
            {"bounded_features", bounded_features},
            {"degenerate", degenerate},
            {"rank_matches", rank_matches},
            {"certified_pointwise", true}}}};
}

}  // namespace pfedac
