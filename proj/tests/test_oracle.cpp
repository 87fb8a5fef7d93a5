#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfedac/errors.hpp"
#include "pfedac/oracle.hpp"
#include "pfedac/rng.hpp"

using namespace pfedac;
namespace to = testing_oracles;

namespace {

SoftmaxPolicy random_policy(int states, int actions, std::uint64_t seed) {
  Rng rng(seed);
  SoftmaxPolicy p = SoftmaxPolicy::uniform_untied(states, actions);
  p.logits() = rng.gaussian_matrix(states, actions);
  return p;
}

}  // namespace

TEST(Oracle, InducedKernelAndRewardMatchLoops) {
  const Federation fed = make_random_federation(5, 3, 1, 0.9, 1.0, 2);
  const SoftmaxPolicy p = random_policy(5, 3, 1);
  EXPECT_LE((induced_kernel(fed.agents[0], p.probabilities()) -
             to::kernel_by_loops(fed.agents[0], p))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  EXPECT_LE((policy_reward(fed.agents[0], p.probabilities()) -
             to::reward_by_loops(fed.agents[0], p))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(Oracle, StationaryDistributionMatchesPowerIteration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Federation fed = make_random_federation(6, 2, 1, 0.9, 1.0, seed);
    const SoftmaxPolicy p = random_policy(6, 2, seed + 100);
    const Eigen::VectorXd mu = stationary_distribution(fed.agents[0], p);
    const Eigen::VectorXd ref = to::power_iteration(to::kernel_by_loops(fed.agents[0], p));
    EXPECT_LE((mu - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(mu.sum(), 1.0, 1e-14);
  }
}

TEST(Oracle, StationaryDistributionOfReducibleChainThrows) {
  // Two absorbing states: stationary law is not unique.
  const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(stationary_distribution(k), SingularChain);
}

TEST(Oracle, DiscountedVisitationMatchesSeriesAndCompanionChain) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Federation fed = make_random_federation(5, 2, 1, 0.9, 1.0, seed);
    const FiniteMdp& mdp = fed.agents[0];
    const SoftmaxPolicy p = random_policy(5, 2, seed);
    Rng rng(seed);
    const Eigen::VectorXd eta = rng.dirichlet(5);
    const Eigen::VectorXd nu = discounted_visitation(mdp, p, eta);
    EXPECT_LE((nu - to::visitation_series(to::kernel_by_loops(mdp, p), eta, 0.9))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    const Eigen::VectorXd companion = stationary_distribution(companion_kernel(mdp, eta), p);
    EXPECT_LE((nu - companion).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Oracle, ValuesMatchValueIterationAndBellman) {
  const Federation fed = make_random_federation(6, 3, 3, 0.9, 1.0, 4);
  const SoftmaxPolicy p = random_policy(6, 3, 8);
  for (const auto& mdp : fed.agents) {
    const auto q = exact_value_and_gradient(mdp, p, fed.initial_dist);
    const Eigen::VectorXd v_ref =
        to::value_iteration(to::kernel_by_loops(mdp, p), to::reward_by_loops(mdp, p), 0.9);
    EXPECT_LE((q.V - v_ref).cwiseAbs().maxCoeff(), 1e-11);
    for (int s = 0; s < 6; ++s) {
      EXPECT_NEAR(q.V(s), p.action_probs(s).dot(q.Q.row(s).transpose()), 1e-11);
      for (int a = 0; a < 3; ++a) {
        double next = 0.0;
        for (int t = 0; t < 6; ++t) next += mdp.transition(s, a, t) * v_ref(t);
        EXPECT_NEAR(q.Q(s, a), mdp.reward(s, a) + 0.9 * next, 1e-11);
      }
    }
    EXPECT_NEAR(q.J, fed.initial_dist.dot(v_ref), 1e-11);
  }
}

TEST(Oracle, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Federation fed = make_random_federation(4, 3, 1, 0.85, 1.0, seed);
    const FiniteMdp& mdp = fed.agents[0];
    const SoftmaxPolicy p = random_policy(4, 3, seed + 50);
    const Eigen::MatrixXd grad = exact_value_and_gradient(mdp, p, fed.initial_dist).grad_J;
    const double h = 1e-5;
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 3; ++a) {
        SoftmaxPolicy plus = p, minus = p;
        plus.logits()(s, a) += h;
        minus.logits()(s, a) -= h;
        const double fd = (exact_return(mdp, plus, fed.initial_dist) -
                           exact_return(mdp, minus, fed.initial_dist)) /
                          (2 * h);
        EXPECT_NEAR(grad(s, a), fd, 1e-6);
      }
  }
}

TEST(Oracle, TiedGradientMatchesFiniteDifferences) {
  const Federation fed = make_lumpable_federation(2, 3, 2, 1, 0.9, 1.0, 6);
  SoftmaxPolicy p = SoftmaxPolicy::uniform(2, fed.policy_rows);
  p.logits() << 0.3, -0.5, 1.1, 0.2;
  const Eigen::MatrixXd grad = exact_value_and_gradient(fed.agents[0], p, fed.initial_dist).grad_J;
  ASSERT_EQ(grad.rows(), 2);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) {
      SoftmaxPolicy plus = p, minus = p;
      plus.logits()(i, a) += h;
      minus.logits()(i, a) -= h;
      const double fd = (exact_return(fed.agents[0], plus, fed.initial_dist) -
                         exact_return(fed.agents[0], minus, fed.initial_dist)) /
                        (2 * h);
      EXPECT_NEAR(grad(i, a), fd, 1e-6);
    }
}

TEST(Oracle, TdSystemMatchesExplicitSums) {
  const Federation fed = make_random_federation(5, 2, 1, 0.9, 1.0, 3, 3);
  const FiniteMdp& mdp = fed.agents[0];
  const SoftmaxPolicy p = random_policy(5, 2, 9);
  const int horizon = 3;
  const TdSystem sys = td_system(mdp, p, fed.features, horizon);

  const Eigen::MatrixXd k = to::kernel_by_loops(mdp, p);
  const Eigen::VectorXd r = to::reward_by_loops(mdp, p);
  const Eigen::VectorXd mu = to::power_iteration(k);
  const Eigen::MatrixXd& phi = fed.features.matrix;
  Eigen::MatrixXd k_power = Eigen::MatrixXd::Identity(5, 5);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  double discount = 1.0;
  for (int l = 0; l < horizon; ++l) {
    for (int s = 0; s < 5; ++s)
      b += discount * mu(s) * (k_power.row(s) * r)(0) * phi.row(s).transpose();
    k_power = k_power * k;
    discount *= 0.9;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  for (int s = 0; s < 5; ++s) {
    Eigen::RowVectorXd end = Eigen::RowVectorXd::Zero(3);
    for (int t = 0; t < 5; ++t) end += k_power(s, t) * phi.row(t);
    a += mu(s) * phi.row(s).transpose() * (discount * end - phi.row(s));
  }
  EXPECT_LE((sys.A - a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((sys.b_bar - b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(sys.residual(), 1e-10);
}

TEST(Oracle, IdentityFeatureFixedPointIsValueFunction) {
  for (int horizon : {1, 2, 5}) {
    const Federation fed = make_random_federation(6, 2, 2, 0.9, 1.0, horizon);
    const FeatureMap identity = FeatureMap::identity(6);
    const SoftmaxPolicy p = random_policy(6, 2, 77);
    for (const auto& mdp : fed.agents) {
      const TdSystem sys = td_system(mdp, p, identity, horizon);
      const Eigen::VectorXd v = exact_value_and_gradient(mdp, p, fed.initial_dist).V;
      EXPECT_LE((sys.z_star - v).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_GT(sys.lambda_margin, 0.0);
    }
  }
}

TEST(Oracle, AssumptionReportOnLumpableFederation) {
  const Federation fed = make_lumpable_federation(2, 4, 2, 8, 0.9, 1.0, 5);
  std::vector<SoftmaxPolicy> policies;
  for (int k = 0; k < 8; ++k) {
    Rng rng(k);
    SoftmaxPolicy p = SoftmaxPolicy::uniform(2, fed.policy_rows);
    p.logits() = rng.gaussian_matrix(2, 2);
    policies.push_back(p);
  }
  const AssumptionReport report = check_assumptions(fed, policies, fed.features, 4, 2);
  EXPECT_GT(report.nu_hat, 0.0);
  EXPECT_EQ(report.gram_rank, 2);
  EXPECT_TRUE(report.rank_matches);
  EXPECT_FALSE(report.degenerate);
  EXPECT_TRUE(report.bounded_features);
  for (const auto& agent : report.agents) {
    EXPECT_GT(agent.lambda_margin, 0.0);
    EXPECT_LE(agent.fixed_point_residual, 1e-10);
  }

  // nu_hat equals the smallest eigenvalue of the 2x2 restriction to B*.
  Eigen::MatrixXd z(8, 8);
  for (int k = 0; k < 8; ++k) z.col(k) = td_system(fed.agents[k], policies[k], fed.features, 4).z_star;
  const Eigen::MatrixXd w = fed.b_star->transpose() * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  EXPECT_NEAR(report.nu_hat, es.eigenvalues().minCoeff() / 8.0, 1e-9);
  EXPECT_NO_THROW(report.to_json().dump());
}

TEST(Oracle, AssumptionReportFlagsDegenerateFederation) {
  // All-zero rewards make every fixed point zero.
  Federation fed = make_lumpable_federation(2, 2, 2, 3, 0.9, 1.0, 1);
  for (auto& mdp : fed.agents)
    mdp = FiniteMdp(mdp.transitions(), Eigen::MatrixXd::Zero(4, 2), 0.9, 1.0);
  const std::vector<SoftmaxPolicy> policies(3, SoftmaxPolicy::uniform(2, fed.policy_rows));
  const AssumptionReport report = check_assumptions(fed, policies, fed.features, 2, 2);
  EXPECT_TRUE(report.degenerate);
  EXPECT_FALSE(report.rank_matches);
}
