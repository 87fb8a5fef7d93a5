#include <gtest/gtest.h>

#include "pfedac/actor.hpp"
#include "pfedac/oracle.hpp"

using namespace pfedac;

namespace {

struct Fixture {
  Federation fed;
  SoftmaxPolicy policy;
};

Fixture make_fixture(std::uint64_t seed) {
  Fixture f{make_random_federation(4, 2, 1, 0.8, 1.0, seed), SoftmaxPolicy::uniform_untied(4, 2)};
  Rng rng(seed, StreamRole::kFixture);
  f.policy.logits() = rng.gaussian_matrix(4, 2);
  return f;
}

struct MeanEstimate {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};

/// Monte Carlo mean of the one-step gradient estimate with exact values
/// plugged in and the chain started from the discounted visitation law.
MeanEstimate gradient_mean(const Fixture& f, ActorSuccessor successor, int samples) {
  const FiniteMdp& mdp = f.fed.agents[0];
  const FeatureMap identity = FeatureMap::identity(4);
  const auto q = exact_value_and_gradient(mdp, f.policy, f.fed.initial_dist);
  ActorChain chain{0, Rng(1234)};
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 2), sum_sq = Eigen::MatrixXd::Zero(4, 2);
  for (int i = 0; i < samples; ++i) {
    chain.state = chain.rng.categorical(q.nu);
    const ActorTrajectory traj = sample_actor_block(chain, mdp, f.fed.initial_dist, f.policy, 1);
    const auto deltas = actor_td_errors(traj, identity, q.V, mdp.discount(), successor);
    const Eigen::MatrixXd g = policy_gradient_estimate(deltas, traj, f.policy);
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  MeanEstimate out;
  out.mean = sum / samples;
  out.se = ((sum_sq / samples - out.mean.cwiseProduct(out.mean)) / samples).cwiseSqrt();
  return out;
}

}  // namespace

TEST(ActorChain, ResetFrequencyIsOneMinusGamma) {
  const Fixture f = make_fixture(1);
  ActorChain chain = ActorChain::start(f.fed.initial_dist, Rng(3));
  const int blocks = 20000, horizon = 5;
  long resets = 0;
  for (int i = 0; i < blocks; ++i) {
    const auto traj = sample_actor_block(chain, f.fed.agents[0], f.fed.initial_dist, f.policy, horizon);
    resets += traj.reset_count();
    for (int l = 0; l < horizon; ++l)
      if (!traj.resets[l]) ASSERT_EQ(traj.states[l + 1], traj.successors[l]);
  }
  const int n = blocks * horizon;
  EXPECT_NEAR(static_cast<double>(resets) / n, 0.2, 4.0 * std::sqrt(0.16 / n));
}

TEST(ActorChain, LongRunOccupancyIsDiscountedVisitation) {
  const Fixture f = make_fixture(2);
  const Eigen::VectorXd nu = discounted_visitation(f.fed.agents[0], f.policy, f.fed.initial_dist);
  ActorChain chain = ActorChain::start(f.fed.initial_dist, Rng(8));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  const int blocks = 50000;
  for (int i = 0; i < blocks; ++i) {
    const auto traj = sample_actor_block(chain, f.fed.agents[0], f.fed.initial_dist, f.policy, 4);
    for (int l = 0; l < 4; ++l) counts(traj.states[l]) += 1.0;
  }
  counts /= counts.sum();
  // Correlated samples: allow a loose band around the binomial scale.
  for (int s = 0; s < 4; ++s) EXPECT_NEAR(counts(s), nu(s), 0.01);
}

TEST(ActorTdErrors, HandComputedValues) {
  ActorTrajectory traj{{0, 1}, {0}, {0.5}, {2}, {true}};
  const FeatureMap identity = FeatureMap::identity(3);
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  EXPECT_NEAR(actor_td_errors(traj, identity, v, 0.9, ActorSuccessor::kTransition)[0],
              0.5 + 0.9 * 3.0 - 1.0, 1e-15);
  EXPECT_NEAR(actor_td_errors(traj, identity, v, 0.9, ActorSuccessor::kChain)[0],
              0.5 + 0.9 * 2.0 - 1.0, 1e-15);
}

TEST(PolicyGradient, TransitionSuccessorIsUnbiasedForScaledGradient) {
  const Fixture f = make_fixture(4);
  const auto q = exact_value_and_gradient(f.fed.agents[0], f.policy, f.fed.initial_dist);
  const Eigen::MatrixXd target = (1.0 - f.fed.discount()) * q.grad_J;
  const MeanEstimate est = gradient_mean(f, ActorSuccessor::kTransition, 400000);
  for (int i = 0; i < 4; ++i)
    for (int a = 0; a < 2; ++a)
      EXPECT_LE(std::abs(est.mean(i, a) - target(i, a)), 4.0 * est.se(i, a) + 1e-12);
}

TEST(PolicyGradient, ChainSuccessorHasPredictedBias) {
  // With the post-reset state, E[delta | s, a] = Q - V + gamma (1 - gamma)(eta^T V - (P V)(s, a)),
  // so the mean estimate shifts by -gamma (1 - gamma) E_{nu x pi}[(P V)(s, a) grad log pi].
  const Fixture f = make_fixture(4);
  const FiniteMdp& mdp = f.fed.agents[0];
  const double gamma = mdp.discount();
  const auto q = exact_value_and_gradient(mdp, f.policy, f.fed.initial_dist);
  Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(4, 2);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      const double pv = mdp.transition_row(s, a).dot(q.V.transpose());
      bias += -gamma * (1 - gamma) * q.nu(s) * f.policy.action_probs(s)(a) * pv *
              f.policy.grad_log_prob(s, a);
    }
  const Eigen::MatrixXd predicted = (1.0 - gamma) * q.grad_J + bias;
  const MeanEstimate est = gradient_mean(f, ActorSuccessor::kChain, 400000);
  double max_shift_in_se = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int a = 0; a < 2; ++a) {
      EXPECT_LE(std::abs(est.mean(i, a) - predicted(i, a)), 4.0 * est.se(i, a) + 1e-12);
      max_shift_in_se = std::max(max_shift_in_se, std::abs(bias(i, a)) / est.se(i, a));
    }
  // The instance is chosen so the bias is resolvable at this sample size.
  EXPECT_GT(max_shift_in_se, 8.0);
}

TEST(ActorStep, MovesLogitsAlongGradient) {
  const Fixture f = make_fixture(0);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(4, 2);
  const SoftmaxPolicy next = actor_step(f.policy, g, 0.25);
  EXPECT_LE((next.logits() - f.policy.logits() - 0.25 * g).norm(), 1e-15);
  EXPECT_EQ(next.state_rows(), f.policy.state_rows());
}
