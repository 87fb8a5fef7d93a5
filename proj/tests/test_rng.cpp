#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfedac/rng.hpp"

using pfedac::Rng;
using pfedac::StreamRole;

TEST(Rng, SameStreamReproducesDraws) {
  Rng a(7, StreamRole::kCritic, 3), b(7, StreamRole::kCritic, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, StreamsDifferByRoleIndexAndRoot) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t root : {0, 1, 2})
    for (auto role : {StreamRole::kCritic, StreamRole::kActor, StreamRole::kEnvAgent})
      for (std::uint64_t k = 0; k < 16; ++k) seeds.insert(pfedac::stream_seed(root, role, k));
  EXPECT_EQ(seeds.size(), 3u * 3u * 16u);
}

TEST(Rng, SplitMixMatchesReferenceValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(pfedac::splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, UniformMeanAndRange) {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, CategoricalFrequenciesWithinStandardErrors) {
  Rng rng(5);
  Eigen::VectorXd p(4);
  p << 0.1, 0.0, 0.6, 0.3;
  const int n = 200000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < n; ++i) counts(rng.categorical(p)) += 1.0;
  EXPECT_EQ(counts(1), 0.0);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(counts(i) / n, p(i), 4.0 * testing_oracles::binomial_sd(p(i), n) + 1e-12);
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
  }
  EXPECT_NEAR(m1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, DirichletIsOnTheSimplexWithUniformMean) {
  Rng rng(3);
  const int n = 50000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = rng.dirichlet(5);
    ASSERT_NEAR(v.sum(), 1.0, 1e-12);
    ASSERT_GE(v.minCoeff(), 0.0);
    mean += v;
  }
  mean /= n;
  // Dirichlet(1,..,1) marginal is Beta(1, 4): variance 4 / (25 * 6).
  const double sd = std::sqrt(4.0 / 150.0 / n);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(mean(i), 0.2, 4.0 * sd);
}
