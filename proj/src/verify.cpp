#include "pfedac/verify.hpp"

#include <algorithm>
#include <cmath>

#include "pfedac/oracle.hpp"
#include "pfedac/rng.hpp"
#include "pfedac/server.hpp"

namespace pfedac {

long VerifyReport::total_checks() const {
  long n = 0;
  for (const auto& c : checks) n += c.checks;
  return n;
}

bool VerifyReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed(); });
}

namespace {

VerifyCheck gradient_check(std::uint64_t seed) {
  const Federation fed = make_random_federation(5, 3, 2, 0.8, 1.0, seed);
  Rng rng(stream_seed(seed, StreamRole::kFixture, 0));
  VerifyCheck check{"gradient_finite_difference"};
  for (const FiniteMdp& mdp : fed.agents) {
    SoftmaxPolicy policy = SoftmaxPolicy::uniform_untied(fed.num_states(), fed.num_actions());
    policy.logits() = rng.gaussian_matrix(policy.num_rows(), policy.num_actions());
    const Eigen::MatrixXd grad = exact_value_and_gradient(mdp, policy, fed.initial_dist).grad_J;
    constexpr double h = 1e-5;
    for (int i = 0; i < policy.num_rows(); ++i) {
      for (int a = 0; a < policy.num_actions(); ++a) {
        SoftmaxPolicy plus = policy, minus = policy;
        plus.logits()(i, a) += h;
        minus.logits()(i, a) -= h;
        const double fd = (exact_return(mdp, plus, fed.initial_dist) -
                           exact_return(mdp, minus, fed.initial_dist)) /
                          (2.0 * h);
        const double excess = std::abs(fd - grad(i, a)) - 1e-6 * (1.0 + std::abs(fd));
        check.worst_excess = check.checks == 0 ? excess : std::max(check.worst_excess, excess);
        ++check.checks;
        if (excess > 0.0) ++check.violations;
      }
    }
  }
  return check;
}

}  // namespace

VerifyReport run_verification(std::uint64_t seed, int rounds, int workers) {
  const double gamma = 0.9;
  const int horizon = 4;
  const Federation fed = make_lumpable_federation(2, 3, 2, 4, gamma, 1.0, seed);

  Hyperparams hp;
  hp.horizon = horizon;
  hp.rank = 2;
  hp.radius = default_radius(fed, horizon);
  hp.subspace_step = max_subspace_step(federation_reward_bound(fed), hp.radius, horizon, gamma);
  hp.head_step = 50.0 * hp.subspace_step;
  hp.actor_step = 50.0 * hp.subspace_step;
  hp.workers = workers;
  hp.debug_invariants = true;

  Simulation sim(fed, hp, seed);
  sim.run(rounds, 1);

  VerifyReport report;
  for (const auto& [name, e] : sim.invariants().entries())
    report.checks.push_back({name, e.checks, e.violations, e.skipped, e.worst_excess});
  report.checks.push_back(gradient_check(seed));
  return report;
}

}  // namespace pfedac
