#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace pfedac {

/// A finite discounted MDP. Transitions are stored as an (|S|*|A|) x |S|
/// matrix whose row `s * |A| + a` is P(. | s, a).
class FiniteMdp {
 public:
  FiniteMdp() = default;
  FiniteMdp(Eigen::MatrixXd transitions, Eigen::MatrixXd rewards, double discount,
            double reward_bound);

  int num_states() const { return static_cast<int>(rewards_.rows()); }
  int num_actions() const { return static_cast<int>(rewards_.cols()); }
  double discount() const { return discount_; }
  double reward_bound() const { return reward_bound_; }

  const Eigen::MatrixXd& transitions() const { return transitions_; }
  const Eigen::MatrixXd& rewards() const { return rewards_; }

  auto transition_row(int s, int a) const { return transitions_.row(s * num_actions() + a); }
  double transition(int s, int a, int next) const {
    return transitions_(s * num_actions() + a, next);
  }
  double reward(int s, int a) const { return rewards_(s, a); }

  /// Throws InvalidValue if any invariant (stochastic rows, reward bound,
  /// discount in (0,1)) fails.
  void validate() const;

  friend bool operator==(const FiniteMdp& a, const FiniteMdp& b);

 private:
  Eigen::MatrixXd transitions_;
  Eigen::MatrixXd rewards_;
  double discount_ = 0.5;
  double reward_bound_ = 1.0;
};

/// phi(s)^T is row s of `matrix`.
struct FeatureMap {
  Eigen::MatrixXd matrix;

  int dim() const { return static_cast<int>(matrix.cols()); }
  int num_states() const { return static_cast<int>(matrix.rows()); }
  auto phi(int s) const { return matrix.row(s).transpose(); }
  double max_row_norm() const { return matrix.rowwise().norm().maxCoeff(); }

  static FeatureMap identity(int num_states);

  friend bool operator==(const FeatureMap& a, const FeatureMap& b);
};

/// Provenance of a generated federation, echoed into its JSON form.
struct GeneratorInfo {
  std::string name;  // "random", "lumpable" or "custom"
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();

  friend bool operator==(const GeneratorInfo&, const GeneratorInfo&) = default;
};

struct Federation {
  std::vector<FiniteMdp> agents;
  FeatureMap features;
  Eigen::VectorXd initial_dist;
  std::optional<Eigen::MatrixXd> b_star;
  /// Maps each state to a row of the softmax logit table. The identity map
  /// gives a plain tabular policy; the lumpable generator ties logits within
  /// a group so every reachable policy is group-symmetric.
  std::vector<int> policy_rows;
  GeneratorInfo generator;

  int num_agents() const { return static_cast<int>(agents.size()); }
  int num_states() const { return agents.front().num_states(); }
  int num_actions() const { return agents.front().num_actions(); }
  double discount() const { return agents.front().discount(); }
  int num_policy_rows() const;

  void validate() const;

  /// Exact (bitwise on values) equality, used for round-trip checks.
  friend bool operator==(const Federation& a, const Federation& b);
};

/// K ergodic MDPs with Dirichlet rows mixed with a 0.05 uniform floor and
/// uniform rewards in [-U_r, U_r]. Features are a Gaussian |S| x d matrix
/// rescaled so the largest row norm is exactly 1. Agent k is generated from
/// its own stream, so the first K agents do not depend on the total count.
Federation make_random_federation(int num_states, int num_actions, int num_agents, double gamma,
                                  double reward_bound, std::uint64_t seed, int feature_dim = -1);

/// States partitioned into `num_groups` blocks of `states_per_group`. Each
/// agent's probability of jumping into a group and its rewards depend on the
/// current state only through its group, so every group-symmetric policy has
/// a group-constant value function. Identity features; B* is the normalized
/// group-indicator basis.
Federation make_lumpable_federation(int num_groups, int states_per_group, int num_actions,
                                    int num_agents, double gamma, double reward_bound,
                                    std::uint64_t seed);

/// P_hat = gamma * P + (1 - gamma) * eta. Rewards and discount unchanged.
FiniteMdp companion_kernel(const FiniteMdp& mdp, const Eigen::VectorXd& eta);

/// Mixing formula with an explicit weight, exposed for the degenerate-weight
/// checks: weight * P + (1 - weight) * eta.
Eigen::MatrixXd mix_with_reset(const Eigen::MatrixXd& transitions, const Eigen::VectorXd& eta,
                               double weight);

inline constexpr int kFederationFormatVersion = 1;

nlohmann::json federation_to_json(const Federation& fed);
Federation federation_from_json(const nlohmann::json& doc);

void save_federation(const Federation& fed, const std::string& path);
Federation load_federation(const std::string& path);

/// Git-style blob hash (SHA-1 of "blob <len>\0<canonical json>"), hex encoded.
std::string federation_content_hash(const Federation& fed);

}  // namespace pfedac
