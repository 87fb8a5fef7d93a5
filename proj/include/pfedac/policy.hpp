#pragma once

#include <vector>

#include <Eigen/Dense>

namespace pfedac {

/// Tabular softmax policy pi(a|s) = softmax(logits.row(row_of(s)))_a.
/// With one row per state this is the plain tabular class; several states can
/// share a row (parameter tying). ||grad log pi(a|s)|| <= sqrt(2) either way.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  SoftmaxPolicy(Eigen::MatrixXd logits, std::vector<int> state_rows);

  /// theta = 0: uniform over actions in every state.
  static SoftmaxPolicy uniform(int num_actions, std::vector<int> state_rows);
  /// One logit row per state.
  static SoftmaxPolicy uniform_untied(int num_states, int num_actions);

  int num_states() const { return static_cast<int>(state_rows_.size()); }
  int num_actions() const { return static_cast<int>(logits_.cols()); }
  int num_rows() const { return static_cast<int>(logits_.rows()); }
  int row_of(int s) const { return state_rows_[s]; }
  const std::vector<int>& state_rows() const { return state_rows_; }

  const Eigen::MatrixXd& logits() const { return logits_; }
  Eigen::MatrixXd& logits() { return logits_; }

  Eigen::VectorXd action_probs(int s) const;
  /// |S| x |A| table of pi(a|s).
  Eigen::MatrixXd probabilities() const;
  double log_prob(int s, int a) const;

  /// grad_theta log pi(a|s): zero except row row_of(s), which is e_a - pi(.|s).
  Eigen::MatrixXd grad_log_prob(int s, int a) const;
  /// The nonzero row of grad_log_prob, e_a - pi(.|s).
  Eigen::VectorXd grad_log_prob_row(int s, int a) const;

  /// Folds a per-state |S| x |A| gradient into the logit-table shape.
  Eigen::MatrixXd fold_state_gradient(const Eigen::MatrixXd& per_state) const;

 private:
  Eigen::MatrixXd logits_;
  std::vector<int> state_rows_;
};

}  // namespace pfedac
