#include "pfedac/policy.hpp"

#include <algorithm>
#include <cmath>

#include "pfedac/errors.hpp"

namespace pfedac {

SoftmaxPolicy::SoftmaxPolicy(Eigen::MatrixXd logits, std::vector<int> state_rows)
    : logits_(std::move(logits)), state_rows_(std::move(state_rows)) {
  if (logits_.cols() < 1) throw InvalidValue("policy needs at least one action");
  for (int row : state_rows_)
    if (row < 0 || row >= logits_.rows()) throw InvalidValue("policy row index out of range");
}

SoftmaxPolicy SoftmaxPolicy::uniform(int num_actions, std::vector<int> state_rows) {
  const int rows =
      state_rows.empty() ? 0 : *std::max_element(state_rows.begin(), state_rows.end()) + 1;
  return SoftmaxPolicy(Eigen::MatrixXd::Zero(rows, num_actions), std::move(state_rows));
}

SoftmaxPolicy SoftmaxPolicy::uniform_untied(int num_states, int num_actions) {
  std::vector<int> rows(num_states);
  for (int s = 0; s < num_states; ++s) rows[s] = s;
  return uniform(num_actions, std::move(rows));
}

Eigen::VectorXd SoftmaxPolicy::action_probs(int s) const {
  const auto row = logits_.row(state_rows_[s]);
  const Eigen::VectorXd shifted = (row.array() - row.maxCoeff()).exp().transpose();
  return shifted / shifted.sum();
}

Eigen::MatrixXd SoftmaxPolicy::probabilities() const {
  Eigen::MatrixXd out(num_states(), num_actions());
  for (int s = 0; s < num_states(); ++s) out.row(s) = action_probs(s).transpose();
  return out;
}

double SoftmaxPolicy::log_prob(int s, int a) const {
  const auto row = logits_.row(state_rows_[s]);
  const double top = row.maxCoeff();
  return row(a) - top - std::log((row.array() - top).exp().sum());
}

Eigen::VectorXd SoftmaxPolicy::grad_log_prob_row(int s, int a) const {
  Eigen::VectorXd g = -action_probs(s);
  g(a) += 1.0;
  return g;
}

Eigen::MatrixXd SoftmaxPolicy::grad_log_prob(int s, int a) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(num_rows(), num_actions());
  g.row(state_rows_[s]) = grad_log_prob_row(s, a).transpose();
  return g;
}

Eigen::MatrixXd SoftmaxPolicy::fold_state_gradient(const Eigen::MatrixXd& per_state) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_rows(), num_actions());
  for (int s = 0; s < num_states(); ++s) out.row(state_rows_[s]) += per_state.row(s);
  return out;
}

}  // namespace pfedac
