#include "metapref/models.hpp"

#include <cmath>
#include <stdexcept>

namespace metapref {

namespace {

void check_theta(const PolicyParams& theta, const TaskInstance& task) {
  if (theta.theta.size() != task.policy_dim()) {
    throw std::invalid_argument("policy params dimension does not match task");
  }
}

void check_phi(const RewardParams& phi, const TaskInstance& task) {
  if (phi.phi.size() != task.reward_dim()) {
    throw std::invalid_argument("reward params dimension does not match task");
  }
  if (!(phi.r_max > 0.0)) throw std::invalid_argument("reward params: r_max must be > 0");
}

}  // namespace

Vec policy_scores(const PolicyParams& theta, const TaskInstance& task, int x) {
  task.check_prompt(x);
  check_theta(theta, task);
  return task.policy_features[x] * theta.theta;
}

Vec policy_logprobs(const PolicyParams& theta, const TaskInstance& task, int x) {
  Vec s = policy_scores(theta, task, x);
  const double lse = log_sum_exp(s);
  return (s.array() - lse).matrix();
}

double policy_logprob(const PolicyParams& theta, const TaskInstance& task, int x, int y) {
  task.check_pair(x, y);
  return policy_logprobs(theta, task, x)[y];
}

Vec policy_grad(const PolicyParams& theta, const TaskInstance& task, int x, int y) {
  task.check_pair(x, y);
  Vec probs = policy_logprobs(theta, task, x).array().exp().matrix();
  const Mat& psi = task.policy_features[x];
  return psi.row(y).transpose() - psi.transpose() * probs;
}

Mat policy_hessian(const PolicyParams& theta, const TaskInstance& task, int x) {
  task.check_prompt(x);
  check_theta(theta, task);
  Vec probs = policy_logprobs(theta, task, x).array().exp().matrix();
  const Mat& psi = task.policy_features[x];
  Vec mean = psi.transpose() * probs;
  Mat second = psi.transpose() * probs.asDiagonal() * psi;
  return -(second - mean * mean.transpose());
}

double reward_value(const RewardParams& phi, const TaskInstance& task, int x, int y) {
  task.check_pair(x, y);
  check_phi(phi, task);
  const double u = task.reward_features[x].row(y).dot(phi.phi);
  return phi.r_max * std::tanh(u);
}

Vec reward_grad(const RewardParams& phi, const TaskInstance& task, int x, int y) {
  task.check_pair(x, y);
  check_phi(phi, task);
  const double u = task.reward_features[x].row(y).dot(phi.phi);
  const double th = std::tanh(u);
  return phi.r_max * (1.0 - th * th) * task.reward_features[x].row(y).transpose();
}

}  // namespace metapref
