#include "metapref/objectives.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metapref {

LossValue loss_ft(const RewardParams& phi, const PolicyParams& theta,
                  const TaskInstance& task, const Example& z, double beta,
                  double ridge) {
  if (!(beta > 0.0)) throw std::invalid_argument("loss_ft: beta must be > 0");
  if (ridge < 0.0) throw std::invalid_argument("loss_ft: ridge must be >= 0");
  const double weight = std::exp(reward_value(phi, task, z.prompt, z.response) / beta);
  const double lp = policy_logprob(theta, task, z.prompt, z.response);
  LossValue out;
  out.value = -lp * weight + 0.5 * ridge * theta.theta.squaredNorm();
  out.grad = (-weight) * policy_grad(theta, task, z.prompt, z.response) + ridge * theta.theta;
  return out;
}

LossValue expected_loss_ft(const RewardParams& phi, const PolicyParams& theta,
                           const TaskInstance& task, double beta, double ridge) {
  if (!(beta > 0.0)) throw std::invalid_argument("expected_loss_ft: beta must be > 0");
  LossValue out;
  out.value = 0.0;
  Vec g = Vec::Zero(task.policy_dim());
  for (int x = 0; x < task.n_prompts(); ++x) {
    const double px = task.prompt_dist[x];
    if (px == 0.0) continue;
    Vec lps = policy_logprobs(theta, task, x);
    for (int y = 0; y < task.n_candidates(x); ++y) {
      const double py = task.ref_cond[x][y];
      if (py == 0.0) continue;
      const double w = std::exp(reward_value(phi, task, x, y) / beta);
      out.value += px * py * (-lps[y] * w);
      g -= (px * py * w) * policy_grad(theta, task, x, y);
    }
  }
  out.value += 0.5 * ridge * theta.theta.squaredNorm();
  g += ridge * theta.theta;
  out.grad = std::move(g);
  return out;
}

LossValue loss_pl(const PolicyParams& theta, const TaskInstance& task,
                  const PreferencePair& nu) {
  task.check_pair(nu.prompt, nu.preferred);
  task.check_pair(nu.prompt, nu.dispreferred);
  Vec lps = policy_logprobs(theta, task, nu.prompt);
  const double a = lps[nu.preferred] - lps[nu.dispreferred];
  LossValue out;
  out.value = softplus(-a);  // -log sigma(a)
  Vec diff = policy_grad(theta, task, nu.prompt, nu.preferred) -
             policy_grad(theta, task, nu.prompt, nu.dispreferred);
  out.grad = (-(1.0 - logistic(a))) * diff;
  return out;
}

double bt_prob(const PolicyParams& theta, const TaskInstance& task, int x,
               int y, int y_prime) {
  task.check_pair(x, y);
  task.check_pair(x, y_prime);
  if (y == y_prime) throw std::domain_error("bt_prob: responses must differ");
  Vec lps = policy_logprobs(theta, task, x);
  return logistic(lps[y] - lps[y_prime]);
}

LossValue rm_mle_loss(const RewardParams& phi, const TaskInstance& task,
                      std::span<const PreferencePair> batch) {
  if (batch.empty()) throw std::invalid_argument("rm_mle_loss: empty batch");
  LossValue out;
  out.value = 0.0;
  Vec g = Vec::Zero(task.reward_dim());
  for (const PreferencePair& nu : batch) {
    const double dr = reward_value(phi, task, nu.prompt, nu.preferred) -
                      reward_value(phi, task, nu.prompt, nu.dispreferred);
    out.value += softplus(-dr);
    const double s = 1.0 - logistic(dr);
    g -= s * (reward_grad(phi, task, nu.prompt, nu.preferred) -
              reward_grad(phi, task, nu.prompt, nu.dispreferred));
  }
  const double n = static_cast<double>(batch.size());
  out.value /= n;
  out.grad = g / n;
  return out;
}

LossValue sft_loss(const PolicyParams& theta, const TaskInstance& task,
                   std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("sft_loss: empty batch");
  LossValue out;
  out.value = 0.0;
  Vec g = Vec::Zero(task.policy_dim());
  for (const Example& z : batch) {
    out.value -= policy_logprob(theta, task, z.prompt, z.response);
    g -= policy_grad(theta, task, z.prompt, z.response);
  }
  const double n = static_cast<double>(batch.size());
  out.value /= n;
  out.grad = g / n;
  return out;
}

double rlhf_objective_value(const PolicyParams& theta, const RewardParams& phi,
                            const TaskInstance& task, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("rlhf_objective_value: beta must be > 0");
  double total = 0.0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    const double px = task.prompt_dist[x];
    if (px == 0.0) continue;
    Vec lps = policy_logprobs(theta, task, x);
    Vec probs = lps.array().exp().matrix();
    double inner = 0.0;
    for (int y = 0; y < task.n_candidates(x); ++y) {
      const double ref = task.ref_cond[x][y];
      if (probs[y] == 0.0) continue;  // 0 log 0 convention
      if (ref == 0.0) return -std::numeric_limits<double>::infinity();
      inner += probs[y] * reward_value(phi, task, x, y);
      inner -= beta * probs[y] * (lps[y] - std::log(ref));
    }
    total += px * inner;
  }
  return total;
}

}  // namespace metapref
