#include "metapref/metrics.hpp"

#include <stdexcept>

namespace metapref {

double pl_accuracy(const PolicyParams& theta, const TaskInstance& task,
                   std::span<const PreferencePair> prefs) {
  if (prefs.empty()) throw std::invalid_argument("pl_accuracy: empty preference set");
  int correct = 0;
  for (const PreferencePair& nu : prefs) {
    task.check_pair(nu.prompt, nu.preferred);
    task.check_pair(nu.prompt, nu.dispreferred);
    Vec lps = policy_logprobs(theta, task, nu.prompt);
    const double a = lps[nu.preferred] /
                     static_cast<double>(task.candidates[nu.prompt][nu.preferred].length);
    const double b = lps[nu.dispreferred] /
                     static_cast<double>(task.candidates[nu.prompt][nu.dispreferred].length);
    if (a > b) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(prefs.size());
}

double true_reward_eval(const PolicyParams& theta, const TaskInstance& task) {
  if (!task.true_reward) {
    throw std::invalid_argument("true_reward_eval: task has no ground-truth reward");
  }
  double total = 0.0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    Vec probs = policy_logprobs(theta, task, x).array().exp().matrix();
    double inner = 0.0;
    for (int y = 0; y < task.n_candidates(x); ++y) {
      inner += probs[y] * reward_value(*task.true_reward, task, x, y);
    }
    total += task.prompt_dist[x] * inner;
  }
  return total;
}

std::vector<double> grad_norm_trace(std::span<const double> norms, int window) {
  if (window < 1) throw std::invalid_argument("grad_norm_trace: window must be >= 1");
  std::vector<double> out;
  const std::size_t n = norms.size();
  double acc = 0.0;
  std::size_t k = 0;
  for (; k < n; ++k) {
    acc += norms[k] * norms[k];
    if ((k + 1) % static_cast<std::size_t>(window) == 0) {
      out.push_back(acc / static_cast<double>(k + 1));
    }
  }
  if (n > 0 && n % static_cast<std::size_t>(window) != 0) {
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

}  // namespace metapref
