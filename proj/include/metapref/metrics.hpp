#pragma once

#include <string>

#include "metapref/models.hpp"

namespace metapref {

/// Length-normalized preference accuracy: the fraction of pairs with
///   log pi(y|x) / |y|  >  log pi(y'|x) / |y'|   (strict; ties score 0).
/// Throws std::invalid_argument on an empty set.
double pl_accuracy(const PolicyParams& theta, const TaskInstance& task,
                   std::span<const PreferencePair> prefs);

/// Exact E_{x ~ D_x} E_{y ~ pi_theta(.|x)}[ r*(x, y) ] by enumeration.
/// Throws std::invalid_argument when the task has no ground-truth reward.
double true_reward_eval(const PolicyParams& theta, const TaskInstance& task);

/// Running mean of squared hypergradient norms over prefix windows:
/// entry i is (1 / k_i) * sum_{j < k_i} norms[j]^2 with k_i = (i+1) * window,
/// clipped to the sequence length. The final prefix (the whole sequence) is
/// always included.
std::vector<double> grad_norm_trace(std::span<const double> norms, int window);

/// One evaluation outcome; rows aggregate into the results table.
struct EvalRow {
  std::string method;
  std::uint64_t seed = 0;
  int task_id = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
};

}  // namespace metapref
