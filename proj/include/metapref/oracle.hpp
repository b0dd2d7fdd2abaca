#pragma once

#include "metapref/objectives.hpp"

namespace metapref {

/// Explicit conditional policy: one probability row per prompt.
struct ConditionalPolicyTable {
  std::vector<Vec> rows;

  /// Throws std::invalid_argument unless every row is nonnegative and sums
  /// to one within 1e-12.
  void validate() const;
};

/// Partition function Z(x) = sum_y D_{y|x}(y) exp(r_phi(x,y) / beta).
double partition(const TaskInstance& task, const RewardParams& phi, double beta, int x);

/// Globally optimal KL-regularized policy
///   pi*(y|x) = D_{y|x}(y) exp(r_phi(x,y) / beta) / Z(x).
ConditionalPolicyTable optimal_policy(const TaskInstance& task, const RewardParams& phi, double beta);

/// The KL-regularized objective evaluated at an explicit policy table
/// (same convention as rlhf_objective_value for zero reference entries).
double rlhf_objective_of_table(const ConditionalPolicyTable& table,
                               const RewardParams& phi,
                               const TaskInstance& task, double beta);

/// For tabular (one-hot) tasks: parameters with logits
/// log D_{y|x}(y) + r_phi(x,y) / beta per (x, y); the induced softmax policy
/// equals optimal_policy exactly. Throws std::invalid_argument on non-tabular
/// tasks. Zero reference entries get a -700 logit floor, which leaves every
/// KL(pi* || pi_theta) unchanged because pi* is exactly zero there.
PolicyParams tabular_inner_minimizer(const TaskInstance& task, const RewardParams& phi, double beta);

struct BruteForceResult {
  PolicyParams params;
  double grad_norm = 0.0;  // achieved full gradient norm
  int steps_used = 0;
  bool converged = false;  // gradient norm reached tolerance within budget
};

/// Independent inner-loop minimizer: full-batch gradient descent with
/// backtracking line search on the exact expected l_FT, run until the
/// gradient norm is <= 1e-10 or the step budget is exhausted. Exists as a
/// cross-check for the closed forms and the sampled-SGD path; intended for
/// small parameter dimensions.
BruteForceResult brute_force_inner_min(const TaskInstance& task, const RewardParams& phi,
                                       double beta, int budget, double ridge = 0.0);

/// E_{x ~ D_x}[ KL(table_x || pi_theta(.|x)) ].
double expected_kl_to_policy(const ConditionalPolicyTable& table,
                             const PolicyParams& theta, const TaskInstance& task);

/// E_{x ~ D_x}[ KL(table_a_x || table_b_x) ].
double expected_kl_between(const ConditionalPolicyTable& a, const ConditionalPolicyTable& b,
                           const TaskInstance& task);

/// The policy table induced by softmax parameters.
ConditionalPolicyTable policy_table(const PolicyParams& theta, const TaskInstance& task);

/// The reference conditional D_{y|x} as a table.
ConditionalPolicyTable reference_table(const TaskInstance& task);

}  // namespace metapref
