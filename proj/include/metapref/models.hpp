#pragma once

#include "metapref/task.hpp"

namespace metapref {

/// Candidate scores theta . psi(x, y'') for every y'' in Y(x).
Vec policy_scores(const PolicyParams& theta, const TaskInstance& task, int x);

/// log pi_theta(. | x) over the candidate set; entries sum to one after exp.
Vec policy_logprobs(const PolicyParams& theta, const TaskInstance& task, int x);

/// log pi_theta(y | x). Throws std::domain_error if y is outside Y(x).
double policy_logprob(const PolicyParams& theta, const TaskInstance& task, int x, int y);

/// grad_theta log pi_theta(y | x) = psi(x, y) - E_{y'' ~ pi}[psi(x, y'')].
Vec policy_grad(const PolicyParams& theta, const TaskInstance& task, int x, int y);

/// hess_theta log pi_theta(y | x) = -Cov_{y'' ~ pi}(psi(x, .)); symmetric
/// negative semidefinite and independent of the conditioning response y.
Mat policy_hessian(const PolicyParams& theta, const TaskInstance& task, int x);

/// r_phi(x, y) = r_max * tanh(phi . psi_r(x, y)).
double reward_value(const RewardParams& phi, const TaskInstance& task, int x, int y);

/// grad_phi r_phi(x, y) = r_max * (1 - tanh^2(phi . psi_r)) * psi_r(x, y).
Vec reward_grad(const RewardParams& phi, const TaskInstance& task, int x, int y);

}  // namespace metapref
