#pragma once

#include <span>

#include "metapref/models.hpp"

namespace metapref {

/// Per-sample fine-tuning loss
///   l_FT(phi, theta; z) = -log pi_theta(y|x) * exp(r_phi(x,y) / beta)
///                         + (ridge / 2) * ||theta||^2,
/// with gradient taken with respect to theta.
LossValue loss_ft(const RewardParams& phi, const PolicyParams& theta,
                  const TaskInstance& task, const Example& z, double beta,
                  double ridge);

/// Exact expectation of l_FT under the task's D_x and D_{y|x} (diagnostic;
/// the training loops use single-sample estimates instead).
LossValue expected_loss_ft(const RewardParams& phi, const PolicyParams& theta,
                           const TaskInstance& task, double beta, double ridge);

/// Preference loss l_PL = -log sigma(log pi(y|x) - log pi(y'|x)), gradient
/// with respect to theta. The reward parameters enter only through whatever
/// produced theta, so they are not an argument here.
LossValue loss_pl(const PolicyParams& theta, const TaskInstance& task,
                  const PreferencePair& nu);

/// Bradley-Terry probability pi(y|x) / (pi(y|x) + pi(y'|x)). Throws
/// std::domain_error when y == y_prime.
double bt_prob(const PolicyParams& theta, const TaskInstance& task, int x,
               int y, int y_prime);

/// Reward-model MLE loss -mean[log sigma(r(x,y) - r(x,y'))] over the batch,
/// gradient with respect to phi. Throws std::invalid_argument on empty batch.
LossValue rm_mle_loss(const RewardParams& phi, const TaskInstance& task,
                      std::span<const PreferencePair> batch);

/// Supervised fine-tuning loss: mean of -log pi_theta(y|x) over the batch,
/// gradient with respect to theta. Throws std::invalid_argument on empty batch.
LossValue sft_loss(const PolicyParams& theta, const TaskInstance& task,
                   std::span<const Example> batch);

/// Exact value of the KL-regularized objective
///   E_x[ E_{y~pi}[r_phi] - beta * KL(pi_theta(.|x) || D_{y|x}) ]
/// by enumeration. A zero-probability reference entry under positive policy
/// mass yields -infinity rather than an error.
double rlhf_objective_value(const PolicyParams& theta, const RewardParams& phi,
                            const TaskInstance& task, double beta);

}  // namespace metapref
