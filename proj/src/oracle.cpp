#include "metapref/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metapref {

void ConditionalPolicyTable::validate() const {
  for (const Vec& row : rows) {
    if (row.size() == 0 || row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("ConditionalPolicyTable: row is not a distribution");
    }
  }
}

double partition(const TaskInstance& task, const RewardParams& phi, double beta, int x) {
  if (!(beta > 0.0)) throw std::invalid_argument("partition: beta must be > 0");
  task.check_prompt(x);
  double z = 0.0;
  for (int y = 0; y < task.n_candidates(x); ++y) {
    z += task.ref_cond[x][y] * std::exp(reward_value(phi, task, x, y) / beta);
  }
  return z;
}

ConditionalPolicyTable optimal_policy(const TaskInstance& task, const RewardParams& phi, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("optimal_policy: beta must be > 0");
  ConditionalPolicyTable table;
  table.rows.reserve(task.n_prompts());
  for (int x = 0; x < task.n_prompts(); ++x) {
    const double z = partition(task, phi, beta, x);
    Vec row(task.n_candidates(x));
    for (int y = 0; y < task.n_candidates(x); ++y) {
      row[y] = task.ref_cond[x][y] * std::exp(reward_value(phi, task, x, y) / beta) / z;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double rlhf_objective_of_table(const ConditionalPolicyTable& table,
                               const RewardParams& phi,
                               const TaskInstance& task, double beta) {
  if (static_cast<int>(table.rows.size()) != task.n_prompts()) {
    throw std::invalid_argument("rlhf_objective_of_table: table/task mismatch");
  }
  double total = 0.0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    const double px = task.prompt_dist[x];
    if (px == 0.0) continue;
    const Vec& row = table.rows[x];
    double inner = 0.0;
    for (int y = 0; y < task.n_candidates(x); ++y) {
      if (row[y] == 0.0) continue;
      const double ref = task.ref_cond[x][y];
      if (ref == 0.0) return -std::numeric_limits<double>::infinity();
      inner += row[y] * reward_value(phi, task, x, y);
      inner -= beta * row[y] * std::log(row[y] / ref);
    }
    total += px * inner;
  }
  return total;
}

PolicyParams tabular_inner_minimizer(const TaskInstance& task, const RewardParams& phi, double beta) {
  if (!task.tabular) {
    throw std::invalid_argument("tabular_inner_minimizer: task is not tabular");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("tabular_inner_minimizer: beta must be > 0");
  PolicyParams out;
  out.theta = Vec::Zero(task.policy_dim());
  int flat = 0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    for (int y = 0; y < task.n_candidates(x); ++y) {
      const double ref = task.ref_cond[x][y];
      const double logref = ref > 0.0 ? std::log(ref) : -700.0;
      out.theta[flat + y] = logref + reward_value(phi, task, x, y) / beta;
    }
    flat += task.n_candidates(x);
  }
  return out;
}

BruteForceResult brute_force_inner_min(const TaskInstance& task, const RewardParams& phi,
                                       double beta, int budget, double ridge) {
  constexpr double kTol = 1e-10;
  BruteForceResult res;
  res.params.theta = Vec::Zero(task.policy_dim());

  LossValue cur = expected_loss_ft(phi, res.params, task, beta, ridge);
  double step = 1.0;
  for (res.steps_used = 0; res.steps_used < budget; ++res.steps_used) {
    const Vec& g = *cur.grad;
    res.grad_norm = g.norm();
    if (res.grad_norm <= kTol) {
      res.converged = true;
      return res;
    }
    // Armijo backtracking from the last accepted step (mildly grown). The
    // sufficient-decrease test is only meaningful while the required decrease
    // exceeds the floating-point resolution of the loss.
    const double resolvable = 8.0 * std::numeric_limits<double>::epsilon() *
                              (std::abs(cur.value) + 1.0);
    double trial_step = 2.0 * step;
    const double g2 = g.squaredNorm();
    PolicyParams trial;
    LossValue next;
    bool armijo_ok = false;
    for (int backtracks = 0; backtracks < 40; ++backtracks) {
      const double need = 1e-4 * trial_step * g2;
      if (need <= resolvable) break;
      trial.theta = res.params.theta - trial_step * g;
      next = expected_loss_ft(phi, trial, task, beta, ridge);
      if (next.value <= cur.value - need) {
        armijo_ok = true;
        break;
      }
      trial_step *= 0.5;
    }
    if (armijo_ok) {
      step = trial_step;
    } else {
      // Function differences are below double resolution near the minimum;
      // steer plain gradient steps by the gradient norm instead.
      trial.theta = res.params.theta - step * g;
      next = expected_loss_ft(phi, trial, task, beta, ridge);
      if (next.grad->norm() < res.grad_norm) {
        step *= 1.5;
      } else {
        step *= 0.5;  // reject the move, retry smaller
        continue;
      }
    }
    res.params.theta = std::move(trial.theta);
    cur = std::move(next);
  }
  res.grad_norm = cur.grad->norm();
  res.converged = res.grad_norm <= kTol;
  return res;
}

double expected_kl_to_policy(const ConditionalPolicyTable& table,
                             const PolicyParams& theta, const TaskInstance& task) {
  double total = 0.0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    Vec probs = policy_logprobs(theta, task, x).array().exp().matrix();
    total += task.prompt_dist[x] * kl_divergence(table.rows[x], probs);
  }
  return total;
}

double expected_kl_between(const ConditionalPolicyTable& a, const ConditionalPolicyTable& b,
                           const TaskInstance& task) {
  double total = 0.0;
  for (int x = 0; x < task.n_prompts(); ++x) {
    total += task.prompt_dist[x] * kl_divergence(a.rows[x], b.rows[x]);
  }
  return total;
}

ConditionalPolicyTable policy_table(const PolicyParams& theta, const TaskInstance& task) {
  ConditionalPolicyTable t;
  t.rows.reserve(task.n_prompts());
  for (int x = 0; x < task.n_prompts(); ++x) {
    t.rows.push_back(policy_logprobs(theta, task, x).array().exp().matrix());
  }
  return t;
}

ConditionalPolicyTable reference_table(const TaskInstance& task) {
  ConditionalPolicyTable t;
  t.rows = task.ref_cond;
  return t;
}

}  // namespace metapref
