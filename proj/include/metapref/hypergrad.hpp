#pragma once

#include "metapref/objectives.hpp"

namespace metapref {

/// Everything the analytical outer gradient needs from one inner-SGD step,
/// cached at the visited iterate theta_t:
///   grad_logpi = grad_theta log pi_{theta_t}(y_t | x_t)
///   hess_logpi = hess_theta log pi_{theta_t}(y_t | x_t)
///   reward     = r_phi(x_t, y_t)
///   weight     = exp(reward / beta)
///   grad_reward = grad_phi r_phi(x_t, y_t)
struct InnerStep {
  Example z;
  Vec theta;  // iterate before this step's update
  Vec grad_logpi;
  Mat hess_logpi;
  double reward = 0.0;
  double weight = 1.0;
  Vec grad_reward;
};

/// Recorded inner-SGD trajectory. The update rule is
///   theta_{t+1} = theta_t - alpha * (ridge * theta_t - weight_t * grad_logpi_t)
/// and is reproducible bit-for-bit from the stored pieces.
struct InnerTrace {
  Vec theta0;
  Vec theta_final;
  double alpha = 0.0;
  double beta = 1.0;
  double ridge = 0.0;
  std::vector<InnerStep> steps;
};

/// Runs `stream.size()` steps of SGD on l_FT from theta0, caching the
/// ingredients of the analytical outer gradient at every visited iterate.
InnerTrace run_inner_sgd(const RewardParams& phi, const Vec& theta0,
                         const TaskInstance& task, std::span<const Example> stream,
                         double alpha, double beta, double ridge);

struct Hypergradient {
  Vec vector;                              // dim q
  std::vector<double> step_contrib_norms;  // one per inner step
};

/// Analytical gradient of l_PL(theta_D) with respect to phi through the
/// unrolled inner trajectory:
///   -(alpha/beta) * sum_t gradphi_H_t (grad_F_t)^T R_t
///        * prod_{j=t+1}^{D-1} (I + alpha hess_F_j R_j - alpha ridge I)
///        * grad_A * (1 - sigma(A)),
/// with A = log pi_{theta_D}(y|x) - log pi_{theta_D}(y'|x). The matrix
/// product factors are evaluated at step j and accumulated right-to-left as
/// matrix-vector products, O(D p^2) total. D = 0 returns an exact zero.
Hypergradient prop1_hypergrad(const InnerTrace& trace, const TaskInstance& task,
                              const PreferencePair& nu);

/// Central-difference gradient of the composite map
///   phi -> l_PL(theta_D(phi))
/// with the same fixed sample stream for every perturbation; each of the 2q
/// evaluations re-runs the full inner SGD. Verification oracle for
/// prop1_hypergrad.
Vec fd_hypergrad(const RewardParams& phi, const Vec& theta0, const TaskInstance& task,
                 std::span<const Example> stream, const PreferencePair& nu,
                 double alpha, double beta, double ridge, double epsilon);

struct CheckConfig {
  int max_dim = 20;        // p, q sampled in [2, max_dim]
  int max_inner_steps = 10;
  double fd_epsilon = 1e-4;
  double rel_tol = 1e-5;        // relative l2 error bound
  double cos_tol = 1e-8;        // cosine similarity must be >= 1 - cos_tol
};

struct CheckRow {
  int instance = 0;
  int p = 0, q = 0, inner_steps = 0;
  double alpha = 0.0, beta = 0.0, ridge = 0.0;
  double rel_err = 0.0;
  double cos_sim = 1.0;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  double max_rel_err = 0.0;
  double min_cos_sim = 1.0;
  bool passed = true;
};

/// Compares the analytical and finite-difference hypergradients on randomly
/// drawn tasks, parameters and streams. Every instance must satisfy both
/// tolerances for the report to pass.
CheckReport check_hypergrad(const CheckConfig& cfg, int n_instances, Rng& rng);

}  // namespace metapref
