#pragma once

#include "metapref/hypergrad.hpp"
#include "metapref/metrics.hpp"

namespace metapref {

struct SftOptions {
  int steps = 2000;
  double lr = 0.3;
  bool full_batch = false;  // exact dataset-mean gradient instead of sampling
};

/// Fits the supervised policy by gradient descent on the SFT loss over the
/// given samples, starting from zero parameters. steps = 0 returns the zero
/// initialization.
PolicyParams sft_fit(const TaskInstance& task, std::span<const Example> data,
                     const SftOptions& opts, Rng& rng);

/// Adaptation stop rule: halt when the full-batch gradient norm (measured
/// every `patience` steps) drops to `grad_norm_tol`, or at `max_steps`,
/// whichever happens first.
struct StoppingRule {
  int max_steps = 10000;
  double grad_norm_tol = 1e-6;
  int patience = 500;

  void validate() const;
};

struct AdaptOptions {
  double alpha = 0.05;
  double beta = 8.0;
  double ridge = 0.0;
  double lr_decay = 5e-3;   // step t uses alpha / (1 + lr_decay * t)
  bool full_batch = false;  // deterministic descent on the dataset mean
  StoppingRule stop;
  SftOptions sft;
};

/// Meta-test adaptation: SFT initialization on the task's fine-tuning
/// samples, then (S)GD on l_FT with the fixed reward model.
PolicyParams meta_test(const RewardParams& phi_star, const TaskInstance& task,
                       std::span<const Example> ft, const AdaptOptions& opts, Rng& rng);

struct MetaTrainOptions {
  HyperParams hp;       // alpha, beta, eta, D = inner_steps, K = outer_steps, seed
  double r_max = 32.0;  // bound of the learned reward model
  double ridge = 0.0;   // optional strong-convexity term in l_FT
  int phi_stride = 100; // checkpoint thinning (k = 0, stride, 2*stride, ...)
  int outer_batch = 1;  // preference pairs averaged per outer update
  SftOptions sft;       // per-task policy initialization
};

struct MetaTrainRun {
  std::vector<int> checkpoint_iters;  // k for each stored phi_k (K included)
  std::vector<Vec> checkpoints;
  Vec phi_final;
  double r_max = 1.0;

  std::vector<int> task_ids;          // sampled task per outer iteration
  std::vector<double> outer_losses;   // l_PL(phi_k, theta_{k,D}; nu_k)
  std::vector<double> hg_norms;       // hypergradient norm per iteration

  HyperParams hp;
  double ridge = 0.0;
  int outer_batch = 1;
  std::uint64_t seed = 0;
};

/// Meta-training: K outer iterations, each drawing a task, re-initializing
/// the policy from that task's (cached, seed-deterministic) SFT fit, running
/// D inner SGD steps on l_FT, then stepping phi against the analytical
/// hypergradient of the sampled preference loss.
///
/// Episode k draws from Rng(mix64(hp.seed, tag64("meta.episode"), k)) in the
/// order: task index, D fine-tuning sample indices, outer_batch preference
/// indices. The SFT fit of task i uses Rng(mix64(hp.seed, tag64("meta.sft"),
/// id)). This layout makes single iterations replayable.
MetaTrainRun meta_train(std::span<const SuiteTask> train_tasks, const MetaTrainOptions& opts);

/// Model selection: adapts every stored phi_k on each evaluation task and
/// returns the checkpoint with the highest mean preference accuracy on the
/// tasks' evaluation pairs; ties break toward the earliest k.
RewardParams select_rm(const MetaTrainRun& run, std::span<const SuiteTask> eval_tasks,
                       const AdaptOptions& adapt, std::uint64_t seed);

struct PoolOptions {
  int steps = 2000;
  double lr = 0.02;
  bool full_batch = false;
  /// When > 0, snapshot every val_stride steps and return the snapshot with
  /// the lowest pooled MLE loss on the tasks' evaluation pairs.
  int val_stride = 0;
};

/// Pooled reward-model MLE across the training tasks' preference data
/// (the multi-task RM baseline's first stage), with optional early stopping
/// on held-back validation pairs.
RewardParams train_pooled_rm(std::span<const SuiteTask> train_tasks, double r_max,
                             const PoolOptions& opts, Rng& rng);

/// Multi-task-RM baseline: pooled RM MLE, then meta_test with that RM on the
/// test task.
PolicyParams baseline_mtrm(std::span<const SuiteTask> train_tasks, const SuiteTask& test_task,
                           double r_max, const PoolOptions& rm_opts,
                           const AdaptOptions& adapt, Rng& rng);

/// Preference-only baseline: one policy trained by (S)GD on l_PL over the
/// pooled training-task preferences, starting from theta0.
PolicyParams baseline_hpl(std::span<const SuiteTask> train_tasks, const PolicyParams& theta0,
                          const PoolOptions& opts, Rng& rng);

/// Mean l_PL over all training pairs (diagnostic for the pooled baseline).
double pooled_pl_loss(std::span<const SuiteTask> train_tasks, const PolicyParams& theta);

/// Mean rm_mle_loss over all training pairs (diagnostic for the pooled RM).
double pooled_rm_loss(std::span<const SuiteTask> train_tasks, const RewardParams& phi);

}  // namespace metapref
