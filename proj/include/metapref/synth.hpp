#pragma once

#include "metapref/task.hpp"

namespace metapref {

/// Generator parameters for a meta-distribution of ground-truth tasks.
///
/// Every task draws its true reward weights from a shared prior: train tasks
/// around `w_bar()`, held-out tasks around `w_bar() + delta` (elementwise),
/// both with scale `w_scale`. The prior mean alternates sign across
/// coordinates, so the elementwise shift rotates the reward direction instead
/// of merely rescaling it; `delta` is the single distribution-shift knob.
///
/// Per-pair features come from a frozen random linear map of prompt and
/// response features plus isotropic noise on the policy side; reward features
/// are the noise-free view, so the reward model's feature space is a clean
/// subspace of what every task exposes.
///
/// D_{y|x} is the Boltzmann distribution of the true reward at `ref_temp`,
/// which makes fine-tuning data informative about preferences.
struct MetaDistributionSpec {
  int n_x = 30;  // prompts per task
  int n_y = 6;   // candidates per prompt
  int d_x = 12;  // prompt feature dim
  int d_y = 12;  // response feature dim
  int p = 12;    // policy feature dim
  int q = 12;    // reward feature dim

  double w_bar_scale = 1.0;   // magnitude of the alternating prior mean
  double w_scale = 0.4;       // s: per-task weight scatter
  double delta = 1.0;         // held-out mean shift
  double feature_noise = 0.1; // policy-side feature corruption

  int n_train_tasks = 8;
  int n_heldout_tasks = 4;
  int n_ft = 2000;   // fine-tuning samples per task
  int n_pref = 500;  // preference pairs per task and per split

  double r_max_true = 6.0;  // bound of the ground-truth reward
  double ref_temp = 6.0;    // Boltzmann temperature of D_{y|x}

  std::uint64_t seed = 11;

  /// Prior mean: alternating +/- w_bar_scale across the q coordinates.
  Vec w_bar() const;

  void validate() const;
};

/// Draws one ground-truth task. `split` must be "train" or "heldout";
/// identical (spec, split, rng state) yield identical tasks. The returned
/// task has id -1; callers assign ids.
TaskInstance sample_task(const MetaDistributionSpec& spec, const std::string& split, Rng& rng);

/// n i.i.d. samples (x, y) with x ~ D_x, y ~ D_{y|x}.
std::vector<Example> gen_ft_data(const TaskInstance& task, int n, Rng& rng);

/// n preference pairs: x ~ D_x, distinct candidates drawn uniformly, the
/// preferred side chosen by the Bradley-Terry law of the true reward. Throws
/// std::invalid_argument if any prompt has fewer than two candidates.
std::vector<PreferencePair> gen_pref_data(const TaskInstance& task, int n, Rng& rng);

/// All tasks of the suite with their datasets, from per-task derived seeds.
/// Task ids are 0..n_train-1 (train) then n_train..n_train+n_heldout-1.
std::vector<SuiteTask> generate_suite(const MetaDistributionSpec& spec);

}  // namespace metapref
