#pragma once

#include <string>
#include <vector>

#include "metapref/rng.hpp"
#include "metapref/types.hpp"

namespace metapref {

/// A finite task: prompt space with marginal D_x, per-prompt candidate
/// response sets with an explicit conditional D_{y|x}, feature maps for the
/// policy (dim p) and the reward model (dim q), and optionally the synthetic
/// ground-truth reward that generated the task's data.
struct TaskInstance {
  int id = 0;
  std::string split = "train";  // "train" | "heldout"

  std::vector<Prompt> prompts;
  std::vector<std::vector<Response>> candidates;  // per prompt
  std::vector<Mat> policy_features;  // per prompt: n_candidates x p
  std::vector<Mat> reward_features;  // per prompt: n_candidates x q
  Vec prompt_dist;                   // D_x over prompts
  std::vector<Vec> ref_cond;         // D_{y|x} per prompt

  std::optional<RewardParams> true_reward;  // synthetic tasks only
  bool tabular = false;  // policy features are one-hot over (x, y) pairs

  int n_prompts() const { return static_cast<int>(prompts.size()); }
  int n_candidates(int x) const { return static_cast<int>(candidates.at(x).size()); }
  int policy_dim() const;
  int reward_dim() const;

  /// Bounds-checks a (prompt, response) pair; throws std::domain_error.
  void check_pair(int x, int y) const;
  void check_prompt(int x) const;

  /// Structural checks: normalized distributions, consistent dimensions,
  /// finite values, lengths >= 1. Throws std::invalid_argument on violation.
  void validate() const;
};

/// Datasets generated for one task.
struct TaskData {
  std::vector<Example> ft;                 // fine-tuning samples from D_xy
  std::vector<PreferencePair> pref_train;  // preference data for training
  std::vector<PreferencePair> pref_eval;   // held back for evaluation/selection
};

struct SuiteTask {
  TaskInstance task;
  TaskData data;
};

/// Task with one-hot policy and reward features over (x, y) pairs
/// (p = q = total pair count). Response lengths default to 1.
TaskInstance make_tabular_task(const Vec& prompt_dist,
                               const std::vector<Vec>& ref_cond,
                               std::optional<RewardParams> true_reward = std::nullopt,
                               const std::vector<std::vector<int>>& lengths = {});

/// Random dense-feature task for gradient checks and property tests.
/// Features are i.i.d. normal scaled by 1/sqrt(dim); D_x and D_{y|x} are
/// random strictly positive distributions; a random ground-truth reward with
/// the given bound is attached.
TaskInstance make_random_task(int n_prompts, int max_candidates, int p, int q,
                              double r_max_true, Rng& rng);

}  // namespace metapref
