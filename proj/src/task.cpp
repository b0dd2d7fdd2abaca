#include "metapref/task.hpp"

#include <cmath>
#include <stdexcept>

namespace metapref {

int TaskInstance::policy_dim() const {
  if (policy_features.empty() || policy_features[0].rows() == 0) return 0;
  return static_cast<int>(policy_features[0].cols());
}

int TaskInstance::reward_dim() const {
  if (reward_features.empty() || reward_features[0].rows() == 0) return 0;
  return static_cast<int>(reward_features[0].cols());
}

void TaskInstance::check_prompt(int x) const {
  if (x < 0 || x >= n_prompts()) {
    throw std::domain_error("TaskInstance: prompt index out of range");
  }
}

void TaskInstance::check_pair(int x, int y) const {
  check_prompt(x);
  if (y < 0 || y >= n_candidates(x)) {
    throw std::domain_error("TaskInstance: response outside the prompt's candidate set");
  }
}

void TaskInstance::validate() const {
  const int nx = n_prompts();
  if (nx == 0) throw std::invalid_argument("task: no prompts");
  if (static_cast<int>(candidates.size()) != nx ||
      static_cast<int>(policy_features.size()) != nx ||
      static_cast<int>(reward_features.size()) != nx ||
      static_cast<int>(ref_cond.size()) != nx || prompt_dist.size() != nx) {
    throw std::invalid_argument("task: per-prompt table sizes disagree");
  }
  const int p = policy_dim();
  const int q = reward_dim();
  if (std::abs(prompt_dist.sum() - 1.0) > 1e-12 || prompt_dist.minCoeff() < 0.0) {
    throw std::invalid_argument("task: D_x is not a distribution");
  }
  for (int x = 0; x < nx; ++x) {
    if (prompts[x].id != x) throw std::invalid_argument("task: prompt ids must be 0..n_x-1");
    if (!prompts[x].features.allFinite()) throw std::invalid_argument("task: non-finite prompt features");
    const int ny = n_candidates(x);
    if (ny == 0) throw std::invalid_argument("task: empty candidate set");
    if (policy_features[x].rows() != ny || policy_features[x].cols() != p ||
        reward_features[x].rows() != ny || reward_features[x].cols() != q ||
        ref_cond[x].size() != ny) {
      throw std::invalid_argument("task: feature/table shape mismatch");
    }
    if (!policy_features[x].allFinite() || !reward_features[x].allFinite()) {
      throw std::invalid_argument("task: non-finite features");
    }
    if (std::abs(ref_cond[x].sum() - 1.0) > 1e-12 || ref_cond[x].minCoeff() < 0.0) {
      throw std::invalid_argument("task: D_{y|x} row is not a distribution");
    }
    for (int y = 0; y < ny; ++y) {
      const Response& r = candidates[x][y];
      if (r.id != y) throw std::invalid_argument("task: response ids must be 0..n_y-1");
      if (r.length < 1) throw std::invalid_argument("task: response length must be >= 1");
      if (!r.features.allFinite()) throw std::invalid_argument("task: non-finite response features");
    }
  }
  if (true_reward) {
    if (true_reward->phi.size() != q || !true_reward->phi.allFinite() || true_reward->r_max <= 0.0) {
      throw std::invalid_argument("task: malformed ground-truth reward");
    }
  }
}

TaskInstance make_tabular_task(const Vec& prompt_dist,
                               const std::vector<Vec>& ref_cond,
                               std::optional<RewardParams> true_reward,
                               const std::vector<std::vector<int>>& lengths) {
  TaskInstance t;
  const int nx = static_cast<int>(ref_cond.size());
  int total = 0;
  for (const Vec& row : ref_cond) total += static_cast<int>(row.size());

  t.tabular = true;
  t.prompt_dist = prompt_dist;
  int flat = 0;
  for (int x = 0; x < nx; ++x) {
    const int ny = static_cast<int>(ref_cond[x].size());
    Prompt pr;
    pr.id = x;
    pr.features = Vec::Constant(1, static_cast<double>(x));
    t.prompts.push_back(std::move(pr));

    std::vector<Response> cands;
    Mat psi = Mat::Zero(ny, total);
    for (int y = 0; y < ny; ++y) {
      Response r;
      r.id = y;
      r.features = Vec::Constant(1, static_cast<double>(y));
      r.length = lengths.empty() ? 1 : lengths.at(x).at(y);
      cands.push_back(std::move(r));
      psi(y, flat + y) = 1.0;
    }
    flat += ny;
    t.candidates.push_back(std::move(cands));
    t.reward_features.push_back(psi);
    t.policy_features.push_back(std::move(psi));
    t.ref_cond.push_back(ref_cond[x]);
  }
  t.true_reward = std::move(true_reward);
  t.validate();
  return t;
}

namespace {

Vec random_distribution(int n, Rng& rng) {
  // Strictly positive via a floor, then normalized.
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = 0.05 + rng.next_double();
  return v / v.sum();
}

}  // namespace

TaskInstance make_random_task(int n_prompts, int max_candidates, int p, int q,
                              double r_max_true, Rng& rng) {
  if (n_prompts < 1 || max_candidates < 2 || p < 1 || q < 1) {
    throw std::invalid_argument("make_random_task: degenerate sizes");
  }
  TaskInstance t;
  const double sp = 1.0 / std::sqrt(static_cast<double>(p));
  const double sq = 1.0 / std::sqrt(static_cast<double>(q));
  for (int x = 0; x < n_prompts; ++x) {
    const int ny = 2 + static_cast<int>(rng.next_index(static_cast<std::size_t>(max_candidates - 1)));
    Prompt pr;
    pr.id = x;
    pr.features = Vec::Constant(2, 0.0);
    for (int i = 0; i < 2; ++i) pr.features[i] = rng.next_gaussian();
    t.prompts.push_back(std::move(pr));

    std::vector<Response> cands;
    Mat psi(ny, p), psir(ny, q);
    for (int y = 0; y < ny; ++y) {
      Response r;
      r.id = y;
      r.features = Vec::Constant(2, 0.0);
      for (int i = 0; i < 2; ++i) r.features[i] = rng.next_gaussian();
      r.length = 1 + static_cast<int>(rng.next_index(8));
      cands.push_back(std::move(r));
      for (int j = 0; j < p; ++j) psi(y, j) = sp * rng.next_gaussian();
      for (int j = 0; j < q; ++j) psir(y, j) = sq * rng.next_gaussian();
    }
    t.candidates.push_back(std::move(cands));
    t.policy_features.push_back(std::move(psi));
    t.reward_features.push_back(std::move(psir));
    t.ref_cond.push_back(random_distribution(ny, rng));
  }
  t.prompt_dist = random_distribution(n_prompts, rng);
  RewardParams truth;
  truth.r_max = r_max_true;
  truth.phi = Vec(q);
  for (int j = 0; j < q; ++j) truth.phi[j] = rng.next_gaussian();
  t.true_reward = std::move(truth);
  t.validate();
  return t;
}

}  // namespace metapref
