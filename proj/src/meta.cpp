#include "metapref/meta.hpp"

#include <cmath>
#include <stdexcept>

namespace metapref {

namespace {

constexpr std::uint64_t kTagEpisode = tag64("meta.episode");
constexpr std::uint64_t kTagSft = tag64("meta.sft");
constexpr std::uint64_t kTagSelect = tag64("meta.select");

Vec sft_mean_grad(const PolicyParams& theta, const TaskInstance& task,
                  std::span<const Example> data) {
  Vec g = Vec::Zero(task.policy_dim());
  for (const Example& z : data) g += policy_grad(theta, task, z.prompt, z.response);
  return g / static_cast<double>(data.size());
}

Vec ft_mean_grad(const RewardParams& phi, const PolicyParams& theta,
                 const TaskInstance& task, std::span<const Example> data,
                 double beta, double ridge) {
  Vec g = Vec::Zero(task.policy_dim());
  for (const Example& z : data) {
    const double w = std::exp(reward_value(phi, task, z.prompt, z.response) / beta);
    g -= w * policy_grad(theta, task, z.prompt, z.response);
  }
  g /= static_cast<double>(data.size());
  return g + ridge * theta.theta;
}

}  // namespace

PolicyParams sft_fit(const TaskInstance& task, std::span<const Example> data,
                     const SftOptions& opts, Rng& rng) {
  if (opts.steps < 0) throw std::invalid_argument("sft_fit: steps must be >= 0");
  PolicyParams theta;
  theta.theta = Vec::Zero(task.policy_dim());
  if (opts.steps == 0) return theta;
  if (data.empty()) throw std::invalid_argument("sft_fit: empty dataset");
  for (int t = 0; t < opts.steps; ++t) {
    if (opts.full_batch) {
      theta.theta += opts.lr * sft_mean_grad(theta, task, data);
    } else {
      const Example& z = data[rng.next_index(data.size())];
      theta.theta += opts.lr * policy_grad(theta, task, z.prompt, z.response);
    }
  }
  return theta;
}

void StoppingRule::validate() const {
  if (max_steps < 0) throw std::invalid_argument("stopping: max_steps must be >= 0");
  if (!(grad_norm_tol >= 0.0)) throw std::invalid_argument("stopping: grad_norm_tol must be >= 0");
  if (patience < 1) throw std::invalid_argument("stopping: patience must be >= 1");
}

PolicyParams meta_test(const RewardParams& phi_star, const TaskInstance& task,
                       std::span<const Example> ft, const AdaptOptions& opts, Rng& rng) {
  if (ft.empty()) throw std::invalid_argument("meta_test: task provides no fine-tuning samples");
  opts.stop.validate();
  PolicyParams theta = sft_fit(task, ft, opts.sft, rng);
  for (int t = 0; t < opts.stop.max_steps; ++t) {
    // grad_norm_tol <= 0 means "run the full budget"; skip the costly check.
    if (t > 0 && t % opts.stop.patience == 0 && opts.stop.grad_norm_tol > 0.0) {
      if (ft_mean_grad(phi_star, theta, task, ft, opts.beta, opts.ridge).norm() <=
          opts.stop.grad_norm_tol) {
        return theta;
      }
    }
    const double lr = opts.alpha / (1.0 + opts.lr_decay * static_cast<double>(t));
    if (opts.full_batch) {
      theta.theta -= lr * ft_mean_grad(phi_star, theta, task, ft, opts.beta, opts.ridge);
    } else {
      const Example& z = ft[rng.next_index(ft.size())];
      const double w = std::exp(reward_value(phi_star, task, z.prompt, z.response) / opts.beta);
      theta.theta -=
          lr * (opts.ridge * theta.theta - w * policy_grad(theta, task, z.prompt, z.response));
    }
  }
  return theta;
}

MetaTrainRun meta_train(std::span<const SuiteTask> train_tasks, const MetaTrainOptions& opts) {
  if (train_tasks.empty()) throw std::invalid_argument("meta_train: no training tasks");
  const int q = train_tasks[0].task.reward_dim();
  for (const SuiteTask& st : train_tasks) {
    if (st.data.ft.empty()) {
      throw std::invalid_argument("meta_train: task " + std::to_string(st.task.id) +
                                  " has no fine-tuning data");
    }
    if (st.data.pref_train.empty()) {
      throw std::invalid_argument("meta_train: task " + std::to_string(st.task.id) +
                                  " has an empty preference set");
    }
    if (st.task.reward_dim() != q) {
      throw std::invalid_argument("meta_train: reward feature dims differ across tasks");
    }
  }
  if (opts.phi_stride < 1) throw std::invalid_argument("meta_train: phi_stride must be >= 1");
  if (opts.outer_batch < 1) throw std::invalid_argument("meta_train: outer_batch must be >= 1");
  if (!(opts.r_max > 0.0)) throw std::invalid_argument("meta_train: r_max must be > 0");

  const HyperParams& hp = opts.hp;
  MetaTrainRun run;
  run.hp = hp;
  run.ridge = opts.ridge;
  run.outer_batch = opts.outer_batch;
  run.seed = hp.seed;
  run.r_max = opts.r_max;

  RewardParams phi;
  phi.r_max = opts.r_max;
  phi.phi = Vec::Zero(q);

  // Alg. 1 re-initializes theta from SFT every episode; the fit is cached per
  // task because it is seed-deterministic and tasks are fixed.
  std::vector<std::optional<PolicyParams>> sft_cache(train_tasks.size());
  const auto sft_init = [&](std::size_t idx) -> const PolicyParams& {
    if (!sft_cache[idx]) {
      Rng sft_rng(mix64(hp.seed, kTagSft, static_cast<std::uint64_t>(train_tasks[idx].task.id)));
      sft_cache[idx] = sft_fit(train_tasks[idx].task, train_tasks[idx].data.ft, opts.sft, sft_rng);
    }
    return *sft_cache[idx];
  };

  const int K = hp.outer_steps;
  run.task_ids.reserve(static_cast<std::size_t>(K));
  run.outer_losses.reserve(static_cast<std::size_t>(K));
  run.hg_norms.reserve(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    Rng ep(mix64(hp.seed, kTagEpisode, static_cast<std::uint64_t>(k)));
    const std::size_t t_idx = ep.next_index(train_tasks.size());
    const TaskInstance& task = train_tasks[t_idx].task;
    const TaskData& data = train_tasks[t_idx].data;

    std::vector<Example> stream;
    stream.reserve(static_cast<std::size_t>(hp.inner_steps));
    for (int t = 0; t < hp.inner_steps; ++t) {
      stream.push_back(data.ft[ep.next_index(data.ft.size())]);
    }

    // Stored candidates are the *learned* iterates; the untrained phi_0 is
    // not a selection candidate.
    if (k > 0 && k % opts.phi_stride == 0) {
      run.checkpoint_iters.push_back(k);
      run.checkpoints.push_back(phi.phi);
    }

    const PolicyParams& theta0 = sft_init(t_idx);
    InnerTrace trace =
        run_inner_sgd(phi, theta0.theta, task, stream, hp.alpha, hp.beta, opts.ridge);
    PolicyParams theta_final{trace.theta_final};

    Vec hg = Vec::Zero(q);
    double loss = 0.0;
    for (int b = 0; b < opts.outer_batch; ++b) {
      const PreferencePair& nu = data.pref_train[ep.next_index(data.pref_train.size())];
      hg += prop1_hypergrad(trace, task, nu).vector;
      loss += loss_pl(theta_final, task, nu).value;
    }
    hg /= static_cast<double>(opts.outer_batch);
    loss /= static_cast<double>(opts.outer_batch);

    run.task_ids.push_back(task.id);
    run.outer_losses.push_back(loss);
    run.hg_norms.push_back(hg.norm());

    phi.phi -= hp.eta * hg;
  }

  run.checkpoint_iters.push_back(K);
  run.checkpoints.push_back(phi.phi);
  run.phi_final = phi.phi;
  return run;
}

RewardParams select_rm(const MetaTrainRun& run, std::span<const SuiteTask> eval_tasks,
                       const AdaptOptions& adapt, std::uint64_t seed) {
  if (run.checkpoints.empty()) throw std::invalid_argument("select_rm: run has no stored phi");
  if (eval_tasks.empty()) throw std::invalid_argument("select_rm: empty evaluation set");
  for (const SuiteTask& st : eval_tasks) {
    if (st.data.pref_eval.empty()) {
      throw std::invalid_argument("select_rm: task " + std::to_string(st.task.id) +
                                  " has no evaluation preferences");
    }
  }
  std::size_t best = 0;
  double best_acc = -1.0;
  for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
    RewardParams cand{run.checkpoints[i], run.r_max};
    double acc = 0.0;
    for (const SuiteTask& st : eval_tasks) {
      Rng rng(mix64(seed, kTagSelect, static_cast<std::uint64_t>(run.checkpoint_iters[i]),
                    static_cast<std::uint64_t>(st.task.id)));
      PolicyParams theta = meta_test(cand, st.task, st.data.ft, adapt, rng);
      acc += pl_accuracy(theta, st.task, st.data.pref_eval);
    }
    acc /= static_cast<double>(eval_tasks.size());
    if (acc > best_acc) {
      best_acc = acc;
      best = i;
    }
  }
  return RewardParams{run.checkpoints[best], run.r_max};
}

namespace {

// Flat view over pooled preference pairs: (task index, pair index).
struct PooledPrefs {
  std::vector<std::pair<std::size_t, std::size_t>> index;

  explicit PooledPrefs(std::span<const SuiteTask> tasks) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      for (std::size_t j = 0; j < tasks[i].data.pref_train.size(); ++j) {
        index.emplace_back(i, j);
      }
    }
    if (index.empty()) throw std::invalid_argument("pooled preference data is empty");
  }
};

}  // namespace

RewardParams train_pooled_rm(std::span<const SuiteTask> train_tasks, double r_max,
                             const PoolOptions& opts, Rng& rng) {
  if (!(r_max > 0.0)) throw std::invalid_argument("train_pooled_rm: r_max must be > 0");
  PooledPrefs pool(train_tasks);
  const int q = train_tasks[0].task.reward_dim();
  RewardParams phi{Vec::Zero(q), r_max};

  const auto validation_loss = [&] {
    double total = 0.0;
    int n = 0;
    for (const SuiteTask& st : train_tasks) {
      if (st.data.pref_eval.empty()) continue;
      total += rm_mle_loss(phi, st.task, st.data.pref_eval).value *
               static_cast<double>(st.data.pref_eval.size());
      n += static_cast<int>(st.data.pref_eval.size());
    }
    return n > 0 ? total / n : 0.0;
  };

  RewardParams best = phi;
  double best_val = opts.val_stride > 0 ? validation_loss() : 0.0;
  for (int t = 0; t < opts.steps; ++t) {
    if (opts.full_batch) {
      Vec g = Vec::Zero(q);
      for (const auto& [ti, pj] : pool.index) {
        const SuiteTask& st = train_tasks[ti];
        g += *rm_mle_loss(phi, st.task, {&st.data.pref_train[pj], 1}).grad;
      }
      phi.phi -= opts.lr * g / static_cast<double>(pool.index.size());
    } else {
      const auto& [ti, pj] = pool.index[rng.next_index(pool.index.size())];
      const SuiteTask& st = train_tasks[ti];
      phi.phi -= opts.lr * *rm_mle_loss(phi, st.task, {&st.data.pref_train[pj], 1}).grad;
    }
    if (opts.val_stride > 0 && (t + 1) % opts.val_stride == 0) {
      const double v = validation_loss();
      if (v < best_val) {
        best_val = v;
        best = phi;
      }
    }
  }
  return opts.val_stride > 0 ? best : phi;
}

PolicyParams baseline_mtrm(std::span<const SuiteTask> train_tasks, const SuiteTask& test_task,
                           double r_max, const PoolOptions& rm_opts,
                           const AdaptOptions& adapt, Rng& rng) {
  RewardParams phi = train_pooled_rm(train_tasks, r_max, rm_opts, rng);
  return meta_test(phi, test_task.task, test_task.data.ft, adapt, rng);
}

PolicyParams baseline_hpl(std::span<const SuiteTask> train_tasks, const PolicyParams& theta0,
                          const PoolOptions& opts, Rng& rng) {
  PooledPrefs pool(train_tasks);
  PolicyParams theta = theta0;
  for (int t = 0; t < opts.steps; ++t) {
    if (opts.full_batch) {
      Vec g = Vec::Zero(theta.theta.size());
      for (const auto& [ti, pj] : pool.index) {
        const SuiteTask& st = train_tasks[ti];
        g += *loss_pl(theta, st.task, st.data.pref_train[pj]).grad;
      }
      theta.theta -= opts.lr * g / static_cast<double>(pool.index.size());
    } else {
      const auto& [ti, pj] = pool.index[rng.next_index(pool.index.size())];
      const SuiteTask& st = train_tasks[ti];
      theta.theta -= opts.lr * *loss_pl(theta, st.task, st.data.pref_train[pj]).grad;
    }
  }
  return theta;
}

double pooled_pl_loss(std::span<const SuiteTask> train_tasks, const PolicyParams& theta) {
  PooledPrefs pool(train_tasks);
  double total = 0.0;
  for (const auto& [ti, pj] : pool.index) {
    const SuiteTask& st = train_tasks[ti];
    total += loss_pl(theta, st.task, st.data.pref_train[pj]).value;
  }
  return total / static_cast<double>(pool.index.size());
}

double pooled_rm_loss(std::span<const SuiteTask> train_tasks, const RewardParams& phi) {
  PooledPrefs pool(train_tasks);
  double total = 0.0;
  for (const auto& [ti, pj] : pool.index) {
    const SuiteTask& st = train_tasks[ti];
    total += rm_mle_loss(phi, st.task, {&st.data.pref_train[pj], 1}).value;
  }
  return total / static_cast<double>(pool.index.size());
}

}  // namespace metapref
