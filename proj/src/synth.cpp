#include "metapref/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "metapref/models.hpp"

namespace metapref {

namespace {

constexpr std::uint64_t kTagTask = tag64("synth.task");
constexpr std::uint64_t kTagFt = tag64("synth.ft");
constexpr std::uint64_t kTagPrefTrain = tag64("synth.pref_train");
constexpr std::uint64_t kTagPrefEval = tag64("synth.pref_eval");

int draw_categorical(const Vec& probs, Rng& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;  // guard against accumulated rounding
}

}  // namespace

Vec MetaDistributionSpec::w_bar() const {
  Vec w(q);
  for (int i = 0; i < q; ++i) w[i] = (i % 2 == 0 ? 1.0 : -1.0) * w_bar_scale;
  return w;
}

void MetaDistributionSpec::validate() const {
  if (n_x < 1 || n_y < 2 || d_x < 1 || d_y < 1 || p < 1 || q < 1) {
    throw std::invalid_argument("spec: sizes must be positive (n_y >= 2)");
  }
  if (!(w_scale > 0.0)) throw std::invalid_argument("spec: w_scale must be > 0");
  if (delta < 0.0) throw std::invalid_argument("spec: delta must be >= 0");
  if (feature_noise < 0.0) throw std::invalid_argument("spec: feature_noise must be >= 0");
  if (n_train_tasks < 1 || n_heldout_tasks < 1 || n_ft < 1 || n_pref < 1) {
    throw std::invalid_argument("spec: counts must be >= 1");
  }
  if (!(r_max_true > 0.0)) throw std::invalid_argument("spec: r_max_true must be > 0");
  if (!(ref_temp > 0.0)) throw std::invalid_argument("spec: ref_temp must be > 0");
}

TaskInstance sample_task(const MetaDistributionSpec& spec, const std::string& split, Rng& rng) {
  spec.validate();
  if (split != "train" && split != "heldout") {
    throw std::invalid_argument("sample_task: split must be 'train' or 'heldout'");
  }
  const bool heldout = split == "heldout";
  const int m = std::max(spec.p, spec.q);

  TaskInstance t;
  t.id = -1;
  t.split = split;

  RewardParams truth;
  truth.r_max = spec.r_max_true;
  truth.phi = spec.w_bar();
  for (int j = 0; j < spec.q; ++j) {
    truth.phi[j] += (heldout ? spec.delta : 0.0) + spec.w_scale * rng.next_gaussian();
  }

  Mat wx(m, spec.d_x), wy(m, spec.d_y);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < spec.d_x; ++j) wx(i, j) = rng.next_gaussian();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < spec.d_y; ++j) wy(i, j) = rng.next_gaussian();
  const double sx = 1.0 / std::sqrt(static_cast<double>(spec.d_x));
  const double sy = 1.0 / std::sqrt(static_cast<double>(spec.d_y));
  const double sp = 1.0 / std::sqrt(static_cast<double>(spec.p));
  const double sq = 1.0 / std::sqrt(static_cast<double>(spec.q));

  for (int x = 0; x < spec.n_x; ++x) {
    Prompt pr;
    pr.id = x;
    pr.features = Vec(spec.d_x);
    for (int j = 0; j < spec.d_x; ++j) pr.features[j] = rng.next_gaussian();

    std::vector<Response> cands;
    Mat psi(spec.n_y, spec.p), psir(spec.n_y, spec.q);
    for (int y = 0; y < spec.n_y; ++y) {
      Response r;
      r.id = y;
      r.features = Vec(spec.d_y);
      for (int j = 0; j < spec.d_y; ++j) r.features[j] = rng.next_gaussian();
      r.length = 1 + static_cast<int>(rng.next_index(8));

      // Shared latent view; each coordinate is approximately unit variance.
      Vec u = (wx * pr.features * sx + wy * r.features * sy) / std::sqrt(2.0);
      for (int j = 0; j < spec.q; ++j) psir(y, j) = sq * u[j];
      for (int j = 0; j < spec.p; ++j) {
        psi(y, j) = sp * (u[j] + spec.feature_noise * rng.next_gaussian());
      }
      cands.push_back(std::move(r));
    }
    t.prompts.push_back(std::move(pr));
    t.candidates.push_back(std::move(cands));
    t.policy_features.push_back(std::move(psi));
    t.reward_features.push_back(std::move(psir));
  }

  Vec dx(spec.n_x);
  for (int x = 0; x < spec.n_x; ++x) dx[x] = 1.0 + rng.next_double();
  t.prompt_dist = dx / dx.sum();

  t.true_reward = truth;
  for (int x = 0; x < spec.n_x; ++x) {
    Vec scores(spec.n_y);
    for (int y = 0; y < spec.n_y; ++y) {
      scores[y] = reward_value(truth, t, x, y) / spec.ref_temp;
    }
    const double lse = log_sum_exp(scores);
    t.ref_cond.push_back((scores.array() - lse).exp().matrix());
  }
  t.validate();
  return t;
}

std::vector<Example> gen_ft_data(const TaskInstance& task, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_ft_data: n must be >= 1");
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int x = draw_categorical(task.prompt_dist, rng);
    const int y = draw_categorical(task.ref_cond[x], rng);
    out.push_back({x, y});
  }
  return out;
}

std::vector<PreferencePair> gen_pref_data(const TaskInstance& task, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gen_pref_data: n must be >= 1");
  if (!task.true_reward) throw std::invalid_argument("gen_pref_data: task has no ground-truth reward");
  for (int x = 0; x < task.n_prompts(); ++x) {
    if (task.n_candidates(x) < 2) {
      throw std::invalid_argument("gen_pref_data: every prompt needs >= 2 candidates");
    }
  }
  std::vector<PreferencePair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int x = draw_categorical(task.prompt_dist, rng);
    const int ny = task.n_candidates(x);
    const int y = static_cast<int>(rng.next_index(static_cast<std::size_t>(ny)));
    int yp = static_cast<int>(rng.next_index(static_cast<std::size_t>(ny - 1)));
    if (yp >= y) ++yp;
    const double margin = reward_value(*task.true_reward, task, x, y) -
                          reward_value(*task.true_reward, task, x, yp);
    if (rng.next_double() < logistic(margin)) {
      out.push_back({x, y, yp});
    } else {
      out.push_back({x, yp, y});
    }
  }
  return out;
}

std::vector<SuiteTask> generate_suite(const MetaDistributionSpec& spec) {
  spec.validate();
  std::vector<SuiteTask> suite;
  suite.reserve(static_cast<std::size_t>(spec.n_train_tasks + spec.n_heldout_tasks));
  const int total = spec.n_train_tasks + spec.n_heldout_tasks;
  for (int i = 0; i < total; ++i) {
    const bool heldout = i >= spec.n_train_tasks;
    const std::string split = heldout ? "heldout" : "train";
    Rng task_rng(mix64(spec.seed, kTagTask, static_cast<std::uint64_t>(i)));
    SuiteTask st;
    st.task = sample_task(spec, split, task_rng);
    st.task.id = i;
    Rng ft_rng(mix64(spec.seed, kTagFt, static_cast<std::uint64_t>(i)));
    st.data.ft = gen_ft_data(st.task, spec.n_ft, ft_rng);
    Rng pt_rng(mix64(spec.seed, kTagPrefTrain, static_cast<std::uint64_t>(i)));
    st.data.pref_train = gen_pref_data(st.task, spec.n_pref, pt_rng);
    Rng pe_rng(mix64(spec.seed, kTagPrefEval, static_cast<std::uint64_t>(i)));
    st.data.pref_eval = gen_pref_data(st.task, spec.n_pref, pe_rng);
    suite.push_back(std::move(st));
  }
  return suite;
}

}  // namespace metapref
