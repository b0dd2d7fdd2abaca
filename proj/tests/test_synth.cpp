#include <doctest.h>

#include <cmath>

#include "metapref/models.hpp"
#include "metapref/meta.hpp"
#include "metapref/synth.hpp"

using namespace metapref;

namespace {

MetaDistributionSpec tiny_spec() {
  MetaDistributionSpec s;
  s.n_x = 4;
  s.n_y = 3;
  s.d_x = 3;
  s.d_y = 3;
  s.p = 4;
  s.q = 4;
  s.n_train_tasks = 2;
  s.n_heldout_tasks = 1;
  s.n_ft = 50;
  s.n_pref = 30;
  s.seed = 77;
  return s;
}

}  // namespace

TEST_CASE("sample_task: identical spec, split and rng state give identical tasks") {
  MetaDistributionSpec spec = tiny_spec();
  Rng a(5), b(5);
  TaskInstance t1 = sample_task(spec, "train", a);
  TaskInstance t2 = sample_task(spec, "train", b);
  CHECK(t1.true_reward->phi == t2.true_reward->phi);
  for (int x = 0; x < t1.n_prompts(); ++x) {
    CHECK(t1.policy_features[x] == t2.policy_features[x]);
    CHECK(t1.reward_features[x] == t2.reward_features[x]);
    CHECK(t1.ref_cond[x] == t2.ref_cond[x]);
  }
  CHECK(t1.prompt_dist == t2.prompt_dist);
}

TEST_CASE("sample_task: delta = 0 makes train and heldout draws identical in law") {
  MetaDistributionSpec spec = tiny_spec();
  spec.delta = 0.0;
  Rng a(9), b(9);
  TaskInstance tr = sample_task(spec, "train", a);
  TaskInstance ho = sample_task(spec, "heldout", b);
  CHECK(tr.true_reward->phi == ho.true_reward->phi);
  CHECK(tr.ref_cond[0] == ho.ref_cond[0]);
  CHECK(tr.split != ho.split);
}

TEST_CASE("sample_task: empirical mean of true weights matches the prior mean") {
  MetaDistributionSpec spec = tiny_spec();
  spec.n_x = 2;  // keep generation fast
  Vec mean = Vec::Zero(spec.q);
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    Rng rng(mix64(1234, i));
    mean += sample_task(spec, "train", rng).true_reward->phi;
  }
  mean /= static_cast<double>(n);
  const Vec expect = spec.w_bar();
  // three standard errors of the mean, per coordinate
  const double se = spec.w_scale / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < spec.q; ++j) {
    CHECK(std::abs(mean[j] - expect[j]) <= 3.0 * se);
  }
}

TEST_CASE("sample_task: heldout prior mean is shifted by delta elementwise") {
  MetaDistributionSpec spec = tiny_spec();
  spec.n_x = 2;
  spec.delta = 1.5;
  Vec mean = Vec::Zero(spec.q);
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    Rng rng(mix64(99, i));
    mean += sample_task(spec, "heldout", rng).true_reward->phi;
  }
  mean /= static_cast<double>(n);
  const Vec expect = (spec.w_bar().array() + 1.5).matrix();
  const double se = spec.w_scale / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < spec.q; ++j) {
    CHECK(std::abs(mean[j] - expect[j]) <= 3.0 * se);
  }
}

TEST_CASE("gen_ft_data: deterministic reference rows stay on support; n = 1 works") {
  // point-mass D_{y|x}
  Vec row0(2), row1(2);
  row0 << 1.0, 0.0;
  row1 << 0.0, 1.0;
  Vec dx(2);
  dx << 0.5, 0.5;
  RewardParams truth{Vec::Zero(4), 1.0};
  TaskInstance t = make_tabular_task(dx, {row0, row1}, truth);
  Rng rng(3);
  auto data = gen_ft_data(t, 500, rng);
  for (const Example& z : data) {
    CHECK(t.ref_cond[z.prompt][z.response] > 0.0);
  }
  Rng rng2(4);
  auto one = gen_ft_data(t, 1, rng2);
  CHECK(one.size() == 1);
}

TEST_CASE("gen_ft_data: empirical frequencies approach D_{y|x}") {
  MetaDistributionSpec spec = tiny_spec();
  spec.n_x = 2;
  spec.n_y = 3;
  Rng trng(42);
  TaskInstance t = sample_task(spec, "train", trng);
  Rng rng(43);
  const int n = 100000;
  auto data = gen_ft_data(t, n, rng);
  Mat counts = Mat::Zero(t.n_prompts(), 3);
  Vec xcounts = Vec::Zero(t.n_prompts());
  for (const Example& z : data) {
    counts(z.prompt, z.response) += 1.0;
    xcounts[z.prompt] += 1.0;
  }
  for (int x = 0; x < t.n_prompts(); ++x) {
    CHECK(std::abs(xcounts[x] / n - t.prompt_dist[x]) <= 4.0 * std::sqrt(0.25 / n));
    for (int y = 0; y < 3; ++y) {
      const double expect = t.ref_cond[x][y];
      const double got = counts(x, y) / xcounts[x];
      const double se = std::sqrt(expect * (1.0 - expect) / xcounts[x]);
      CHECK(std::abs(got - expect) <= 4.0 * se + 1e-9);
    }
  }
}

TEST_CASE("gen_pref_data: constant true reward flips a fair coin") {
  Vec row(2);
  row << 0.5, 0.5;
  RewardParams truth{Vec::Zero(2), 1.0};  // reward identically zero
  TaskInstance t = make_tabular_task(Vec::Constant(1, 1.0), {row}, truth);
  Rng rng(7);
  const int n = 100000;
  auto prefs = gen_pref_data(t, n, rng);
  int first_wins = 0;
  for (const auto& nu : prefs) {
    if (nu.preferred == 0) ++first_wins;
  }
  const double rate = static_cast<double>(first_wins) / n;
  CHECK(std::abs(rate - 0.5) <= 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("gen_pref_data: empirical preference rate matches the logistic margin") {
  // two candidates with margin m = r*(y0) - r*(y1); 1e5 draws on one prompt
  Vec row(2);
  row << 0.5, 0.5;
  RewardParams truth{Vec::Zero(2), 2.0};
  truth.phi[0] = 0.8;  // gives r0 = 2 tanh(0.8), r1 = 0
  TaskInstance t = make_tabular_task(Vec::Constant(1, 1.0), {row}, truth);
  const double margin = reward_value(truth, t, 0, 0) - reward_value(truth, t, 0, 1);
  Rng rng(11);
  const int n = 100000;
  auto prefs = gen_pref_data(t, n, rng);
  int wins = 0;
  for (const auto& nu : prefs) {
    if (nu.preferred == 0) ++wins;
  }
  const double rate = static_cast<double>(wins) / n;
  const double expect = logistic(margin);
  const double se = std::sqrt(expect * (1.0 - expect) / n);
  CHECK(std::abs(rate - expect) <= 3.0 * se);
}

TEST_CASE("gen_pref_data: negating the true reward complements the rates") {
  Vec row(2);
  row << 0.5, 0.5;
  RewardParams truth{Vec::Zero(2), 2.0};
  truth.phi[0] = 0.8;
  TaskInstance t = make_tabular_task(Vec::Constant(1, 1.0), {row}, truth);
  TaskInstance t_neg = t;
  t_neg.true_reward->phi = -truth.phi;
  const int n = 100000;
  Rng rng1(13), rng2(14);
  auto a = gen_pref_data(t, n, rng1);
  auto b = gen_pref_data(t_neg, n, rng2);
  auto rate = [&](const std::vector<PreferencePair>& prefs) {
    int wins = 0;
    for (const auto& nu : prefs) {
      if (nu.preferred == 0) ++wins;
    }
    return static_cast<double>(wins) / prefs.size();
  };
  CHECK(std::abs(rate(a) + rate(b) - 1.0) <= 4.0 * std::sqrt(0.5 / n));
}

TEST_CASE("gen_pref_data: a prompt with fewer than two candidates is rejected") {
  RewardParams truth{Vec::Zero(1), 1.0};
  TaskInstance t = make_tabular_task(Vec::Constant(1, 1.0), {Vec::Constant(1, 1.0)}, truth);
  Rng rng(1);
  CHECK_THROWS_AS(gen_pref_data(t, 5, rng), std::invalid_argument);
}

TEST_CASE("generate_suite: reproducible from the spec seed; ids and splits line up") {
  MetaDistributionSpec spec = tiny_spec();
  auto a = generate_suite(spec);
  auto b = generate_suite(spec);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].task.id == static_cast<int>(i));
    CHECK(a[i].task.split == (i < 2 ? "train" : "heldout"));
    CHECK(a[i].task.true_reward->phi == b[i].task.true_reward->phi);
    REQUIRE(a[i].data.ft.size() == b[i].data.ft.size());
    for (std::size_t j = 0; j < a[i].data.ft.size(); ++j) {
      CHECK(a[i].data.ft[j].prompt == b[i].data.ft[j].prompt);
      CHECK(a[i].data.ft[j].response == b[i].data.ft[j].response);
    }
  }
}

TEST_CASE("suite solvability: pooled RM reaches heldout accuracy above chance at delta 0") {
  MetaDistributionSpec spec;  // default sizes, shrunk counts for speed
  spec.delta = 0.0;
  spec.n_ft = 200;
  spec.n_pref = 300;
  spec.n_train_tasks = 4;
  spec.n_heldout_tasks = 2;
  spec.seed = 33;
  auto suite = generate_suite(spec);
  std::vector<SuiteTask> train(suite.begin(), suite.begin() + 4);
  Rng rng(3);
  RewardParams phi = train_pooled_rm(train, 8.0, PoolOptions{4000, 0.05, false, 0}, rng);
  // rank heldout evaluation pairs directly by the learned reward
  int correct = 0, total = 0;
  for (std::size_t i = 4; i < suite.size(); ++i) {
    for (const auto& nu : suite[i].data.pref_eval) {
      const double d = reward_value(phi, suite[i].task, nu.prompt, nu.preferred) -
                       reward_value(phi, suite[i].task, nu.prompt, nu.dispreferred);
      if (d > 0.0) ++correct;
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total > 0.55);
}
