// Acceptance suite: one check per release criterion, each printed as a
// PASS/FAIL line with its measured detail. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "metapref/oracle.hpp"
#include "metapref/pipeline.hpp"

using namespace metapref;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool passed, const std::string& detail, double secs) {
  std::printf("[%s] %-28s %s (%.1fs)\n", passed ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
              secs);
  std::fflush(stdout);
  if (!passed) ++g_failures;
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

TaskInstance random_tabular(Rng& rng, int n_x, int n_y) {
  std::vector<Vec> ref;
  Vec dx(n_x);
  for (int x = 0; x < n_x; ++x) {
    Vec row(n_y);
    for (int y = 0; y < n_y; ++y) row[y] = 0.15 + rng.next_double();
    ref.push_back(row / row.sum());
    dx[x] = 0.5 + rng.next_double();
  }
  return make_tabular_task(dx / dx.sum(), ref);
}

// ---- criterion 1: analytical vs finite-difference hypergradient ----
void hypergradient_correctness() {
  Timer timer;
  CheckConfig cfg;  // p, q <= 20, D <= 10, eps = 1e-4, rel 1e-5, cos 1 - 1e-8
  Rng rng(20240601);
  CheckReport rep = check_hypergrad(cfg, 100, rng);
  const double secs = timer.seconds();
  const bool ok = rep.passed && secs <= 60.0;
  report("hypergradient-correctness", ok,
         fmt("100 instances, max rel err %.2e, min cos 1-%.2e", rep.max_rel_err,
             1.0 - rep.min_cos_sim),
         secs);
}

// ---- criterion 2: D = 0 gives an exactly zero hypergradient ----
void zero_step_nullity() {
  Timer timer;
  Rng rng(77);
  bool ok = true;
  for (int i = 0; i < 50; ++i) {
    const int p = 2 + static_cast<int>(rng.next_index(12));
    const int q = 2 + static_cast<int>(rng.next_index(12));
    TaskInstance task = make_random_task(2, 4, p, q, 1.5, rng);
    RewardParams phi{Vec(q), 1.5};
    for (int j = 0; j < q; ++j) phi.phi[j] = rng.next_gaussian();
    Vec theta0(p);
    for (int j = 0; j < p; ++j) theta0[j] = rng.next_gaussian();
    const int x = static_cast<int>(rng.next_index(task.n_prompts()));
    PreferencePair nu{x, 0, 1};
    InnerTrace tr = run_inner_sgd(phi, theta0, task, {}, 0.05, 2.0, 0.0);
    if (prop1_hypergrad(tr, task, nu).vector.norm() != 0.0) ok = false;
    if (fd_hypergrad(phi, theta0, task, {}, nu, 0.05, 2.0, 0.0, 1e-4).norm() != 0.0) ok = false;
  }
  report("zero-step-nullity", ok, "50 instances, analytical and fd both exactly zero",
         timer.seconds());
}

// ---- criterion 3: sampled-SGD path reaches the closed-form oracle ----
void oracle_equivalence() {
  Timer timer;
  Rng rng(31337);
  double worst_adapt_kl = 0.0, worst_cross_kl = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n_x = 3 + static_cast<int>(rng.next_index(2));
    TaskInstance t = random_tabular(rng, n_x, 3);
    const int q = t.reward_dim();
    RewardParams phi{Vec(q), 4.0};
    for (int j = 0; j < q; ++j) phi.phi[j] = 0.5 * rng.next_gaussian();
    const double beta = 1.5 + rng.next_double();

    // meta_test vs the Eq.-8 table
    Rng drng(rng.next_u64());
    auto ft = gen_ft_data(t, 150000, drng);
    AdaptOptions adapt;
    adapt.beta = beta;
    adapt.alpha = 0.5;
    adapt.lr_decay = 2e-3;
    adapt.stop.max_steps = 120000;
    adapt.stop.grad_norm_tol = 0.0;
    adapt.sft.steps = 2000;
    adapt.sft.lr = 0.5;
    Rng arng(rng.next_u64());
    PolicyParams adapted = meta_test(phi, t, ft, adapt, arng);
    ConditionalPolicyTable star = optimal_policy(t, phi, beta);
    worst_adapt_kl = std::max(worst_adapt_kl, expected_kl_to_policy(star, adapted, t));

    // closed form vs independent brute-force minimizer
    PolicyParams closed = tabular_inner_minimizer(t, phi, beta);
    BruteForceResult bf = brute_force_inner_min(t, phi, beta, 30000);
    worst_cross_kl = std::max(
        worst_cross_kl,
        expected_kl_between(policy_table(closed, t), policy_table(bf.params, t), t));
  }
  const double secs = timer.seconds();
  const bool ok = worst_adapt_kl <= 1e-3 && worst_cross_kl <= 1e-8 && secs <= 120.0;
  report("oracle-equivalence", ok,
         fmt("20 tabular tasks, max KL(pi*||adapted) %.2e <= 1e-3, "
             "max cross-oracle KL %.2e <= 1e-8",
             worst_adapt_kl, worst_cross_kl),
         secs);
}

// ---- criterion 4: Eq.-8 policy beats 1000 random perturbations ----
void closed_form_optimality() {
  Timer timer;
  Rng rng(424242);
  bool ok = true;
  for (int i = 0; i < 20; ++i) {
    TaskInstance t = random_tabular(rng, 2 + static_cast<int>(rng.next_index(2)), 3);
    RewardParams phi{Vec(t.reward_dim()), 3.0};
    for (int j = 0; j < t.reward_dim(); ++j) phi.phi[j] = rng.next_gaussian();
    const double beta = 0.5 + 2.5 * rng.next_double();
    ConditionalPolicyTable star = optimal_policy(t, phi, beta);
    const double at_star = rlhf_objective_of_table(star, phi, t, beta);
    for (int k = 0; k < 1000; ++k) {
      ConditionalPolicyTable pert = star;
      for (Vec& row : pert.rows) {
        for (Eigen::Index j = 0; j < row.size(); ++j) {
          row[j] = std::max(1e-12, row[j] + 0.08 * rng.next_gaussian());
        }
        row /= row.sum();
      }
      if (rlhf_objective_of_table(pert, phi, t, beta) > at_star) {
        ok = false;
      }
    }
  }
  report("closed-form-optimality", ok, "20 instances x 1000 perturbed policies", timer.seconds());
}

// ---- criterion 5: normalization identities at stated precisions ----
void normalizations() {
  Timer timer;
  Rng rng(5150);
  double worst_softmax = 0.0, worst_star = 0.0, worst_bt = 0.0, worst_logistic = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int p = 2 + static_cast<int>(rng.next_index(10));
    TaskInstance t = make_random_task(2, 5, p, 4, 2.0, rng);
    PolicyParams theta{Vec(p)};
    for (int j = 0; j < p; ++j) theta.theta[j] = 3.0 * rng.next_gaussian();
    RewardParams phi{Vec(4), 2.0};
    for (int j = 0; j < 4; ++j) phi.phi[j] = rng.next_gaussian();
    const double beta = 0.4 + 3.0 * rng.next_double();
    ConditionalPolicyTable star = optimal_policy(t, phi, beta);
    for (int x = 0; x < t.n_prompts(); ++x) {
      Vec probs = policy_logprobs(theta, t, x).array().exp().matrix();
      worst_softmax = std::max(worst_softmax, std::abs(probs.sum() - 1.0));
      worst_star = std::max(worst_star, std::abs(star.rows[x].sum() - 1.0));
      if (t.n_candidates(x) >= 2) {
        worst_bt = std::max(worst_bt, std::abs(bt_prob(theta, t, x, 0, 1) +
                                               bt_prob(theta, t, x, 1, 0) - 1.0));
      }
    }
    const double u = 60.0 * rng.next_double() - 30.0;
    worst_logistic = std::max(worst_logistic, std::abs(logistic(u) + logistic(-u) - 1.0));
  }
  const bool ok = worst_softmax <= 1e-12 && worst_star <= 1e-12 && worst_bt <= 1e-15 &&
                  worst_logistic <= 1e-15;
  report("normalizations", ok,
         fmt("softmax %.1e, pi* %.1e (<=1e-12); bt %.1e, logistic %.1e (<=1e-15)",
             worst_softmax, worst_star, worst_bt, worst_logistic),
         timer.seconds());
}

// ---- criterion 6: generated labels follow the Bradley-Terry law ----
void bt_data_fidelity() {
  Timer timer;
  bool ok = true;
  std::string detail;
  // probe 1: single prompt, two candidates -> every draw hits the one pair
  {
    Vec row(2);
    row << 0.5, 0.5;
    RewardParams truth{Vec::Zero(2), 3.0};
    truth.phi[0] = 0.45;
    TaskInstance t = make_tabular_task(Vec::Constant(1, 1.0), {row}, truth);
    const double margin = reward_value(truth, t, 0, 0) - reward_value(truth, t, 0, 1);
    Rng rng(90210);
    auto prefs = gen_pref_data(t, 100000, rng);
    int wins = 0;
    for (const auto& nu : prefs) {
      if (nu.preferred == 0) ++wins;
    }
    const double rate = wins / 1e5;
    const double expect = logistic(margin);
    const double se = std::sqrt(expect * (1.0 - expect) / 1e5);
    if (std::abs(rate - expect) > 3.0 * se) ok = false;
    detail += fmt("pair1 |%.4f-%.4f|<=%.4f", rate, expect, 3.0 * se);
  }
  // probe 2: two prompts; each accrues >= 1e5 draws
  {
    Vec row(2);
    row << 0.5, 0.5;
    RewardParams truth{Vec::Zero(4), 3.0};
    truth.phi[0] = -0.3;
    truth.phi[2] = 0.8;
    Vec dx(2);
    dx << 0.5, 0.5;
    TaskInstance t = make_tabular_task(dx, {row, row}, truth);
    Rng rng(90211);
    auto prefs = gen_pref_data(t, 250000, rng);
    for (int x = 0; x < 2; ++x) {
      int wins = 0, total = 0;
      for (const auto& nu : prefs) {
        if (nu.prompt != x) continue;
        ++total;
        if (nu.preferred == 0) ++wins;
      }
      const double margin = reward_value(truth, t, x, 0) - reward_value(truth, t, x, 1);
      const double expect = logistic(margin);
      const double se = std::sqrt(expect * (1.0 - expect) / total);
      if (total < 100000 || std::abs(wins / static_cast<double>(total) - expect) > 3.0 * se) {
        ok = false;
      }
      detail += fmt("; pair%d n=%d", x + 2, total);
    }
  }
  report("bt-data-fidelity", ok, detail, timer.seconds());
}

// ---- criterion 7: held-out ordering of methods on the default suite ----
void ood_trend() {
  Timer timer;
  ExperimentConfig cfg;  // the default suite: 8/4 tasks, delta = 1
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) cfg.seeds.push_back(s);
  cfg.methods = {"sft", "mtrm", "hpl", "ours"};

  const fs::path dir = fs::temp_directory_path() / "metapref_accept_ood";
  fs::remove_all(dir);
  bool ok = true;
  std::string detail;
  try {
    cmd_gen(cfg, dir.string());
    cmd_train(cfg, dir.string());
    cmd_adapt(cfg, dir.string());
    cmd_eval(cfg, dir.string());
    std::ifstream is(results_path(dir.string()));
    auto rows = read_results(is, "results.csv");
    // mean over held-out tasks per (method, seed)
    std::map<std::string, std::map<std::uint64_t, std::pair<double, int>>> acc;
    for (const EvalRow& r : rows) {
      if (r.split != "heldout" || r.metric != "pl_accuracy") continue;
      auto& slot = acc[r.method][r.seed];
      slot.first += r.value;
      slot.second += 1;
    }
    std::map<std::string, double> mean;
    int wins = 0;
    for (std::uint64_t s : cfg.seeds) {
      const double ours = acc["ours"][s].first / acc["ours"][s].second;
      const double mtrm = acc["mtrm"][s].first / acc["mtrm"][s].second;
      if (ours >= mtrm) ++wins;
    }
    for (const auto& [m, per_seed] : acc) {
      double total = 0.0;
      for (const auto& [s, slot] : per_seed) total += slot.first / slot.second;
      mean[m] = total / static_cast<double>(per_seed.size());
    }
    const double secs = timer.seconds();
    ok = mean["ours"] >= mean["sft"] + 0.05 && mean["ours"] >= mean["hpl"] && wins >= 7 &&
         secs <= 600.0;
    detail = fmt("ours %.4f, sft %.4f (gap %+.4f >= 0.05), hpl %.4f, mtrm wins %d/10",
                 mean["ours"], mean["sft"], mean["ours"] - mean["sft"], mean["hpl"], wins);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("pipeline error: ") + e.what();
  }
  fs::remove_all(dir);
  report("ood-trend", ok, detail, timer.seconds());
}

// ---- criterion 8: running mean of squared hypergradient norms falls in K ----
void theorem1_k_trend() {
  Timer timer;
  ExperimentConfig cfg;
  cfg.train.ridge = 1e-3;  // the trend experiment enables the ridge term
  auto suite = generate_suite(cfg.synth);
  std::vector<SuiteTask> train;
  for (auto& st : suite) {
    if (st.task.split == "train") train.push_back(st);
  }
  std::vector<double> at200, at2000;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    MetaTrainRun run = meta_train(train, cfg.train_options(seed));
    auto trace = grad_norm_trace(run.hg_norms, 200);
    at200.push_back(trace.front());
    at2000.push_back(trace[9]);
  }
  std::sort(at200.begin(), at200.end());
  std::sort(at2000.begin(), at2000.end());
  const bool ok = at2000[2] < at200[2];
  report("theorem1-k-trend", ok,
         fmt("median trace K=200: %.3e, K=2000: %.3e (5 seeds, ridge 1e-3)", at200[2],
             at2000[2]),
         timer.seconds());
}

// ---- criterion 9: larger beta gives no worse final held-out accuracy ----
void beta_trend() {
  Timer timer;
  ExperimentConfig cfg;
  cfg.methods = {"ours"};
  cfg.seeds = {1, 2, 3, 4, 5};
  const fs::path dir = fs::temp_directory_path() / "metapref_accept_beta";
  fs::remove_all(dir);
  bool ok = true;
  std::string detail;
  try {
    cmd_gen(cfg, dir.string());
    std::vector<double> values = {0.5, 2.0, 8.0};
    cmd_sweep(cfg, dir.string(), "beta", values);
    std::ifstream is(dir.string() + "/sweep_beta.csv");
    if (!is) throw std::runtime_error("missing sweep_beta.csv");
    std::map<double, std::vector<double>> accs;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("axis,", 0) == 0) continue;
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() != 5 || cells[3] != "heldout_pl_accuracy/ours") continue;
      accs[std::stod(cells[1])].push_back(std::stod(cells[4]));
    }
    std::vector<double> medians;
    for (double v : values) {
      auto& a = accs[v];
      if (a.size() != cfg.seeds.size()) throw std::runtime_error("sweep rows missing");
      std::sort(a.begin(), a.end());
      medians.push_back(a[a.size() / 2]);
    }
    ok = medians[0] <= medians[1] && medians[1] <= medians[2];
    detail = fmt("median acc: beta 0.5 -> %.4f, 2 -> %.4f, 8 -> %.4f", medians[0], medians[1],
                 medians[2]);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("pipeline error: ") + e.what();
  }
  fs::remove_all(dir);
  report("beta-trend", ok, detail, timer.seconds());
}

// ---- criterion 10: the whole pipeline is byte-deterministic ----
void determinism(const std::string& cli) {
  Timer timer;
  bool ok = true;
  std::string detail;
  const fs::path base = fs::temp_directory_path() / "metapref_accept_det";
  fs::remove_all(base);
  fs::create_directories(base);
  try {
    if (cli.empty()) throw std::runtime_error("no --cli path given");
    // a small but structurally complete experiment
    nlohmann::json j;
    j["synth"] = {{"n_x", 8},  {"n_y", 3},         {"d_x", 4},          {"d_y", 4},
                  {"p", 5},    {"q", 5},           {"n_train_tasks", 2}, {"n_heldout_tasks", 1},
                  {"n_ft", 120}, {"n_pref", 60},   {"seed", 7}};
    j["hp"] = {{"outer_steps", 30}, {"inner_steps", 8}};
    j["train"] = {{"phi_stride", 10}, {"sft_steps", 150}, {"mtrm_steps", 150},
                  {"mtrm_val_stride", 50}, {"hpl_steps", 150}};
    j["adapt"] = {{"max_steps", 300}, {"patience", 100}};
    j["seeds"] = {3, 4};
    const std::string cfg_path = (base / "cfg.json").string();
    std::ofstream(cfg_path) << j.dump(2);

    const auto run_pipeline = [&](const std::string& out) {
      for (const char* stage : {"gen", "train", "adapt", "eval"}) {
        const std::string cmd = cli + " " + stage + " --config " + cfg_path + " --out " + out +
                                " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
          throw std::runtime_error(std::string("stage failed: ") + stage);
        }
      }
    };
    const std::string dir_a = (base / "a").string();
    const std::string dir_b = (base / "b").string();
    run_pipeline(dir_a);
    run_pipeline(dir_b);

    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const fs::path rel = fs::relative(entry.path(), dir_a);
      std::ifstream fa(entry.path(), std::ios::binary);
      std::ifstream fb(dir_b / rel, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (!fb || sa.str() != sb.str()) {
        ok = false;
        detail = "mismatch in " + rel.string();
        break;
      }
    }
    if (ok) detail = fmt("%d files byte-identical across two full pipeline runs", files);
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  fs::remove_all(base);
  report("determinism", ok, detail, timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }
  hypergradient_correctness();
  zero_step_nullity();
  oracle_equivalence();
  closed_form_optimality();
  normalizations();
  bt_data_fidelity();
  ood_trend();
  theorem1_k_trend();
  beta_trend();
  determinism(cli);
  std::printf("%d of 10 criteria failed\n", g_failures);
  return g_failures;
}
