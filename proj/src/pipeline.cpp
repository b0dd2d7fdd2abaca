#include "metapref/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <sstream>

namespace metapref {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagMtrm = tag64("pipeline.mtrm");
constexpr std::uint64_t kTagHpl = tag64("pipeline.hpl");
constexpr std::uint64_t kTagHplSft = tag64("pipeline.hpl_sft");
constexpr std::uint64_t kTagAdapt = tag64("pipeline.adapt");

std::string pad3(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path, std::ios::binary);  // fixed newline bytes everywhere
  if (!os) throw std::runtime_error("cannot write file: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("missing upstream artifact: " + path +
                             " (run the earlier pipeline stages first)");
  }
  return is;
}

/// Pooled SFT over several tasks' fine-tuning data (each sample's gradient is
/// computed against its own task); initialization for the pooled baselines.
PolicyParams pooled_sft(std::span<const SuiteTask> tasks, const SftOptions& opts, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> index;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t j = 0; j < tasks[i].data.ft.size(); ++j) index.emplace_back(i, j);
  }
  if (index.empty()) throw std::invalid_argument("pooled_sft: no fine-tuning data");
  PolicyParams theta{Vec::Zero(tasks[0].task.policy_dim())};
  for (int t = 0; t < opts.steps; ++t) {
    const auto& [ti, zj] = index[rng.next_index(index.size())];
    const Example& z = tasks[ti].data.ft[zj];
    theta.theta += opts.lr * policy_grad(theta, tasks[ti].task, z.prompt, z.response);
  }
  return theta;
}

std::vector<SuiteTask> filter_split(std::span<const SuiteTask> suite, const std::string& split) {
  std::vector<SuiteTask> out;
  for (const SuiteTask& st : suite) {
    if (st.task.split == split) out.push_back(st);
  }
  return out;
}

bool has_method(const ExperimentConfig& cfg, const std::string& m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

template <typename Fn>
void for_each_seed_parallel(std::span<const std::uint64_t> seeds, Fn&& fn) {
  std::vector<std::future<void>> futs;
  futs.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    futs.push_back(std::async(std::launch::async, fn, s));
  }
  for (auto& f : futs) f.get();
}

}  // namespace

std::string task_path(const std::string& out_dir, int task_id) {
  return out_dir + "/tasks/task_" + pad3(task_id) + ".txt";
}
std::string data_path(const std::string& out_dir, int task_id) {
  return out_dir + "/data/data_" + pad3(task_id) + ".txt";
}
std::string run_path(const std::string& out_dir, std::uint64_t seed) {
  return out_dir + "/runs/metatrain_s" + std::to_string(seed) + ".txt";
}
std::string rm_path(const std::string& out_dir, const std::string& method, std::uint64_t seed) {
  return out_dir + "/models/rm_" + method + "_s" + std::to_string(seed) + ".txt";
}
std::string hpl_policy_path(const std::string& out_dir, std::uint64_t seed) {
  return out_dir + "/models/hpl_s" + std::to_string(seed) + ".txt";
}
std::string policy_path(const std::string& out_dir, const std::string& method, int task_id,
                        std::uint64_t seed) {
  return out_dir + "/policies/" + method + "_t" + pad3(task_id) + "_s" + std::to_string(seed) +
         ".txt";
}
std::string results_path(const std::string& out_dir) { return out_dir + "/results.csv"; }

void cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const std::string echo = config_echo(cfg);
  std::vector<SuiteTask> suite = generate_suite(cfg.synth);
  for (const SuiteTask& st : suite) {
    auto os = open_out(task_path(out_dir, st.task.id));
    write_task(os, st.task, echo);
    auto od = open_out(data_path(out_dir, st.task.id));
    write_task_data(od, st.task.id, st.data, echo);
  }
}

std::vector<SuiteTask> load_suite(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::vector<SuiteTask> suite;
  const int total = cfg.synth.n_train_tasks + cfg.synth.n_heldout_tasks;
  suite.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    SuiteTask st;
    {
      const std::string path = task_path(out_dir, i);
      auto is = open_in(path);
      st.task = read_task(is, path);
    }
    {
      const std::string path = data_path(out_dir, i);
      auto is = open_in(path);
      int id = -1;
      st.data = read_task_data(is, path, &id);
      if (id != st.task.id) {
        throw std::runtime_error(path + ": dataset belongs to task " + std::to_string(id));
      }
    }
    suite.push_back(std::move(st));
  }
  return suite;
}

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const std::string echo = config_echo(cfg);
  const std::vector<SuiteTask> suite = load_suite(cfg, out_dir);
  const std::vector<SuiteTask> train = filter_split(suite, "train");
  if (train.empty()) throw std::runtime_error("cmd_train: no train-split tasks in " + out_dir);

  for_each_seed_parallel(cfg.seeds, [&](std::uint64_t seed) {
    if (has_method(cfg, "ours")) {
      MetaTrainRun run = meta_train(train, cfg.train_options(seed));
      {
        auto os = open_out(run_path(out_dir, seed));
        write_run(os, run, echo);
      }
      RewardParams phi_star = select_rm(run, train, cfg.adapt_options(), seed);
      auto os = open_out(rm_path(out_dir, "ours", seed));
      write_reward_params(os, phi_star, echo, seed);
    }
    if (has_method(cfg, "mtrm")) {
      Rng rng(mix64(seed, kTagMtrm));
      PoolOptions po{cfg.train.mtrm_steps, cfg.train.mtrm_lr, false, cfg.train.mtrm_val_stride};
      RewardParams phi = train_pooled_rm(train, cfg.train.r_max, po, rng);
      auto os = open_out(rm_path(out_dir, "mtrm", seed));
      write_reward_params(os, phi, echo, seed);
    }
    if (has_method(cfg, "hpl")) {
      Rng sft_rng(mix64(seed, kTagHplSft));
      SftOptions so{cfg.train.sft_steps, cfg.train.sft_lr, false};
      PolicyParams theta0 = pooled_sft(train, so, sft_rng);
      Rng rng(mix64(seed, kTagHpl));
      PoolOptions po{cfg.train.hpl_steps, cfg.train.hpl_lr, false};
      PolicyParams theta = baseline_hpl(train, theta0, po, rng);
      auto os = open_out(hpl_policy_path(out_dir, seed));
      write_policy_params(os, theta, echo, seed);
    }
  });
}

void cmd_adapt(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const std::string echo = config_echo(cfg);
  const std::vector<SuiteTask> suite = load_suite(cfg, out_dir);
  const AdaptOptions adapt = cfg.adapt_options();

  for_each_seed_parallel(cfg.seeds, [&](std::uint64_t seed) {
    std::map<std::string, RewardParams> rms;
    for (const std::string& m : cfg.methods) {
      if (m == "ours" || m == "mtrm") {
        const std::string path = rm_path(out_dir, m, seed);
        auto is = open_in(path);
        rms[m] = read_reward_params(is, path);
      }
    }
    std::optional<PolicyParams> hpl;
    if (has_method(cfg, "hpl")) {
      const std::string path = hpl_policy_path(out_dir, seed);
      auto is = open_in(path);
      hpl = read_policy_params(is, path);
    }

    for (const SuiteTask& st : suite) {
      for (const std::string& m : cfg.methods) {
        PolicyParams theta;
        Rng rng(mix64(seed, kTagAdapt, tag64(m.c_str()), static_cast<std::uint64_t>(st.task.id)));
        if (m == "sft") {
          theta = sft_fit(st.task, st.data.ft, adapt.sft, rng);
        } else if (m == "hpl") {
          theta = *hpl;  // one pooled policy, evaluated per task
        } else {
          theta = meta_test(rms.at(m), st.task, st.data.ft, adapt, rng);
        }
        auto os = open_out(policy_path(out_dir, m, st.task.id, seed));
        write_policy_params(os, theta, echo, seed);
      }
    }
  });
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const std::string echo = config_echo(cfg);
  const std::vector<SuiteTask> suite = load_suite(cfg, out_dir);

  std::vector<EvalRow> rows;
  for (std::uint64_t seed : cfg.seeds) {
    for (const std::string& m : cfg.methods) {
      for (const SuiteTask& st : suite) {
        const std::string path = policy_path(out_dir, m, st.task.id, seed);
        auto is = open_in(path);
        PolicyParams theta = read_policy_params(is, path);
        EvalRow base;
        base.method = m;
        base.seed = seed;
        base.task_id = st.task.id;
        base.split = st.task.split;
        base.metric = "pl_accuracy";
        base.value = pl_accuracy(theta, st.task, st.data.pref_eval);
        rows.push_back(base);
        base.metric = "true_reward";
        base.value = true_reward_eval(theta, st.task);
        rows.push_back(base);
      }
    }
  }
  auto os = open_out(results_path(out_dir));
  write_results(os, rows, echo);
}

void cmd_report(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out) {
  cfg.validate();
  const std::string path = results_path(out_dir);
  auto is = open_in(path);
  std::vector<EvalRow> rows = read_results(is, path);

  // (method, split, metric) -> per-seed task means.
  std::map<std::tuple<std::string, std::string, std::string>, std::map<std::uint64_t, std::pair<double, int>>>
      acc;
  for (const EvalRow& row : rows) {
    auto& slot = acc[{row.method, row.split, row.metric}][row.seed];
    slot.first += row.value;
    slot.second += 1;
  }

  auto os = open_out(out_dir + "/report.csv");
  os << "# metapref report v1\n";
  os << "# config: " << config_echo(cfg) << "\n";
  os << "method,split,metric,mean,median,n_seeds\n";
  out << "method      split    metric        mean      median    n\n";
  for (const auto& [key, per_seed] : acc) {
    const auto& [method, split, metric] = key;
    std::vector<double> means;
    means.reserve(per_seed.size());
    for (const auto& [seed, sum_count] : per_seed) {
      means.push_back(sum_count.first / sum_count.second);
    }
    std::sort(means.begin(), means.end());
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) /
                        static_cast<double>(means.size());
    const std::size_t n = means.size();
    const double median = n % 2 == 1 ? means[n / 2] : 0.5 * (means[n / 2 - 1] + means[n / 2]);
    os << method << ',' << split << ',' << metric << ',' << fmt_double(mean) << ','
       << fmt_double(median) << ',' << n << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-11s %-8s %-13s %-9.4f %-9.4f %zu\n", method.c_str(),
                  split.c_str(), metric.c_str(), mean, median, n);
    out << line;
  }
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::string& axis, std::span<const double> values) {
  cfg.validate();
  if (values.empty()) throw std::invalid_argument("sweep: need at least one axis value");
  if (axis != "beta" && axis != "D" && axis != "K") {
    throw std::invalid_argument("sweep: axis must be one of beta | D | K");
  }

  std::vector<SweepRow> table;
  for (double v : values) {
    ExperimentConfig sub = cfg;
    if (axis == "beta") {
      sub.hp.beta = v;
    } else if (axis == "D") {
      sub.hp.inner_steps = static_cast<int>(v);
    } else {
      sub.hp.outer_steps = static_cast<int>(v);
    }
    sub.validate();
    const std::string sub_dir = out_dir + "/sweep/" + axis + "_" + fmt_double(v);

    // Stage the shared data into the per-value pipeline directory.
    fs::create_directories(sub_dir);
    fs::copy(out_dir + "/tasks", sub_dir + "/tasks", fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    fs::copy(out_dir + "/data", sub_dir + "/data", fs::copy_options::overwrite_existing | fs::copy_options::recursive);

    cmd_train(sub, sub_dir);
    cmd_adapt(sub, sub_dir);
    cmd_eval(sub, sub_dir);

    const std::string rpath = results_path(sub_dir);
    auto is = open_in(rpath);
    std::vector<EvalRow> rows = read_results(is, rpath);
    // per (seed, method, split, metric): mean over tasks
    std::map<std::tuple<std::uint64_t, std::string, std::string, std::string>, std::pair<double, int>>
        agg;
    for (const EvalRow& row : rows) {
      auto& slot = agg[{row.seed, row.method, row.split, row.metric}];
      slot.first += row.value;
      slot.second += 1;
    }
    for (const auto& [key, sum_count] : agg) {
      const auto& [seed, method, split, metric] = key;
      SweepRow sr;
      sr.axis = axis;
      sr.axis_value = v;
      sr.seed = seed;
      sr.metric = split + "_" + metric + "/" + method;
      sr.value = sum_count.first / sum_count.second;
      table.push_back(std::move(sr));
    }
  }

  auto os = open_out(out_dir + "/sweep_" + axis + ".csv");
  os << "# metapref sweep v1\n";
  os << "# config: " << config_echo(cfg) << "\n";
  os << "axis,value,seed,metric,metric_value\n";
  for (const SweepRow& sr : table) {
    os << sr.axis << ',' << fmt_double(sr.axis_value) << ',' << sr.seed << ',' << sr.metric << ','
       << fmt_double(sr.value) << "\n";
  }
}

}  // namespace metapref
