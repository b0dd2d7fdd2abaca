#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "metapref/pipeline.hpp"

namespace {

using namespace metapref;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config 'out')");
  cmd->add_option("--seed", args.seeds, "seed list (overrides config 'seeds')");
  cmd->add_option("--method", args.methods, "method list (overrides config 'methods')");
}

ExperimentConfig resolve(const CommonArgs& args, std::string* out_dir) {
  ExperimentConfig cfg = load_config_file(args.config_path);
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (!args.methods.empty()) cfg.methods = args.methods;
  cfg.validate();
  *out_dir = !args.out_dir.empty() ? args.out_dir : cfg.out;
  if (out_dir->empty()) {
    throw std::runtime_error("no output directory: pass --out or set 'out' in the config");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "metapref: meta-learned reward models for out-of-distribution preference learning.\n"
      "Pipeline: gen -> train -> adapt -> eval -> report; every stage is a pure\n"
      "function of (config, seeds) and its upstream files.\n\n"
      "results.csv columns: method,seed,task_id,split,metric,value\n"
      "  metric is pl_accuracy (length-normalized preference accuracy on the\n"
      "  task's evaluation pairs) or true_reward (exact expected ground-truth\n"
      "  reward of the policy).\n"
      "sweep_<axis>.csv columns: axis,value,seed,metric,metric_value with\n"
      "  metric = <split>_<metric>/<method> averaged over the split's tasks."};
  app.require_subcommand(1);

  CommonArgs args;
  std::string axis = "beta";
  std::vector<double> values;
  int check_n = 100;
  std::uint64_t check_seed = 7;
  double check_tol = 1e-5;
  double check_cos_tol = 1e-8;
  int check_dim = 20;
  int check_steps = 10;

  auto* gen = app.add_subcommand("gen", "generate tasks and datasets");
  add_common(gen, args);
  auto* train = app.add_subcommand("train", "meta-train / fit pooled baselines per seed");
  add_common(train, args);
  auto* adapt = app.add_subcommand("adapt", "produce per-task policies for every method");
  add_common(adapt, args);
  auto* eval = app.add_subcommand("eval", "score policies into results.csv");
  add_common(eval, args);
  auto* report = app.add_subcommand("report", "aggregate results.csv into report.csv");
  add_common(report, args);

  auto* sweep = app.add_subcommand("sweep", "run the pipeline across one hyperparameter axis");
  add_common(sweep, args);
  sweep->add_option("--axis", axis, "beta | D | K")->required();
  sweep->add_option("--values", values, "axis values")->required();

  auto* checkgrad = app.add_subcommand(
      "checkgrad", "verify the analytical hypergradient against finite differences");
  checkgrad->add_option("--n", check_n, "number of random instances");
  checkgrad->add_option("--seed", check_seed, "rng seed");
  checkgrad->add_option("--tol", check_tol, "relative l2 error tolerance");
  checkgrad->add_option("--cos-tol", check_cos_tol, "1 - cosine similarity tolerance");
  checkgrad->add_option("--max-dim", check_dim, "max parameter dimension");
  checkgrad->add_option("--max-steps", check_steps, "max inner steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::string out_dir;
    if (gen->parsed()) {
      cmd_gen(resolve(args, &out_dir), out_dir);
    } else if (train->parsed()) {
      cmd_train(resolve(args, &out_dir), out_dir);
    } else if (adapt->parsed()) {
      cmd_adapt(resolve(args, &out_dir), out_dir);
    } else if (eval->parsed()) {
      cmd_eval(resolve(args, &out_dir), out_dir);
    } else if (report->parsed()) {
      cmd_report(resolve(args, &out_dir), out_dir, std::cout);
    } else if (sweep->parsed()) {
      cmd_sweep(resolve(args, &out_dir), out_dir, axis, values);
    } else if (checkgrad->parsed()) {
      CheckConfig cc;
      cc.rel_tol = check_tol;
      cc.cos_tol = check_cos_tol;
      cc.max_dim = check_dim;
      cc.max_inner_steps = check_steps;
      Rng rng(check_seed);
      CheckReport rep = check_hypergrad(cc, check_n, rng);
      std::printf("%-6s %-4s %-4s %-3s %-10s %-12s %-14s\n", "inst", "p", "q", "D", "alpha",
                  "rel_err", "cos_sim");
      for (const CheckRow& row : rep.rows) {
        std::printf("%-6d %-4d %-4d %-3d %-10.4f %-12.3e %-14.12f\n", row.instance, row.p, row.q,
                    row.inner_steps, row.alpha, row.rel_err, row.cos_sim);
      }
      for (const CheckRow& row : rep.rows) {
        std::printf("row,%d,%d,%d,%d,%s,%s\n", row.instance, row.p, row.q, row.inner_steps,
                    fmt_double(row.rel_err).c_str(), fmt_double(row.cos_sim).c_str());
      }
      std::printf("max_rel_err %s\nmin_cos_sim %s\n%s\n", fmt_double(rep.max_rel_err).c_str(),
                  fmt_double(rep.min_cos_sim).c_str(), rep.passed ? "PASS" : "FAIL");
      if (!rep.passed) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
