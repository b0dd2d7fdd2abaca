#pragma once

#include "metapref/io.hpp"

namespace metapref {

/// Batch experiment stages. Every stage is a pure function of the config,
/// the seed list and its upstream files: rerunning a stage rewrites its
/// outputs byte-identically, and deleting downstream outputs then rerunning
/// only downstream stages reproduces them.
///
/// Layout under the output directory:
///   tasks/task_###.txt            gen
///   data/data_###.txt             gen
///   runs/metatrain_s<seed>.txt    train (ours)
///   models/rm_ours_s<seed>.txt    train (ours, after model selection)
///   models/rm_mtrm_s<seed>.txt    train (mtrm)
///   models/hpl_s<seed>.txt        train (hpl, pooled policy)
///   policies/<method>_t###_s<seed>.txt   adapt
///   results.csv                   eval
///   report.csv                    report
///   sweep_<axis>.csv              sweep

void cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_adapt(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_report(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& os);

/// Runs train+adapt+eval per axis value (beta | D | K) against the shared
/// generated data, then writes the long-format sweep table.
void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::string& axis, std::span<const double> values);

/// Loads the generated suite back from disk (tasks + datasets).
std::vector<SuiteTask> load_suite(const ExperimentConfig& cfg, const std::string& out_dir);

/// Aggregated sweep entry: one row per (axis value, seed, metric).
struct SweepRow {
  std::string axis;
  double axis_value = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

std::string task_path(const std::string& out_dir, int task_id);
std::string data_path(const std::string& out_dir, int task_id);
std::string run_path(const std::string& out_dir, std::uint64_t seed);
std::string rm_path(const std::string& out_dir, const std::string& method, std::uint64_t seed);
std::string hpl_policy_path(const std::string& out_dir, std::uint64_t seed);
std::string policy_path(const std::string& out_dir, const std::string& method, int task_id,
                        std::uint64_t seed);
std::string results_path(const std::string& out_dir);

}  // namespace metapref
