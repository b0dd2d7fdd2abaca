#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "metapref/meta.hpp"
#include "metapref/synth.hpp"

namespace metapref {

/// %.17g rendering: round-trips every finite double exactly and is a pure
/// function of the value, so rewritten files are byte-identical.
std::string fmt_double(double v);

/// Full experiment description. Serialized as strict JSON: unknown keys are
/// rejected, omitted keys take the defaults below, and outputs embed the
/// fully-resolved form as their config echo.
struct TrainConfig {
  double ridge = 0.0;
  int phi_stride = 100;
  int outer_batch = 1;
  int sft_steps = 2000;
  double sft_lr = 0.3;
  double r_max = 32.0;  // learned reward-model bound
  int mtrm_steps = 8000;
  double mtrm_lr = 0.05;
  int mtrm_val_stride = 500;  // early-stop the pooled RM on validation pairs
  int hpl_steps = 2000;
  double hpl_lr = 0.1;
};

struct AdaptConfig {
  int max_steps = 10000;
  double grad_norm_tol = 1e-6;
  int patience = 500;
  double lr_decay = 5e-3;
};

struct ExperimentConfig {
  MetaDistributionSpec synth;
  HyperParams hp;  // hp.seed is ignored; the seed list below drives runs
  TrainConfig train;
  AdaptConfig adapt;
  std::vector<std::string> methods = {"sft", "mtrm", "hpl", "ours"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out;  // default output directory; --out overrides

  void validate() const;
  AdaptOptions adapt_options() const;
  MetaTrainOptions train_options(std::uint64_t seed) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

/// Canonical one-line JSON of the fully-resolved config.
std::string config_echo(const ExperimentConfig& cfg);

// ---- artifact files (self-describing versioned text) ----

void write_task(std::ostream& os, const TaskInstance& task, const std::string& echo);
TaskInstance read_task(std::istream& is, const std::string& origin);

void write_task_data(std::ostream& os, int task_id, const TaskData& data, const std::string& echo);
TaskData read_task_data(std::istream& is, const std::string& origin, int* task_id = nullptr);

void write_policy_params(std::ostream& os, const PolicyParams& theta, const std::string& echo,
                         std::uint64_t seed);
PolicyParams read_policy_params(std::istream& is, const std::string& origin);

void write_reward_params(std::ostream& os, const RewardParams& phi, const std::string& echo,
                         std::uint64_t seed);
RewardParams read_reward_params(std::istream& is, const std::string& origin);

void write_run(std::ostream& os, const MetaTrainRun& run, const std::string& echo);
MetaTrainRun read_run(std::istream& is, const std::string& origin);

/// results table: comment header, then CSV with the fixed column order
///   method,seed,task_id,split,metric,value
void write_results(std::ostream& os, std::span<const EvalRow> rows, const std::string& echo);
std::vector<EvalRow> read_results(std::istream& is, const std::string& origin);

}  // namespace metapref
