#include "metapref/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace metapref {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
  throw std::runtime_error(origin + ": " + what);
}

void write_header(std::ostream& os, const std::string& kind, const std::string& echo) {
  os << "# metapref " << kind << " v" << kFormatVersion << "\n";
  os << "# config: " << echo << "\n";
}

/// Line/token reader for the artifact text formats.
class Reader {
 public:
  Reader(std::istream& is, std::string origin) : origin_(std::move(origin)) {
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines_.push_back(std::move(line));
    }
  }

  void expect_kind(const std::string& kind) {
    if (lines_.empty()) parse_fail(origin_, "empty file");
    const std::string want = "# metapref " + kind + " v" + std::to_string(kFormatVersion);
    if (lines_[0] != want) parse_fail(origin_, "bad header, expected '" + want + "'");
    pos_ = 1;
    while (pos_ < lines_.size() && lines_[pos_].rfind("# ", 0) == 0) ++pos_;
  }

  bool done() {
    while (pos_ < lines_.size() && lines_[pos_].empty()) ++pos_;
    return pos_ >= lines_.size();
  }

  /// Next non-empty body line as whitespace-separated tokens.
  std::vector<std::string> next() {
    while (pos_ < lines_.size() && lines_[pos_].empty()) ++pos_;
    if (pos_ >= lines_.size()) parse_fail(origin_, "unexpected end of file");
    std::istringstream ss(lines_[pos_++]);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
  std::string origin_;
};

double to_double(const Reader& r, const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    parse_fail(r.origin(), "bad number '" + tok + "'");
  }
  if (used != tok.size()) parse_fail(r.origin(), "bad number '" + tok + "'");
  return v;
}

long long to_int(const Reader& r, const std::string& tok) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    parse_fail(r.origin(), "bad integer '" + tok + "'");
  }
  if (used != tok.size()) parse_fail(r.origin(), "bad integer '" + tok + "'");
  return v;
}

std::vector<std::string> expect(Reader& r, const std::string& keyword, std::size_t min_toks) {
  auto toks = r.next();
  if (toks.empty() || toks[0] != keyword || toks.size() < min_toks) {
    parse_fail(r.origin(), "expected '" + keyword + "' record");
  }
  return toks;
}

void write_vec(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << fmt_double(v[i]);
}

Vec read_vec(const Reader& r, const std::vector<std::string>& toks, std::size_t from, int n) {
  if (toks.size() != from + static_cast<std::size_t>(n)) {
    parse_fail(r.origin(), "wrong vector arity in '" + toks[0] + "' record");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = to_double(r, toks[from + static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

// ---- config ----

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw std::runtime_error("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw std::runtime_error("config: unknown key '" + where + "." + item.key() + "'");
    }
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  synth.validate();
  hp.validate();
  if (methods.empty()) throw std::invalid_argument("config: need at least one method");
  const std::set<std::string> known = {"sft", "mtrm", "hpl", "ours"};
  for (const std::string& m : methods) {
    if (!known.count(m)) throw std::invalid_argument("config: unknown method '" + m + "'");
  }
  if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size()) throw std::invalid_argument("config: seeds must be distinct");
  if (!(train.r_max > 0.0)) throw std::invalid_argument("config: train.r_max must be > 0");
  if (train.phi_stride < 1) throw std::invalid_argument("config: train.phi_stride must be >= 1");
  if (train.outer_batch < 1) throw std::invalid_argument("config: train.outer_batch must be >= 1");
  if (train.sft_steps < 0 || train.mtrm_steps < 0 || train.hpl_steps < 0) {
    throw std::invalid_argument("config: step counts must be >= 0");
  }
  StoppingRule{adapt.max_steps, adapt.grad_norm_tol, adapt.patience}.validate();
  if (adapt.lr_decay < 0.0) throw std::invalid_argument("config: adapt.lr_decay must be >= 0");
}

AdaptOptions ExperimentConfig::adapt_options() const {
  AdaptOptions ao;
  ao.alpha = hp.alpha;
  ao.beta = hp.beta;
  ao.ridge = train.ridge;
  ao.lr_decay = adapt.lr_decay;
  ao.full_batch = false;
  ao.stop = StoppingRule{adapt.max_steps, adapt.grad_norm_tol, adapt.patience};
  ao.sft = SftOptions{train.sft_steps, train.sft_lr, false};
  return ao;
}

MetaTrainOptions ExperimentConfig::train_options(std::uint64_t seed) const {
  MetaTrainOptions mo;
  mo.hp = hp;
  mo.hp.seed = seed;
  mo.r_max = train.r_max;
  mo.ridge = train.ridge;
  mo.phi_stride = train.phi_stride;
  mo.outer_batch = train.outer_batch;
  mo.sft = SftOptions{train.sft_steps, train.sft_lr, false};
  return mo;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  check_keys(j, {"synth", "hp", "train", "adapt", "methods", "seeds", "out"}, "<root>");
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    check_keys(s,
               {"n_x", "n_y", "d_x", "d_y", "p", "q", "w_bar_scale", "w_scale", "delta",
                "feature_noise", "n_train_tasks", "n_heldout_tasks", "n_ft", "n_pref",
                "r_max_true", "ref_temp", "seed"},
               "synth");
    take(s, "n_x", cfg.synth.n_x);
    take(s, "n_y", cfg.synth.n_y);
    take(s, "d_x", cfg.synth.d_x);
    take(s, "d_y", cfg.synth.d_y);
    take(s, "p", cfg.synth.p);
    take(s, "q", cfg.synth.q);
    take(s, "w_bar_scale", cfg.synth.w_bar_scale);
    take(s, "w_scale", cfg.synth.w_scale);
    take(s, "delta", cfg.synth.delta);
    take(s, "feature_noise", cfg.synth.feature_noise);
    take(s, "n_train_tasks", cfg.synth.n_train_tasks);
    take(s, "n_heldout_tasks", cfg.synth.n_heldout_tasks);
    take(s, "n_ft", cfg.synth.n_ft);
    take(s, "n_pref", cfg.synth.n_pref);
    take(s, "r_max_true", cfg.synth.r_max_true);
    take(s, "ref_temp", cfg.synth.ref_temp);
    take(s, "seed", cfg.synth.seed);
  }
  if (j.contains("hp")) {
    const auto& h = j.at("hp");
    check_keys(h, {"alpha", "eta", "beta", "inner_steps", "outer_steps"}, "hp");
    take(h, "alpha", cfg.hp.alpha);
    take(h, "eta", cfg.hp.eta);
    take(h, "beta", cfg.hp.beta);
    take(h, "inner_steps", cfg.hp.inner_steps);
    take(h, "outer_steps", cfg.hp.outer_steps);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t,
               {"ridge", "phi_stride", "outer_batch", "sft_steps", "sft_lr", "r_max",
                "mtrm_steps", "mtrm_lr", "mtrm_val_stride", "hpl_steps", "hpl_lr"},
               "train");
    take(t, "ridge", cfg.train.ridge);
    take(t, "phi_stride", cfg.train.phi_stride);
    take(t, "outer_batch", cfg.train.outer_batch);
    take(t, "sft_steps", cfg.train.sft_steps);
    take(t, "sft_lr", cfg.train.sft_lr);
    take(t, "r_max", cfg.train.r_max);
    take(t, "mtrm_steps", cfg.train.mtrm_steps);
    take(t, "mtrm_lr", cfg.train.mtrm_lr);
    take(t, "mtrm_val_stride", cfg.train.mtrm_val_stride);
    take(t, "hpl_steps", cfg.train.hpl_steps);
    take(t, "hpl_lr", cfg.train.hpl_lr);
  }
  if (j.contains("adapt")) {
    const auto& a = j.at("adapt");
    check_keys(a, {"max_steps", "grad_norm_tol", "patience", "lr_decay"}, "adapt");
    take(a, "max_steps", cfg.adapt.max_steps);
    take(a, "grad_norm_tol", cfg.adapt.grad_norm_tol);
    take(a, "patience", cfg.adapt.patience);
    take(a, "lr_decay", cfg.adapt.lr_decay);
  }
  take(j, "methods", cfg.methods);
  take(j, "seeds", cfg.seeds);
  take(j, "out", cfg.out);
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["synth"] = {{"n_x", cfg.synth.n_x},
                {"n_y", cfg.synth.n_y},
                {"d_x", cfg.synth.d_x},
                {"d_y", cfg.synth.d_y},
                {"p", cfg.synth.p},
                {"q", cfg.synth.q},
                {"w_bar_scale", cfg.synth.w_bar_scale},
                {"w_scale", cfg.synth.w_scale},
                {"delta", cfg.synth.delta},
                {"feature_noise", cfg.synth.feature_noise},
                {"n_train_tasks", cfg.synth.n_train_tasks},
                {"n_heldout_tasks", cfg.synth.n_heldout_tasks},
                {"n_ft", cfg.synth.n_ft},
                {"n_pref", cfg.synth.n_pref},
                {"r_max_true", cfg.synth.r_max_true},
                {"ref_temp", cfg.synth.ref_temp},
                {"seed", cfg.synth.seed}};
  j["hp"] = {{"alpha", cfg.hp.alpha},
             {"eta", cfg.hp.eta},
             {"beta", cfg.hp.beta},
             {"inner_steps", cfg.hp.inner_steps},
             {"outer_steps", cfg.hp.outer_steps}};
  j["train"] = {{"ridge", cfg.train.ridge},
                {"phi_stride", cfg.train.phi_stride},
                {"outer_batch", cfg.train.outer_batch},
                {"sft_steps", cfg.train.sft_steps},
                {"sft_lr", cfg.train.sft_lr},
                {"r_max", cfg.train.r_max},
                {"mtrm_steps", cfg.train.mtrm_steps},
                {"mtrm_lr", cfg.train.mtrm_lr},
                {"mtrm_val_stride", cfg.train.mtrm_val_stride},
                {"hpl_steps", cfg.train.hpl_steps},
                {"hpl_lr", cfg.train.hpl_lr}};
  j["adapt"] = {{"max_steps", cfg.adapt.max_steps},
                {"grad_norm_tol", cfg.adapt.grad_norm_tol},
                {"patience", cfg.adapt.patience},
                {"lr_decay", cfg.adapt.lr_decay}};
  j["methods"] = cfg.methods;
  j["seeds"] = cfg.seeds;
  j["out"] = cfg.out;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_echo(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(); }

// ---- task ----

void write_task(std::ostream& os, const TaskInstance& task, const std::string& echo) {
  write_header(os, "task", echo);
  os << "id " << task.id << "\n";
  os << "split " << task.split << "\n";
  os << "dims " << (task.prompts.empty() ? 0 : task.prompts[0].features.size()) << ' '
     << (task.candidates.empty() || task.candidates[0].empty()
             ? 0
             : task.candidates[0][0].features.size())
     << ' ' << task.policy_dim() << ' ' << task.reward_dim() << ' ' << task.n_prompts() << "\n";
  os << "tabular " << (task.tabular ? 1 : 0) << "\n";
  if (task.true_reward) {
    os << "true_reward " << fmt_double(task.true_reward->r_max);
    write_vec(os, task.true_reward->phi);
    os << "\n";
  }
  os << "dx";
  write_vec(os, task.prompt_dist);
  os << "\n";
  for (int x = 0; x < task.n_prompts(); ++x) {
    os << "prompt " << x;
    write_vec(os, task.prompts[x].features);
    os << "\n";
    os << "cands " << x << ' ' << task.n_candidates(x) << "\n";
    for (int y = 0; y < task.n_candidates(x); ++y) {
      const Response& r = task.candidates[x][y];
      os << "resp " << x << ' ' << y << ' ' << r.length;
      write_vec(os, r.features);
      os << "\n";
      os << "psi " << x << ' ' << y;
      write_vec(os, task.policy_features[x].row(y).transpose());
      os << "\n";
      os << "psir " << x << ' ' << y;
      write_vec(os, task.reward_features[x].row(y).transpose());
      os << "\n";
    }
    os << "dyx " << x;
    write_vec(os, task.ref_cond[x]);
    os << "\n";
  }
}

TaskInstance read_task(std::istream& is, const std::string& origin) {
  Reader r(is, origin);
  r.expect_kind("task");
  TaskInstance task;

  auto toks = expect(r, "id", 2);
  task.id = static_cast<int>(to_int(r, toks[1]));
  toks = expect(r, "split", 2);
  task.split = toks[1];
  toks = expect(r, "dims", 6);
  const int d_x = static_cast<int>(to_int(r, toks[1]));
  const int d_y = static_cast<int>(to_int(r, toks[2]));
  const int p = static_cast<int>(to_int(r, toks[3]));
  const int q = static_cast<int>(to_int(r, toks[4]));
  const int n_x = static_cast<int>(to_int(r, toks[5]));
  toks = expect(r, "tabular", 2);
  task.tabular = to_int(r, toks[1]) != 0;

  toks = r.next();
  if (toks[0] == "true_reward") {
    RewardParams truth;
    truth.r_max = to_double(r, toks[1]);
    truth.phi = read_vec(r, std::vector<std::string>(toks.begin() + 1, toks.end()), 1, q);
    task.true_reward = std::move(truth);
    toks = r.next();
  }
  if (toks[0] != "dx") parse_fail(origin, "expected 'dx' record");
  task.prompt_dist = read_vec(r, toks, 1, n_x);

  for (int x = 0; x < n_x; ++x) {
    toks = expect(r, "prompt", 2);
    if (to_int(r, toks[1]) != x) parse_fail(origin, "prompt records out of order");
    Prompt pr;
    pr.id = x;
    pr.features = read_vec(r, toks, 2, d_x);
    task.prompts.push_back(std::move(pr));

    toks = expect(r, "cands", 3);
    const int ny = static_cast<int>(to_int(r, toks[2]));
    std::vector<Response> cands;
    Mat psi(ny, p), psir(ny, q);
    for (int y = 0; y < ny; ++y) {
      toks = expect(r, "resp", 4);
      Response resp;
      resp.id = y;
      resp.length = static_cast<int>(to_int(r, toks[3]));
      resp.features = read_vec(r, toks, 4, d_y);
      cands.push_back(std::move(resp));
      toks = expect(r, "psi", 3);
      psi.row(y) = read_vec(r, toks, 3, p).transpose();
      toks = expect(r, "psir", 3);
      psir.row(y) = read_vec(r, toks, 3, q).transpose();
    }
    task.candidates.push_back(std::move(cands));
    task.policy_features.push_back(std::move(psi));
    task.reward_features.push_back(std::move(psir));
    toks = expect(r, "dyx", 2);
    task.ref_cond.push_back(read_vec(r, toks, 2, ny));
  }
  try {
    task.validate();
  } catch (const std::exception& e) {
    parse_fail(origin, std::string("task fails validation: ") + e.what());
  }
  return task;
}

// ---- datasets ----

void write_task_data(std::ostream& os, int task_id, const TaskData& data, const std::string& echo) {
  write_header(os, "dataset", echo);
  os << "task " << task_id << "\n";
  os << "counts " << data.ft.size() << ' ' << data.pref_train.size() << ' '
     << data.pref_eval.size() << "\n";
  for (const Example& z : data.ft) os << "ft " << z.prompt << ' ' << z.response << "\n";
  for (const PreferencePair& nu : data.pref_train) {
    os << "preft " << nu.prompt << ' ' << nu.preferred << ' ' << nu.dispreferred << "\n";
  }
  for (const PreferencePair& nu : data.pref_eval) {
    os << "prefe " << nu.prompt << ' ' << nu.preferred << ' ' << nu.dispreferred << "\n";
  }
}

TaskData read_task_data(std::istream& is, const std::string& origin, int* task_id) {
  Reader r(is, origin);
  r.expect_kind("dataset");
  auto toks = expect(r, "task", 2);
  if (task_id) *task_id = static_cast<int>(to_int(r, toks[1]));
  toks = expect(r, "counts", 4);
  const long long n_ft = to_int(r, toks[1]);
  const long long n_pt = to_int(r, toks[2]);
  const long long n_pe = to_int(r, toks[3]);
  TaskData data;
  data.ft.reserve(static_cast<std::size_t>(n_ft));
  data.pref_train.reserve(static_cast<std::size_t>(n_pt));
  data.pref_eval.reserve(static_cast<std::size_t>(n_pe));
  for (long long i = 0; i < n_ft; ++i) {
    toks = expect(r, "ft", 3);
    data.ft.push_back({static_cast<int>(to_int(r, toks[1])), static_cast<int>(to_int(r, toks[2]))});
  }
  for (long long i = 0; i < n_pt; ++i) {
    toks = expect(r, "preft", 4);
    data.pref_train.push_back({static_cast<int>(to_int(r, toks[1])),
                               static_cast<int>(to_int(r, toks[2])),
                               static_cast<int>(to_int(r, toks[3]))});
  }
  for (long long i = 0; i < n_pe; ++i) {
    toks = expect(r, "prefe", 4);
    data.pref_eval.push_back({static_cast<int>(to_int(r, toks[1])),
                              static_cast<int>(to_int(r, toks[2])),
                              static_cast<int>(to_int(r, toks[3]))});
  }
  return data;
}

// ---- parameter files ----

void write_policy_params(std::ostream& os, const PolicyParams& theta, const std::string& echo,
                         std::uint64_t seed) {
  write_header(os, "policy_params", echo);
  os << "# seed: " << seed << "\n";
  os << "theta " << theta.theta.size();
  write_vec(os, theta.theta);
  os << "\n";
}

PolicyParams read_policy_params(std::istream& is, const std::string& origin) {
  Reader r(is, origin);
  r.expect_kind("policy_params");
  auto toks = expect(r, "theta", 2);
  const int n = static_cast<int>(to_int(r, toks[1]));
  PolicyParams theta;
  theta.theta = read_vec(r, toks, 2, n);
  return theta;
}

void write_reward_params(std::ostream& os, const RewardParams& phi, const std::string& echo,
                         std::uint64_t seed) {
  write_header(os, "reward_params", echo);
  os << "# seed: " << seed << "\n";
  os << "r_max " << fmt_double(phi.r_max) << "\n";
  os << "phi " << phi.phi.size();
  write_vec(os, phi.phi);
  os << "\n";
}

RewardParams read_reward_params(std::istream& is, const std::string& origin) {
  Reader r(is, origin);
  r.expect_kind("reward_params");
  auto toks = expect(r, "r_max", 2);
  RewardParams phi;
  phi.r_max = to_double(r, toks[1]);
  toks = expect(r, "phi", 2);
  const int n = static_cast<int>(to_int(r, toks[1]));
  phi.phi = read_vec(r, toks, 2, n);
  return phi;
}

// ---- meta-training run ----

void write_run(std::ostream& os, const MetaTrainRun& run, const std::string& echo) {
  write_header(os, "metatrain_run", echo);
  os << "# seed: " << run.seed << "\n";
  os << "hp " << fmt_double(run.hp.alpha) << ' ' << fmt_double(run.hp.eta) << ' '
     << fmt_double(run.hp.beta) << ' ' << run.hp.inner_steps << ' ' << run.hp.outer_steps << ' '
     << fmt_double(run.ridge) << ' ' << run.outer_batch << ' ' << fmt_double(run.r_max) << ' '
     << run.seed << "\n";
  for (std::size_t k = 0; k < run.task_ids.size(); ++k) {
    os << "iter " << k << ' ' << run.task_ids[k] << ' ' << fmt_double(run.outer_losses[k]) << ' '
       << fmt_double(run.hg_norms[k]) << "\n";
  }
  for (std::size_t i = 0; i < run.checkpoints.size(); ++i) {
    os << "checkpoint " << run.checkpoint_iters[i];
    write_vec(os, run.checkpoints[i]);
    os << "\n";
  }
  os << "final";
  write_vec(os, run.phi_final);
  os << "\n";
}

MetaTrainRun read_run(std::istream& is, const std::string& origin) {
  Reader r(is, origin);
  r.expect_kind("metatrain_run");
  MetaTrainRun run;
  auto toks = expect(r, "hp", 10);
  run.hp.alpha = to_double(r, toks[1]);
  run.hp.eta = to_double(r, toks[2]);
  run.hp.beta = to_double(r, toks[3]);
  run.hp.inner_steps = static_cast<int>(to_int(r, toks[4]));
  run.hp.outer_steps = static_cast<int>(to_int(r, toks[5]));
  run.ridge = to_double(r, toks[6]);
  run.outer_batch = static_cast<int>(to_int(r, toks[7]));
  run.r_max = to_double(r, toks[8]);
  run.seed = static_cast<std::uint64_t>(to_int(r, toks[9]));
  run.hp.seed = run.seed;

  for (int k = 0; k < run.hp.outer_steps; ++k) {
    toks = expect(r, "iter", 5);
    run.task_ids.push_back(static_cast<int>(to_int(r, toks[2])));
    run.outer_losses.push_back(to_double(r, toks[3]));
    run.hg_norms.push_back(to_double(r, toks[4]));
  }
  while (!r.done()) {
    toks = r.next();
    if (toks[0] == "checkpoint") {
      run.checkpoint_iters.push_back(static_cast<int>(to_int(r, toks[1])));
      const int n = static_cast<int>(toks.size()) - 2;
      run.checkpoints.push_back(read_vec(r, toks, 2, n));
    } else if (toks[0] == "final") {
      const int n = static_cast<int>(toks.size()) - 1;
      run.phi_final = read_vec(r, toks, 1, n);
    } else {
      parse_fail(origin, "unexpected record '" + toks[0] + "'");
    }
  }
  if (run.phi_final.size() == 0) parse_fail(origin, "missing 'final' record");
  return run;
}

// ---- results table ----

void write_results(std::ostream& os, std::span<const EvalRow> rows, const std::string& echo) {
  write_header(os, "results", echo);
  os << "method,seed,task_id,split,metric,value\n";
  for (const EvalRow& row : rows) {
    os << row.method << ',' << row.seed << ',' << row.task_id << ',' << row.split << ','
       << row.metric << ',' << fmt_double(row.value) << "\n";
  }
}

std::vector<EvalRow> read_results(std::istream& is, const std::string& origin) {
  Reader r(is, origin);
  r.expect_kind("results");
  auto head = r.next();
  if (head.empty() || head[0] != "method,seed,task_id,split,metric,value") {
    parse_fail(origin, "bad results column header");
  }
  std::vector<EvalRow> rows;
  while (!r.done()) {
    auto toks = r.next();
    if (toks.size() != 1) parse_fail(origin, "results rows must not contain spaces");
    const std::string& line = toks[0];
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) parse_fail(origin, "bad results row '" + line + "'");
    EvalRow row;
    row.method = cells[0];
    row.seed = static_cast<std::uint64_t>(to_int(r, cells[1]));
    row.task_id = static_cast<int>(to_int(r, cells[2]));
    row.split = cells[3];
    row.metric = cells[4];
    row.value = to_double(r, cells[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace metapref
