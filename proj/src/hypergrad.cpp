#include "metapref/hypergrad.hpp"

#include <cmath>
#include <stdexcept>

namespace metapref {

InnerTrace run_inner_sgd(const RewardParams& phi, const Vec& theta0,
                         const TaskInstance& task, std::span<const Example> stream,
                         double alpha, double beta, double ridge) {
  if (!(alpha > 0.0)) throw std::invalid_argument("run_inner_sgd: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("run_inner_sgd: beta must be > 0");
  if (theta0.size() != task.policy_dim()) {
    throw std::invalid_argument("run_inner_sgd: theta0 dimension mismatch");
  }
  InnerTrace trace;
  trace.theta0 = theta0;
  trace.alpha = alpha;
  trace.beta = beta;
  trace.ridge = ridge;
  trace.steps.reserve(stream.size());

  Vec theta = theta0;
  PolicyParams th;
  for (const Example& z : stream) {
    th.theta = theta;
    InnerStep step;
    step.z = z;
    step.theta = theta;
    step.reward = reward_value(phi, task, z.prompt, z.response);
    step.weight = std::exp(step.reward / beta);
    step.grad_logpi = policy_grad(th, task, z.prompt, z.response);
    step.hess_logpi = policy_hessian(th, task, z.prompt);
    step.grad_reward = reward_grad(phi, task, z.prompt, z.response);
    theta = (theta - alpha * (ridge * theta - step.weight * step.grad_logpi)).eval();
    trace.steps.push_back(std::move(step));
  }
  trace.theta_final = std::move(theta);
  return trace;
}

Hypergradient prop1_hypergrad(const InnerTrace& trace, const TaskInstance& task,
                              const PreferencePair& nu) {
  task.check_pair(nu.prompt, nu.preferred);
  task.check_pair(nu.prompt, nu.dispreferred);
  if (trace.theta_final.size() != task.policy_dim()) {
    throw std::invalid_argument("prop1_hypergrad: trace/task dimension mismatch");
  }
  const int steps = static_cast<int>(trace.steps.size());
  const int q = task.reward_dim();

  Hypergradient hg;
  hg.vector = Vec::Zero(q);
  hg.step_contrib_norms.assign(static_cast<std::size_t>(steps), 0.0);
  if (steps == 0) return hg;  // d theta_0 / d phi = 0

  PolicyParams final_params{trace.theta_final};
  Vec lps = policy_logprobs(final_params, task, nu.prompt);
  const double a = lps[nu.preferred] - lps[nu.dispreferred];
  Vec grad_a = policy_grad(final_params, task, nu.prompt, nu.preferred) -
               policy_grad(final_params, task, nu.prompt, nu.dispreferred);

  // v holds prod_{j=t+1}^{D-1} (I + alpha hess_F_j R_j - alpha ridge I)
  // applied to grad_A (1 - sigma(A)), built right-to-left.
  Vec v = (1.0 - logistic(a)) * grad_a;
  const double scale = -(trace.alpha / trace.beta);
  for (int t = steps - 1; t >= 0; --t) {
    const InnerStep& s = trace.steps[t];
    if (s.grad_reward.size() != q) {
      throw std::invalid_argument("prop1_hypergrad: cached reward gradient dimension mismatch");
    }
    Vec contrib = (scale * s.weight * s.grad_logpi.dot(v)) * s.grad_reward;
    hg.step_contrib_norms[static_cast<std::size_t>(t)] = contrib.norm();
    hg.vector += contrib;
    if (t > 0) {
      v = (v + trace.alpha * s.weight * (s.hess_logpi * v) -
           trace.alpha * trace.ridge * v).eval();
    }
  }
  return hg;
}

Vec fd_hypergrad(const RewardParams& phi, const Vec& theta0, const TaskInstance& task,
                 std::span<const Example> stream, const PreferencePair& nu,
                 double alpha, double beta, double ridge, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("fd_hypergrad: epsilon must be > 0");
  const int q = task.reward_dim();
  Vec out(q);
  const auto outer_at = [&](const RewardParams& p) {
    InnerTrace tr = run_inner_sgd(p, theta0, task, stream, alpha, beta, ridge);
    PolicyParams th{tr.theta_final};
    return loss_pl(th, task, nu).value;
  };
  RewardParams pert = phi;
  for (int i = 0; i < q; ++i) {
    pert.phi[i] = phi.phi[i] + epsilon;
    const double up = outer_at(pert);
    pert.phi[i] = phi.phi[i] - epsilon;
    const double down = outer_at(pert);
    pert.phi[i] = phi.phi[i];
    out[i] = (up - down) / (2.0 * epsilon);
  }
  return out;
}

CheckReport check_hypergrad(const CheckConfig& cfg, int n_instances, Rng& rng) {
  if (n_instances < 1) throw std::invalid_argument("check_hypergrad: need >= 1 instance");
  CheckReport report;
  report.rows.reserve(static_cast<std::size_t>(n_instances));

  for (int i = 0; i < n_instances; ++i) {
    CheckRow row;
    row.instance = i;
    row.p = 2 + static_cast<int>(rng.next_index(static_cast<std::size_t>(cfg.max_dim - 1)));
    row.q = 2 + static_cast<int>(rng.next_index(static_cast<std::size_t>(cfg.max_dim - 1)));
    row.inner_steps = 1 + static_cast<int>(rng.next_index(static_cast<std::size_t>(cfg.max_inner_steps)));
    row.alpha = 0.01 + 0.14 * rng.next_double();
    row.beta = 0.5 + 3.5 * rng.next_double();
    const std::size_t ridge_pick = rng.next_index(4);
    row.ridge = ridge_pick < 2 ? 0.0 : (ridge_pick == 2 ? 1e-3 : 1e-2);

    const int n_x = 2 + static_cast<int>(rng.next_index(2));
    const double r_max = 0.5 + 1.5 * rng.next_double();
    TaskInstance task = make_random_task(n_x, 4, row.p, row.q, r_max, rng);

    Vec theta0(row.p);
    for (int j = 0; j < row.p; ++j) theta0[j] = 0.5 * rng.next_gaussian();
    RewardParams phi;
    phi.r_max = r_max;
    phi.phi = Vec(row.q);
    for (int j = 0; j < row.q; ++j) phi.phi[j] = 0.5 * rng.next_gaussian();

    std::vector<Example> stream;
    stream.reserve(static_cast<std::size_t>(row.inner_steps));
    for (int t = 0; t < row.inner_steps; ++t) {
      const int x = static_cast<int>(rng.next_index(static_cast<std::size_t>(task.n_prompts())));
      const int y = static_cast<int>(rng.next_index(static_cast<std::size_t>(task.n_candidates(x))));
      stream.push_back({x, y});
    }
    const int px = static_cast<int>(rng.next_index(static_cast<std::size_t>(task.n_prompts())));
    const int ny = task.n_candidates(px);
    const int y1 = static_cast<int>(rng.next_index(static_cast<std::size_t>(ny)));
    int y2 = static_cast<int>(rng.next_index(static_cast<std::size_t>(ny - 1)));
    if (y2 >= y1) ++y2;
    const PreferencePair nu{px, y1, y2};

    InnerTrace trace = run_inner_sgd(phi, theta0, task, stream, row.alpha, row.beta, row.ridge);
    Vec analytic = prop1_hypergrad(trace, task, nu).vector;
    Vec fd = fd_hypergrad(phi, theta0, task, stream, nu, row.alpha, row.beta, row.ridge,
                          cfg.fd_epsilon);

    const double fd_norm = fd.norm();
    const double an_norm = analytic.norm();
    constexpr double kTiny = 1e-14;
    row.rel_err = fd_norm > kTiny ? (analytic - fd).norm() / fd_norm
                                  : (analytic - fd).norm();
    row.cos_sim = (fd_norm > kTiny && an_norm > kTiny)
                      ? analytic.dot(fd) / (an_norm * fd_norm)
                      : 1.0;
    report.max_rel_err = std::max(report.max_rel_err, row.rel_err);
    report.min_cos_sim = std::min(report.min_cos_sim, row.cos_sim);
    if (row.rel_err > cfg.rel_tol || row.cos_sim < 1.0 - cfg.cos_tol) {
      report.passed = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace metapref
