#pragma once

#include <Eigen/Core>
#include <span>

namespace metapref {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Logistic sigmoid 1 / (1 + exp(-u)). Saturates cleanly for |u| up to ~700.
double logistic(double u);

/// log(1 + exp(u)) without overflow; equals -log(logistic(-u)).
double softplus(double u);

/// Max-shifted log(sum(exp(s))). Throws std::invalid_argument on empty input.
double log_sum_exp(std::span<const double> scores);
double log_sum_exp(const Vec& scores);

/// KL(p || q) for probability rows of equal size. Terms with p_i = 0
/// contribute zero; p_i > 0 with q_i = 0 yields +infinity.
double kl_divergence(const Vec& p, const Vec& q);

}  // namespace metapref
