#include "metapref/numeric.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metapref {

double logistic(double u) {
  if (u >= 0.0) {
    return 1.0 / (1.0 + std::exp(-u));
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double softplus(double u) {
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

double log_sum_exp(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  if (scores.size() == 1) return m;
  double acc = 0.0;
  for (double s : scores) acc += std::exp(s - m);
  return m + std::log(acc);
}

double log_sum_exp(const Vec& scores) {
  return log_sum_exp(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
}

double kl_divergence(const Vec& p, const Vec& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

}  // namespace metapref
