#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "metapref/numeric.hpp"

namespace metapref {

struct Prompt {
  int id = 0;
  Vec features;  // dim d_x
};

struct Response {
  int id = 0;
  Vec features;    // dim d_y
  int length = 1;  // |y|, used by length-normalized preference accuracy
};

/// A fine-tuning sample z = (x, y); indices into a task's prompt space and
/// that prompt's candidate set.
struct Example {
  int prompt = 0;
  int response = 0;
};

/// A labeled comparison: `preferred` beats `dispreferred` given `prompt`.
struct PreferencePair {
  int prompt = 0;
  int preferred = 0;
  int dispreferred = 0;
};

struct HyperParams {
  double alpha = 0.05;    // inner-loop learning rate
  double eta = 2.0;       // outer-loop learning rate
  double beta = 8.0;      // reward controlling factor
  int inner_steps = 100;  // D
  int outer_steps = 2000; // K
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument unless alpha, eta, beta > 0,
  /// inner_steps >= 0 and outer_steps >= 1.
  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("hp: alpha must be > 0");
    if (!(eta > 0.0)) throw std::invalid_argument("hp: eta must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("hp: beta must be > 0");
    if (inner_steps < 0) throw std::invalid_argument("hp: inner_steps must be >= 0");
    if (outer_steps < 1) throw std::invalid_argument("hp: outer_steps must be >= 1");
  }
};

struct PolicyParams {
  Vec theta;  // dim p
};

/// Bounded reward model: r(x, y) = r_max * tanh(phi . psi_r(x, y)), so
/// exp(r) always lies in [exp(-r_max), exp(r_max)].
struct RewardParams {
  Vec phi;            // dim q
  double r_max = 1.0; // must be > 0
};

struct LossValue {
  double value = 0.0;
  std::optional<Vec> grad;  // with respect to the declared parameter block
};

}  // namespace metapref
