#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wordspot/diff/array.hpp"

namespace wordspot::diff {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-4;
  std::uint64_t step_count = 0;
  std::vector<Array> first_moment;
  std::vector<Array> second_moment;

  // Zeroed moments shaped like `params`.
  static AdamState for_parameters(std::span<const Array> params,
                                  double learning_rate);
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
// Moments are created on the first call if the state is empty.
void adam_step(std::span<Array> params, std::span<const Array> grads,
               AdamState& state);

}  // namespace wordspot::diff
