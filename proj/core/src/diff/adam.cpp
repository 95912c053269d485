#include "wordspot/diff/adam.hpp"

#include <cmath>
#include <string>

#include "wordspot/error.hpp"

namespace wordspot::diff {

AdamState AdamState::for_parameters(std::span<const Array> params,
                                    double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const Array& p : params) {
    state.first_moment.emplace_back(p.shape());
    state.second_moment.emplace_back(p.shape());
  }
  return state;
}

void adam_step(std::span<Array> params, std::span<const Array> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "adam_step: " + std::to_string(params.size()) +
                    " parameters, " + std::to_string(grads.size()) +
                    " gradients");
  }
  if (state.first_moment.empty() && state.second_moment.empty()) {
    for (const Array& p : params) {
      state.first_moment.emplace_back(p.shape());
      state.second_moment.emplace_back(p.shape());
    }
  }
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "adam_step: optimizer state tracks a different parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape() ||
        state.first_moment[i].shape() != params[i].shape() ||
        state.second_moment[i].shape() != params[i].shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adam_step: shape mismatch for parameter " +
                      std::to_string(i) + " " +
                      shape_string(params[i].shape()));
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* theta = params[i].data();
    const double* g = grads[i].data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace wordspot::diff
