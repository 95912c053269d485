#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wordspot/arch/layer_graph.hpp"
#include "wordspot/diff/gradcheck.hpp"
#include "wordspot/diff/graph.hpp"

namespace wordspot::arch {

// Named trainable arrays of a LayerGraph, in layer order with each layer's
// weight before its bias ("conv1.weight", "conv1.bias", ...).
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<diff::Array> values;

  std::size_t size() const { return values.size(); }
  std::size_t element_count() const;
  // Zero arrays of matching shapes, e.g. gradient accumulators.
  std::vector<diff::Array> zeros_like() const;
};

// Normalizer for the He initialization variance 2 / n.
enum class InitFan {
  kFanIn,         // inputs per unit: C * k * k for conv, in-features for linear
  kLayerWeights,  // every trainable weight of the layer
};

// Weights ~ N(0, 2 / n), biases 0. Deterministic in `seed`.
ParameterSet init_parameters(const LayerGraph& graph, std::uint64_t seed,
                             InitFan fan = InitFan::kFanIn);

// Shapes the parameters of `graph` must have, in ParameterSet order.
std::vector<diff::Shape> parameter_shapes(const LayerGraph& graph);

// Registers every parameter as a graph leaf. `grads`, when non-null, must
// match `params` and receives accumulated gradients on backward().
std::vector<diff::Var> bind_parameters(diff::Graph& g,
                                       const ParameterSet& params,
                                       std::vector<diff::Array>* grads);

// Evaluates `graph` on `input` (a 1 x H x W image node). `params` are the
// bound parameter Vars in ParameterSet order. Returns the sigmoid output.
diff::Var run(diff::Graph& g, const LayerGraph& graph,
              std::span<const diff::Var> params, diff::Var input);

// Convenience forward pass in evaluation mode.
std::vector<double> predict(const LayerGraph& graph, const ParameterSet& params,
                            const diff::Array& image);

// Finite-difference check of the BCE loss of `graph` against `target`, with
// every parameter block and the input image perturbed. `params` is edited in
// place and restored.
diff::GradCheckReport check_gradients(const LayerGraph& graph,
                                      ParameterSet& params, diff::Array image,
                                      std::span<const double> target,
                                      const diff::GradCheckOptions& options);

}  // namespace wordspot::arch
