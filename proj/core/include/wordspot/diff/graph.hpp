#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "wordspot/diff/array.hpp"

namespace wordspot::diff {

enum class OpTag {
  kInput,
  kParameter,
  kConv2d,
  kMaxPool,
  kAvgPool,
  kRelu,
  kSigmoid,
  kLinear,
  kDropout,
  kConcat,
  kAdd,
  kTpp,
  kBce,
};

const char* to_string(OpTag tag);

enum class Mode { kTrain, kEval };

// Handle to a node of a Graph.
struct Var {
  std::size_t index = 0;
};

// Tape for one forward/backward pass. Nodes are appended in evaluation order,
// so the tape is already topologically sorted and backward() walks it in
// reverse. A Graph is single-owner; disjoint graphs may run concurrently.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var self)>;

  explicit Graph(Mode mode = Mode::kEval, std::uint64_t seed = 0);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaf holding a copy of `value`. Its gradient is only computed when
  // `track_grad` is set.
  Var input(Array value, bool track_grad = false);

  // Leaf that borrows `value`; both `value` and `grad_sink` must outlive the
  // graph. backward() accumulates (+=) into `grad_sink`, which must have the
  // same shape as `value`.
  Var parameter(const Array& value, Array* grad_sink);

  // Appends an op node. Gradients are required iff any input requires them.
  Var record(OpTag op, Array value, std::vector<Var> inputs, BackwardFn backward);

  const Array& value(Var v) const;
  // Gradient buffer, allocated as zeros on first access.
  Array& grad(Var v);
  bool requires_grad(Var v) const { return nodes_[v.index].requires_grad; }
  OpTag op(Var v) const { return nodes_[v.index].op; }
  const std::vector<Var>& inputs(Var v) const { return nodes_[v.index].inputs; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(output)/d(output) = 1 and propagates to every tracked leaf.
  // `output` must hold exactly one element.
  void backward(Var output);

  Mode mode() const { return mode_; }
  std::mt19937_64& rng() { return rng_; }

  // Piecewise-linear ops (relu, max pooling) report which branch every unit
  // took. Two forward passes with equal signatures evaluated the same smooth
  // piece, which lets the gradient checker reject steps that cross a kink.
  void note_branches(std::uint64_t hash);
  std::uint64_t branch_signature() const { return branch_signature_; }

 private:
  struct Node {
    OpTag op = OpTag::kInput;
    Array owned_value;
    const Array* borrowed_value = nullptr;
    Array owned_grad;
    Array* grad_sink = nullptr;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  Mode mode_;
  std::mt19937_64 rng_;
  std::uint64_t branch_signature_ = 0;
};

}  // namespace wordspot::diff
