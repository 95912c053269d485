#include "wordspot/diff/graph.hpp"

#include "wordspot/error.hpp"

namespace wordspot::diff {

const char* to_string(OpTag tag) {
  switch (tag) {
    case OpTag::kInput: return "input";
    case OpTag::kParameter: return "parameter";
    case OpTag::kConv2d: return "conv2d";
    case OpTag::kMaxPool: return "max_pool2d";
    case OpTag::kAvgPool: return "avg_pool2d";
    case OpTag::kRelu: return "relu";
    case OpTag::kSigmoid: return "sigmoid";
    case OpTag::kLinear: return "linear";
    case OpTag::kDropout: return "dropout";
    case OpTag::kConcat: return "concat_channels";
    case OpTag::kAdd: return "add";
    case OpTag::kTpp: return "tpp";
    case OpTag::kBce: return "bce_loss";
  }
  return "?";
}

Graph::Graph(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

Var Graph::input(Array value, bool track_grad) {
  Node node;
  node.op = OpTag::kInput;
  node.owned_value = std::move(value);
  node.requires_grad = track_grad;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(const Array& value, Array* grad_sink) {
  if (grad_sink != nullptr && grad_sink->shape() != value.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "gradient sink " + shape_string(grad_sink->shape()) +
                    " for parameter " + shape_string(value.shape()));
  }
  Node node;
  node.op = OpTag::kParameter;
  node.borrowed_value = &value;
  node.grad_sink = grad_sink;
  node.requires_grad = grad_sink != nullptr;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::record(OpTag op, Array value, std::vector<Var> inputs,
                  BackwardFn backward) {
  Node node;
  node.op = op;
  node.owned_value = std::move(value);
  for (const Var in : inputs) {
    node.requires_grad = node.requires_grad || nodes_[in.index].requires_grad;
  }
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Array& Graph::value(Var v) const {
  const Node& node = nodes_[v.index];
  return node.borrowed_value ? *node.borrowed_value : node.owned_value;
}

Array& Graph::grad(Var v) {
  Node& node = nodes_[v.index];
  if (node.grad_sink) return *node.grad_sink;
  if (node.owned_grad.empty()) node.owned_grad = Array(value(v).shape());
  return node.owned_grad;
}

void Graph::backward(Var output) {
  if (value(output).size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward() needs a scalar output, got " +
                    shape_string(value(output).shape()));
  }
  if (!nodes_[output.index].requires_grad) return;
  // Parameter sinks accumulate; everything else starts from zero.
  for (std::size_t i = 0; i <= output.index; ++i) {
    if (!nodes_[i].grad_sink) nodes_[i].owned_grad = Array();
  }
  grad(output)[0] += 1.0;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward) continue;
    // Nothing flowed into this node.
    if (!node.grad_sink && node.owned_grad.empty()) continue;
    node.backward(*this, Var{i});
  }
}

void Graph::note_branches(std::uint64_t hash) {
  branch_signature_ = (branch_signature_ ^ hash) * 0x100000001b3ULL +
                      0x9e3779b97f4a7c15ULL;
}

}  // namespace wordspot::diff
