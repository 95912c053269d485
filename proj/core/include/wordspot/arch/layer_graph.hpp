#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wordspot/diff/array.hpp"
#include "wordspot/diff/ops.hpp"

namespace wordspot::arch {

enum class LayerKind {
  kInput,
  kConv,
  kRelu,
  kMaxPool,
  kAvgPool,
  kTpp,
  kLinear,
  kDropout,
  kSigmoid,
  kAdd,
  kConcat,
};

const char* to_string(LayerKind kind);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  std::vector<int> inputs;  // indices of earlier layers
  int out_channels = 0;     // conv
  int kernel = 0;           // conv kernel / pooling window (square)
  int stride = 1;           // conv / pooling
  int out_features = 0;     // linear
  double dropout = 0.0;
  diff::TppConfig tpp;
  // 1x1 projection on a residual shortcut; not part of the main conv path.
  bool shortcut = false;

  bool has_parameters() const {
    return kind == LayerKind::kConv || kind == LayerKind::kLinear;
  }
};

// Directed acyclic graph of layers in evaluation order. Each layer only reads
// layers with smaller indices, and layer 0 is the 1 x H x W grayscale input.
// The graph is an immutable blueprint once built; parameters live elsewhere.
class LayerGraph {
 public:
  LayerGraph(std::string name, std::size_t output_dim);

  const std::string& name() const { return name_; }
  std::size_t output_dim() const { return output_dim_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  int input() const { return 0; }
  int output() const { return static_cast<int>(layers_.size()) - 1; }

  int add_layer(LayerSpec spec);

  int conv(int from, int channels, int kernel, int stride = 1,
           std::string name = {});
  int shortcut_projection(int from, int channels, int stride,
                          std::string name = {});
  int relu(int from);
  int max_pool(int from, int window, int stride);
  int avg_pool(int from, int window, int stride);
  int tpp(int from, diff::TppConfig config);
  int linear(int from, int features, std::string name = {});
  int dropout(int from, double p);
  int sigmoid(int from);
  int add(int a, int b);
  int concat(std::vector<int> parts);

  // Canonical one-layer-per-line text; checkpoints store it and compare
  // fingerprints before loading weights.
  std::string descriptor() const;
  std::uint64_t fingerprint() const;

 private:
  std::string next_name(const char* prefix);

  std::string name_;
  std::size_t output_dim_;
  std::vector<LayerSpec> layers_;
  std::size_t counter_ = 0;
};

// Channel count (spatial layers) or vector length (flat layers) per layer.
// Independent of the input size.
std::vector<std::size_t> infer_units(const LayerGraph& graph);

std::size_t layer_parameter_count(const LayerGraph& graph, int layer,
                                  const std::vector<std::size_t>& units);

// Exact trainable parameter count, weights plus biases.
std::size_t count_params(const LayerGraph& graph);

struct LayerShape {
  int index = 0;
  std::string name;
  LayerKind kind = LayerKind::kInput;
  diff::Shape shape;
  std::size_t parameters = 0;
};

// Full shape trace for a 1 x height x width input. Throws
// Error(kShapeInferenceFailure) naming the first layer that cannot be
// evaluated.
std::vector<LayerShape> infer_shapes(const LayerGraph& graph,
                                     std::size_t height, std::size_t width);

struct GraphSummary {
  std::size_t conv_layers = 0;      // main path, excluding projections
  std::size_t shortcut_convs = 0;
  std::size_t conv_filters = 0;     // sum of main-path conv output channels
  std::size_t max_pools = 0;
  std::size_t avg_pools = 0;
  std::size_t tpp_input_channels = 0;
  std::size_t tpp_output = 0;
  std::vector<std::size_t> hidden_units;  // linear layers before the output
  std::size_t parameters = 0;
};

GraphSummary summarize(const LayerGraph& graph);

}  // namespace wordspot::arch
