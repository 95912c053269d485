#include "wordspot/arch/layer_graph.hpp"

#include <sstream>

#include "wordspot/error.hpp"
#include "wordspot/hash.hpp"

namespace wordspot::arch {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return "input";
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kAvgPool: return "avgpool";
    case LayerKind::kTpp: return "tpp";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kAdd: return "add";
    case LayerKind::kConcat: return "concat";
  }
  return "?";
}

LayerGraph::LayerGraph(std::string name, std::size_t output_dim)
    : name_(std::move(name)), output_dim_(output_dim) {
  if (output_dim_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "output dimension must be positive");
  }
  LayerSpec input;
  input.name = "input";
  input.kind = LayerKind::kInput;
  layers_.push_back(std::move(input));
}

std::string LayerGraph::next_name(const char* prefix) {
  return std::string(prefix) + std::to_string(++counter_);
}

int LayerGraph::add_layer(LayerSpec spec) {
  if (spec.kind == LayerKind::kInput) {
    throw Error(ErrorCode::kInvalidConfig, "only layer 0 may be an input");
  }
  const int self = static_cast<int>(layers_.size());
  if (spec.inputs.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "layer " + spec.name + " has no inputs");
  }
  for (const int in : spec.inputs) {
    if (in < 0 || in >= self) {
      throw Error(ErrorCode::kInvalidConfig,
                  "layer " + spec.name + " reads a later or unknown layer");
    }
  }
  layers_.push_back(std::move(spec));
  return self;
}

int LayerGraph::conv(int from, int channels, int kernel, int stride,
                     std::string name) {
  if (channels < 1 || kernel < 1 || kernel % 2 == 0 || stride < 1) {
    throw Error(ErrorCode::kInvalidConfig,
                "conv needs channels >= 1, an odd kernel and stride >= 1");
  }
  LayerSpec spec;
  spec.name = name.empty() ? next_name("conv") : std::move(name);
  spec.kind = LayerKind::kConv;
  spec.inputs = {from};
  spec.out_channels = channels;
  spec.kernel = kernel;
  spec.stride = stride;
  return add_layer(std::move(spec));
}

int LayerGraph::shortcut_projection(int from, int channels, int stride,
                                    std::string name) {
  LayerSpec spec;
  spec.name = name.empty() ? next_name("proj") : std::move(name);
  spec.kind = LayerKind::kConv;
  spec.inputs = {from};
  spec.out_channels = channels;
  spec.kernel = 1;
  spec.stride = stride;
  spec.shortcut = true;
  return add_layer(std::move(spec));
}

int LayerGraph::relu(int from) {
  LayerSpec spec;
  spec.name = next_name("relu");
  spec.kind = LayerKind::kRelu;
  spec.inputs = {from};
  return add_layer(std::move(spec));
}

int LayerGraph::max_pool(int from, int window, int stride) {
  LayerSpec spec;
  spec.name = next_name("maxpool");
  spec.kind = LayerKind::kMaxPool;
  spec.inputs = {from};
  spec.kernel = window;
  spec.stride = stride;
  return add_layer(std::move(spec));
}

int LayerGraph::avg_pool(int from, int window, int stride) {
  LayerSpec spec;
  spec.name = next_name("avgpool");
  spec.kind = LayerKind::kAvgPool;
  spec.inputs = {from};
  spec.kernel = window;
  spec.stride = stride;
  return add_layer(std::move(spec));
}

int LayerGraph::tpp(int from, diff::TppConfig config) {
  LayerSpec spec;
  spec.name = next_name("tpp");
  spec.kind = LayerKind::kTpp;
  spec.inputs = {from};
  spec.tpp = config;
  return add_layer(std::move(spec));
}

int LayerGraph::linear(int from, int features, std::string name) {
  LayerSpec spec;
  spec.name = name.empty() ? next_name("fc") : std::move(name);
  spec.kind = LayerKind::kLinear;
  spec.inputs = {from};
  spec.out_features = features;
  return add_layer(std::move(spec));
}

int LayerGraph::dropout(int from, double p) {
  LayerSpec spec;
  spec.name = next_name("dropout");
  spec.kind = LayerKind::kDropout;
  spec.inputs = {from};
  spec.dropout = p;
  return add_layer(std::move(spec));
}

int LayerGraph::sigmoid(int from) {
  LayerSpec spec;
  spec.name = next_name("sigmoid");
  spec.kind = LayerKind::kSigmoid;
  spec.inputs = {from};
  return add_layer(std::move(spec));
}

int LayerGraph::add(int a, int b) {
  LayerSpec spec;
  spec.name = next_name("add");
  spec.kind = LayerKind::kAdd;
  spec.inputs = {a, b};
  return add_layer(std::move(spec));
}

int LayerGraph::concat(std::vector<int> parts) {
  LayerSpec spec;
  spec.name = next_name("concat");
  spec.kind = LayerKind::kConcat;
  spec.inputs = std::move(parts);
  return add_layer(std::move(spec));
}

std::string LayerGraph::descriptor() const {
  std::ostringstream out;
  out << "graph " << name_ << " output_dim=" << output_dim_ << '\n';
  for (const LayerSpec& l : layers_) {
    out << l.name << ' ' << to_string(l.kind) << " in=";
    for (std::size_t i = 0; i < l.inputs.size(); ++i) {
      out << (i ? "," : "") << l.inputs[i];
    }
    switch (l.kind) {
      case LayerKind::kConv:
        out << " c=" << l.out_channels << " k=" << l.kernel << " s=" << l.stride
            << (l.shortcut ? " shortcut" : "");
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool:
        out << " k=" << l.kernel << " s=" << l.stride;
        break;
      case LayerKind::kTpp:
        out << " levels=" << l.tpp.levels << " pool="
            << (l.tpp.pooling == diff::TppPooling::kMax ? "max" : "avg");
        break;
      case LayerKind::kLinear:
        out << " f=" << l.out_features;
        break;
      case LayerKind::kDropout:
        out << " p=" << l.dropout;
        break;
      default:
        break;
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t LayerGraph::fingerprint() const {
  return Fnv1a().update(descriptor()).digest();
}

std::vector<std::size_t> infer_units(const LayerGraph& graph) {
  const auto& layers = graph.layers();
  std::vector<std::size_t> units(layers.size(), 0);
  units[0] = 1;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::size_t in = units[static_cast<std::size_t>(l.inputs[0])];
    switch (l.kind) {
      case LayerKind::kConv:
        units[i] = static_cast<std::size_t>(l.out_channels);
        break;
      case LayerKind::kTpp:
        units[i] = in * l.tpp.bins();
        break;
      case LayerKind::kLinear:
        units[i] = static_cast<std::size_t>(l.out_features);
        break;
      case LayerKind::kConcat: {
        std::size_t total = 0;
        for (const int part : l.inputs) total += units[static_cast<std::size_t>(part)];
        units[i] = total;
        break;
      }
      default:
        units[i] = in;
        break;
    }
  }
  return units;
}

std::size_t layer_parameter_count(const LayerGraph& graph, int layer,
                                  const std::vector<std::size_t>& units) {
  const LayerSpec& l = graph.layers()[static_cast<std::size_t>(layer)];
  const std::size_t in = l.inputs.empty()
                             ? 0
                             : units[static_cast<std::size_t>(l.inputs[0])];
  if (l.kind == LayerKind::kConv) {
    const auto out = static_cast<std::size_t>(l.out_channels);
    const auto k = static_cast<std::size_t>(l.kernel);
    return out * in * k * k + out;
  }
  if (l.kind == LayerKind::kLinear) {
    const auto out = static_cast<std::size_t>(l.out_features);
    return out * in + out;
  }
  return 0;
}

std::size_t count_params(const LayerGraph& graph) {
  const auto units = infer_units(graph);
  std::size_t total = 0;
  for (std::size_t i = 0; i < graph.layers().size(); ++i) {
    total += layer_parameter_count(graph, static_cast<int>(i), units);
  }
  return total;
}

std::vector<LayerShape> infer_shapes(const LayerGraph& graph,
                                     std::size_t height, std::size_t width) {
  const auto& layers = graph.layers();
  const auto units = infer_units(graph);
  std::vector<LayerShape> table;
  table.reserve(layers.size());

  auto fail = [&](const LayerSpec& l, const std::string& why) -> void {
    throw Error(ErrorCode::kShapeInferenceFailure,
                "layer '" + l.name + "' (" + to_string(l.kind) + "): " + why);
  };

  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    LayerShape row;
    row.index = static_cast<int>(i);
    row.name = l.name;
    row.kind = l.kind;
    row.parameters = layer_parameter_count(graph, static_cast<int>(i), units);
    const diff::Shape in =
        l.inputs.empty() ? diff::Shape{}
                         : table[static_cast<std::size_t>(l.inputs[0])].shape;
    const bool spatial_in = in.size() == 3;

    switch (l.kind) {
      case LayerKind::kInput:
        if (height == 0 || width == 0) fail(l, "empty input");
        row.shape = {1, height, width};
        break;
      case LayerKind::kConv: {
        if (!spatial_in) fail(l, "needs a C x H x W input");
        if (l.kernel <= 0 || l.kernel % 2 == 0) fail(l, "kernel must be odd");
        const auto s = static_cast<std::size_t>(l.stride);
        row.shape = {static_cast<std::size_t>(l.out_channels),
                     (in[1] - 1) / s + 1, (in[2] - 1) / s + 1};
        break;
      }
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool: {
        if (!spatial_in) fail(l, "needs a C x H x W input");
        const auto k = static_cast<std::size_t>(l.kernel);
        const auto s = static_cast<std::size_t>(l.stride);
        if (in[1] < k || in[2] < k) {
          fail(l, "window " + std::to_string(k) + " exceeds input " +
                      diff::shape_string(in));
        }
        row.shape = {in[0], (in[1] - k) / s + 1, (in[2] - k) / s + 1};
        break;
      }
      case LayerKind::kTpp:
        if (!spatial_in) fail(l, "needs a C x H x W input");
        if (in[2] < static_cast<std::size_t>(l.tpp.levels)) {
          fail(l, "width " + std::to_string(in[2]) + " is narrower than " +
                      std::to_string(l.tpp.levels) + " levels");
        }
        row.shape = {in[0] * l.tpp.bins()};
        break;
      case LayerKind::kLinear:
        row.shape = {static_cast<std::size_t>(l.out_features)};
        break;
      case LayerKind::kAdd: {
        const auto& other = table[static_cast<std::size_t>(l.inputs[1])].shape;
        if (in != other) {
          fail(l, "operand shapes differ: " + diff::shape_string(in) + " vs " +
                      diff::shape_string(other));
        }
        row.shape = in;
        break;
      }
      case LayerKind::kConcat: {
        if (!spatial_in) fail(l, "needs C x H x W inputs");
        std::size_t channels = 0;
        for (const int part : l.inputs) {
          const auto& s = table[static_cast<std::size_t>(part)].shape;
          if (s.size() != 3 || s[1] != in[1] || s[2] != in[2]) {
            fail(l, "spatial extents differ: " + diff::shape_string(in) +
                        " vs " + diff::shape_string(s));
          }
          channels += s[0];
        }
        row.shape = {channels, in[1], in[2]};
        break;
      }
      default:
        row.shape = in;
        break;
    }
    table.push_back(std::move(row));
  }
  if (table.back().shape != diff::Shape{graph.output_dim()}) {
    throw Error(ErrorCode::kShapeInferenceFailure,
                "layer '" + layers.back().name + "' produces " +
                    diff::shape_string(table.back().shape) + ", expected " +
                    std::to_string(graph.output_dim()));
  }
  return table;
}

GraphSummary summarize(const LayerGraph& graph) {
  GraphSummary summary;
  const auto units = infer_units(graph);
  const auto& layers = graph.layers();
  std::vector<std::size_t> linear_sizes;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::kConv:
        if (l.shortcut) {
          ++summary.shortcut_convs;
        } else {
          ++summary.conv_layers;
          summary.conv_filters += static_cast<std::size_t>(l.out_channels);
        }
        break;
      case LayerKind::kMaxPool: ++summary.max_pools; break;
      case LayerKind::kAvgPool: ++summary.avg_pools; break;
      case LayerKind::kTpp:
        summary.tpp_input_channels = units[static_cast<std::size_t>(l.inputs[0])];
        summary.tpp_output = units[i];
        break;
      case LayerKind::kLinear:
        linear_sizes.push_back(static_cast<std::size_t>(l.out_features));
        break;
      default:
        break;
    }
  }
  if (!linear_sizes.empty()) linear_sizes.pop_back();
  summary.hidden_units = std::move(linear_sizes);
  summary.parameters = count_params(graph);
  return summary;
}

}  // namespace wordspot::arch
