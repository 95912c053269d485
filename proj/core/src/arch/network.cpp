#include "wordspot/arch/network.hpp"

#include <random>

#include "wordspot/diff/init.hpp"
#include "wordspot/diff/ops.hpp"
#include "wordspot/error.hpp"

namespace wordspot::arch {

std::size_t ParameterSet::element_count() const {
  std::size_t total = 0;
  for (const auto& v : values) total += v.size();
  return total;
}

std::vector<diff::Array> ParameterSet::zeros_like() const {
  std::vector<diff::Array> out;
  out.reserve(values.size());
  for (const auto& v : values) out.emplace_back(v.shape());
  return out;
}

std::vector<diff::Shape> parameter_shapes(const LayerGraph& graph) {
  const auto units = infer_units(graph);
  std::vector<diff::Shape> shapes;
  for (const LayerSpec& l : graph.layers()) {
    if (!l.has_parameters()) continue;
    const std::size_t in = units[static_cast<std::size_t>(l.inputs[0])];
    if (l.kind == LayerKind::kConv) {
      const auto out = static_cast<std::size_t>(l.out_channels);
      const auto k = static_cast<std::size_t>(l.kernel);
      shapes.push_back({out, in, k, k});
      shapes.push_back({out});
    } else {
      const auto out = static_cast<std::size_t>(l.out_features);
      shapes.push_back({out, in});
      shapes.push_back({out});
    }
  }
  return shapes;
}

ParameterSet init_parameters(const LayerGraph& graph, std::uint64_t seed,
                             InitFan fan) {
  std::mt19937_64 rng(seed);
  const auto shapes = parameter_shapes(graph);
  ParameterSet params;
  std::size_t s = 0;
  for (const LayerSpec& l : graph.layers()) {
    if (!l.has_parameters()) continue;
    const diff::Shape& weight_shape = shapes[s];
    const diff::Shape& bias_shape = shapes[s + 1];
    s += 2;
    const std::size_t weights = diff::element_count(weight_shape);
    const std::size_t n =
        fan == InitFan::kFanIn ? weights / weight_shape[0] : weights;
    params.names.push_back(l.name + ".weight");
    params.values.push_back(diff::he_init(weight_shape, n, rng));
    params.names.push_back(l.name + ".bias");
    params.values.emplace_back(bias_shape);
  }
  return params;
}

std::vector<diff::Var> bind_parameters(diff::Graph& g,
                                       const ParameterSet& params,
                                       std::vector<diff::Array>* grads) {
  if (grads && grads->size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "gradient buffer count does not match parameters");
  }
  std::vector<diff::Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars.push_back(
        g.parameter(params.values[i], grads ? &(*grads)[i] : nullptr));
  }
  return vars;
}

diff::Var run(diff::Graph& g, const LayerGraph& graph,
              std::span<const diff::Var> params, diff::Var input) {
  const auto& layers = graph.layers();
  std::vector<diff::Var> out(layers.size());
  out[0] = input;
  std::size_t next_param = 0;
  auto take_param = [&]() {
    if (next_param >= params.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "too few parameters bound for " + graph.name());
    }
    return params[next_param++];
  };

  for (std::size_t i = 1; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const diff::Var x = out[static_cast<std::size_t>(l.inputs[0])];
    switch (l.kind) {
      case LayerKind::kConv: {
        const diff::Var w = take_param();
        const diff::Var b = take_param();
        out[i] = diff::conv2d(g, x, w, b, l.stride);
        break;
      }
      case LayerKind::kLinear: {
        const diff::Var w = take_param();
        const diff::Var b = take_param();
        out[i] = diff::linear(g, x, w, b);
        break;
      }
      case LayerKind::kRelu: out[i] = diff::relu(g, x); break;
      case LayerKind::kMaxPool:
        out[i] = diff::max_pool2d(g, x, l.kernel, l.stride);
        break;
      case LayerKind::kAvgPool:
        out[i] = diff::avg_pool2d(g, x, l.kernel, l.stride);
        break;
      case LayerKind::kTpp: out[i] = diff::tpp(g, x, l.tpp); break;
      case LayerKind::kDropout: out[i] = diff::dropout(g, x, l.dropout); break;
      case LayerKind::kSigmoid: out[i] = diff::sigmoid(g, x); break;
      case LayerKind::kAdd:
        out[i] = diff::add(g, x, out[static_cast<std::size_t>(l.inputs[1])]);
        break;
      case LayerKind::kConcat: {
        std::vector<diff::Var> parts;
        parts.reserve(l.inputs.size());
        for (const int p : l.inputs) parts.push_back(out[static_cast<std::size_t>(p)]);
        out[i] = diff::concat_channels(g, parts);
        break;
      }
      case LayerKind::kInput:
        break;
    }
  }
  if (next_param != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "too many parameters bound for " + graph.name());
  }
  return out.back();
}

std::vector<double> predict(const LayerGraph& graph, const ParameterSet& params,
                            const diff::Array& image) {
  diff::Graph g(diff::Mode::kEval);
  const auto vars = bind_parameters(g, params, nullptr);
  const diff::Var in = g.input(image);
  const diff::Var y = run(g, graph, vars, in);
  return g.value(y).to_vector();
}

diff::GradCheckReport check_gradients(const LayerGraph& graph,
                                      ParameterSet& params, diff::Array image,
                                      std::span<const double> target,
                                      const diff::GradCheckOptions& options) {
  std::vector<diff::CheckedBlock> blocks;
  for (std::size_t i = 0; i < params.size(); ++i) {
    blocks.push_back({params.names[i], &params.values[i]});
  }
  blocks.push_back({"input", &image});
  const std::vector<double> y(target.begin(), target.end());
  const auto fn = [&graph, y](diff::Graph& g, std::span<const diff::Var> vars) {
    const auto prediction =
        run(g, graph, vars.first(vars.size() - 1), vars.back());
    return diff::bce_loss(g, prediction, y);
  };
  return diff::grad_check(fn, blocks, options);
}

}  // namespace wordspot::arch
