#include "wordspot/arch/builders.hpp"

#include "wordspot/error.hpp"

namespace wordspot::arch {
namespace {

int scaled(int width, const ArchOptions& options) {
  const int d = options.width_divisor;
  return (width + d - 1) / d;
}

void check_options(const ArchOptions& options) {
  if (options.phoc_dim == 0) {
    throw Error(ErrorCode::kInvalidConfig, "phoc_dim must be positive");
  }
  if (options.width_divisor < 1) {
    throw Error(ErrorCode::kInvalidConfig, "width_divisor must be >= 1");
  }
  if (options.tpp.levels < 1) {
    throw Error(ErrorCode::kInvalidConfig, "tpp levels must be >= 1");
  }
}

std::string graph_name(const char* base, const ArchOptions& options) {
  std::string name = base;
  if (options.width_divisor != 1) {
    name += "/" + std::to_string(options.width_divisor);
  }
  return name;
}

// TPP followed by the MLP head: hidden layers with ReLU (and dropout when
// p > 0), then phoc_dim sigmoid outputs.
void add_head(LayerGraph& graph, int from, std::initializer_list<int> hidden,
              double dropout, const ArchOptions& options) {
  int x = graph.tpp(from, options.tpp);
  for (const int units : hidden) {
    x = graph.relu(graph.linear(x, units));
    if (dropout > 0.0) x = graph.dropout(x, dropout);
  }
  x = graph.linear(x, static_cast<int>(options.phoc_dim), "fc_out");
  graph.sigmoid(x);
}

}  // namespace

std::string_view to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::kLeNet: return "lenet";
    case ArchKind::kTppPhocNet: return "tppnet";
    case ArchKind::kPhocResNet: return "resnet";
    case ArchKind::kPhocDenseNet: return "densenet";
  }
  return "?";
}

std::optional<ArchKind> parse_arch(std::string_view name) {
  for (const ArchKind kind : {ArchKind::kLeNet, ArchKind::kTppPhocNet,
                              ArchKind::kPhocResNet, ArchKind::kPhocDenseNet}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::string_view display_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::kLeNet: return "LeNet";
    case ArchKind::kTppPhocNet: return "TPP-PHOCNet";
    case ArchKind::kPhocResNet: return "PHOCResNet";
    case ArchKind::kPhocDenseNet: return "PHOCDenseNet";
  }
  return "?";
}

int add_bottleneck(LayerGraph& graph, int from, int in_channels,
                   const BottleneckBlock& block, const std::string& prefix) {
  if (block.ordinal <= 0 || block.ordinal % 4 != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "bottleneck ordinal must be a positive multiple of 4, got " +
                    std::to_string(block.ordinal));
  }
  const int inner = block.ordinal / 4;
  int x = graph.relu(graph.conv(from, inner, 1, 1, prefix + ".conv1"));
  x = graph.relu(graph.conv(x, inner, 3, block.stride, prefix + ".conv2"));
  x = graph.conv(x, block.ordinal, 1, 1, prefix + ".conv3");
  int shortcut = from;
  if (in_channels != block.ordinal || block.stride != 1) {
    shortcut = graph.shortcut_projection(from, block.ordinal, block.stride,
                                         prefix + ".proj");
  }
  return graph.relu(graph.add(x, shortcut));
}

DenseBlockResult add_dense_block(LayerGraph& graph, int from, int in_channels,
                                 const DenseBlock& block,
                                 const std::string& prefix) {
  std::vector<int> state{from};
  int channels = in_channels;
  for (int j = 0; j < block.num_layers; ++j) {
    const int input = state.size() == 1 ? state.front() : graph.concat(state);
    const int maps = graph.relu(graph.conv(input, block.growth_rate, 3, 1,
                                           prefix + ".conv" + std::to_string(j + 1)));
    state.push_back(maps);
    channels += block.growth_rate;
  }
  return {graph.concat(state), channels};
}

LayerGraph build_phoclenet(const ArchOptions& options) {
  check_options(options);
  LayerGraph g(graph_name("lenet", options), options.phoc_dim);
  int x = g.relu(g.conv(g.input(), scaled(20, options), 5, 1, "conv1"));
  x = g.max_pool(x, 2, 2);
  x = g.relu(g.conv(x, scaled(50, options), 5, 1, "conv2"));
  const int hidden = scaled(500, options);
  add_head(g, x, {hidden, hidden}, 0.0, options);
  return g;
}

LayerGraph build_tpp_phocnet(const ArchOptions& options) {
  check_options(options);
  LayerGraph g(graph_name("tppnet", options), options.phoc_dim);
  int x = g.input();
  int index = 0;
  auto stage = [&](int count, int channels) {
    for (int i = 0; i < count; ++i) {
      x = g.relu(g.conv(x, scaled(channels, options), 3, 1,
                        "conv" + std::to_string(++index)));
    }
  };
  stage(2, 64);
  x = g.max_pool(x, 2, 2);
  stage(2, 128);
  x = g.max_pool(x, 2, 2);
  stage(3, 256);
  stage(3, 512);
  stage(3, 512);
  const int hidden = scaled(4096, options);
  add_head(g, x, {hidden, hidden}, options.dropout, options);
  return g;
}

LayerGraph build_phocresnet(const ArchOptions& options) {
  check_options(options);
  LayerGraph g(graph_name("resnet", options), options.phoc_dim);
  const int stem = scaled(64, options);
  int x = g.relu(g.conv(g.input(), stem, 7, options.resnet_stem_stride, "stem"));
  x = g.max_pool(x, 3, 2);
  int channels = stem;

  struct Stage {
    int blocks;
    int ordinal;
    int first_stride;
  };
  // Only the block entering the second stage downsamples.
  const Stage stages[] = {{3, 256, 1}, {4, 512, 2}, {6, 1024, 1}, {3, 2048, 1}};
  int block_index = 0;
  for (const Stage& stage : stages) {
    for (int b = 0; b < stage.blocks; ++b) {
      BottleneckBlock block;
      block.ordinal = scaled(stage.ordinal, options);
      block.stride = b == 0 ? stage.first_stride : 1;
      x = add_bottleneck(g, x, channels, block,
                         "block" + std::to_string(++block_index));
      channels = block.ordinal;
    }
  }
  const int hidden = scaled(4096, options);
  add_head(g, x, {hidden, hidden}, options.dropout, options);
  return g;
}

LayerGraph build_phocdensenet(const ArchOptions& options) {
  check_options(options);
  LayerGraph g(graph_name("densenet", options), options.phoc_dim);
  const int initial = scaled(32, options);
  const int growth = scaled(12, options);
  int x = g.relu(g.conv(g.input(), initial, 3, 1, "conv0"));
  x = g.avg_pool(x, 2, 2);
  auto first = add_dense_block(g, x, initial, {30, growth}, "dense1");
  // Transition: 1x1 compression by 0.5 (floor), then 2x2 average pooling.
  const int compressed = first.channels / 2;
  x = g.relu(g.conv(first.output, compressed, 1, 1, "transition"));
  x = g.avg_pool(x, 2, 2);
  auto second = add_dense_block(g, x, compressed, {60, growth}, "dense2");
  const int hidden = scaled(4096, options);
  add_head(g, second.output, {hidden, hidden}, options.dropout, options);
  return g;
}

LayerGraph build(ArchKind kind, const ArchOptions& options) {
  switch (kind) {
    case ArchKind::kLeNet: return build_phoclenet(options);
    case ArchKind::kTppPhocNet: return build_tpp_phocnet(options);
    case ArchKind::kPhocResNet: return build_phocresnet(options);
    case ArchKind::kPhocDenseNet: return build_phocdensenet(options);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown architecture");
}

std::size_t minimum_width(const LayerGraph& graph, std::size_t height,
                          std::size_t limit) {
  for (std::size_t w = 1; w <= limit; ++w) {
    try {
      infer_shapes(graph, height, w);
      return w;
    } catch (const Error&) {
    }
  }
  return 0;
}

}  // namespace wordspot::arch
