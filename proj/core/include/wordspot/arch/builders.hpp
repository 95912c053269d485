#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "wordspot/arch/layer_graph.hpp"

namespace wordspot::arch {

enum class ArchKind { kLeNet, kTppPhocNet, kPhocResNet, kPhocDenseNet };

// "lenet", "tppnet", "resnet", "densenet".
std::string_view to_string(ArchKind kind);
std::optional<ArchKind> parse_arch(std::string_view name);
// Row label used in result tables.
std::string_view display_name(ArchKind kind);

struct ArchOptions {
  std::size_t phoc_dim = 540;
  // Every channel, growth-rate and hidden-layer width is divided by this
  // (rounding up). 1 builds the full networks; 8 builds the miniature
  // variants used for gradient checks.
  int width_divisor = 1;
  diff::TppConfig tpp{};
  // Stride of the PHOCResNet 7x7 stem convolution.
  int resnet_stem_stride = 1;
  double dropout = 0.5;
};

// Residual bottleneck: 1x1 (n/4) -> 3x3 (n/4, stride) -> 1x1 (n), summed with
// the shortcut. The shortcut is a 1x1 projection whenever the channel count
// or stride changes, and the identity otherwise.
struct BottleneckBlock {
  int ordinal = 256;
  int stride = 1;
};

// Returns the output layer; `in_channels` is the channel count of `from`.
int add_bottleneck(LayerGraph& graph, int from, int in_channels,
                   const BottleneckBlock& block, const std::string& prefix);

// Each layer is a 3x3 conv producing `growth_rate` maps (followed by ReLU)
// whose input is the concatenation of the block input and every earlier
// layer of the block.
struct DenseBlock {
  int num_layers = 30;
  int growth_rate = 12;
};

struct DenseBlockResult {
  int output = 0;
  int channels = 0;
};

DenseBlockResult add_dense_block(LayerGraph& graph, int from, int in_channels,
                                 const DenseBlock& block,
                                 const std::string& prefix);

LayerGraph build_phoclenet(const ArchOptions& options);
LayerGraph build_tpp_phocnet(const ArchOptions& options);
LayerGraph build_phocresnet(const ArchOptions& options);
LayerGraph build_phocdensenet(const ArchOptions& options);
LayerGraph build(ArchKind kind, const ArchOptions& options);

// Smallest width for which every layer of the graph is defined at the given
// height, found by searching shape inference. Returns 0 if none up to limit.
std::size_t minimum_width(const LayerGraph& graph, std::size_t height,
                          std::size_t limit = 4096);

}  // namespace wordspot::arch
