#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wordspot/diff/graph.hpp"

namespace wordspot::diff {

// Cross-correlation of a C x H x W input with F x C x kh x kw filters and
// "same" padding (k - 1) / 2. Output is F x ceil(H / stride) x ceil(W / stride).
// Kernel extents must be odd.
Var conv2d(Graph& g, Var input, Var filters, std::optional<Var> bias,
           int stride = 1);

// Unpadded pooling; output extent is (H - window) / stride + 1. Max pooling
// routes the gradient to the first maximum in row-major window order.
Var max_pool2d(Graph& g, Var input, int window, int stride);
Var avg_pool2d(Graph& g, Var input, int window, int stride);

Var relu(Graph& g, Var input);
Var sigmoid(Graph& g, Var input);

// weights: out x in, bias: out. The input is read as a flat vector.
Var linear(Graph& g, Var input, Var weights, Var bias);

// Inverted dropout: in training mode each unit is zeroed with probability p
// and survivors are scaled by 1 / (1 - p). Identity in evaluation mode.
// Throws kInvalidProbability unless 0 <= p < 1.
Var dropout(Graph& g, Var input, double p);

Var concat_channels(Graph& g, Var a, Var b);
Var concat_channels(Graph& g, std::span<const Var> parts);

// Elementwise sum of two equally shaped arrays.
Var add(Graph& g, Var a, Var b);

enum class TppPooling { kMax, kAverage };

struct TppConfig {
  int levels = 5;
  TppPooling pooling = TppPooling::kMax;

  std::size_t bins() const {
    return static_cast<std::size_t>(levels * (levels + 1) / 2);
  }
};

// Temporal pyramid pooling over the width axis. Level n splits the columns
// into n bins [floor(r W / n), floor((r + 1) W / n)); each bin is pooled over
// its full height. Output has C * sum(1..levels) entries laid out level-major,
// then bin, then channel. Throws kInputTooNarrow when W < levels.
Var tpp(Graph& g, Var input, const TppConfig& config);

inline constexpr double kBceClamp = 1e-7;

// Mean binary cross-entropy of sigmoid outputs against binary targets.
// Probabilities are clamped to [1e-7, 1 - 1e-7] before the logarithm.
Var bce_loss(Graph& g, Var prediction, std::span<const double> target);

}  // namespace wordspot::diff
