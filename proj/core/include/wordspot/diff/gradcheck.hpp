#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wordspot/diff/graph.hpp"

namespace wordspot::diff {

// A tensor the checker perturbs. The checker owns no data; `value` is edited
// in place and restored.
struct CheckedBlock {
  std::string name;
  Array* value = nullptr;
};

// Builds a scalar-valued graph from one Var per checked block, in order.
using ScalarFunction =
    std::function<Var(Graph& graph, std::span<const Var> blocks)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative errors use max(|analytic|, |numeric|, floor) as denominator.
  double denominator_floor = 1e-6;
  // 0 checks every entry; otherwise a random sample of this many per block.
  std::size_t max_entries_per_block = 0;
  // Extra attempts per block to replace entries whose perturbation crossed a
  // relu or max-pool kink.
  std::size_t max_resamples = 64;
  Mode mode = Mode::kEval;
  std::uint64_t graph_seed = 0;
  std::uint64_t sample_seed = 1;
};

struct BlockReport {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
};

struct GradCheckReport {
  std::vector<BlockReport> blocks;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Compares backward() against central differences of `fn`.
GradCheckReport grad_check(const ScalarFunction& fn,
                           std::span<const CheckedBlock> blocks,
                           const GradCheckOptions& options = {});

}  // namespace wordspot::diff
