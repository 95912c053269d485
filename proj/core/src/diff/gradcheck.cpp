#include "wordspot/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wordspot/error.hpp"

namespace wordspot::diff {
namespace {

struct Evaluation {
  double value;
  std::uint64_t signature;
};

Evaluation evaluate(const ScalarFunction& fn,
                    std::span<const CheckedBlock> blocks,
                    const GradCheckOptions& options) {
  Graph graph(options.mode, options.graph_seed);
  std::vector<Var> vars;
  vars.reserve(blocks.size());
  for (const CheckedBlock& block : blocks) {
    vars.push_back(graph.parameter(*block.value, nullptr));
  }
  const Var out = fn(graph, vars);
  if (graph.value(out).size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "grad_check needs a scalar output");
  }
  return {graph.value(out)[0], graph.branch_signature()};
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& fn,
                           std::span<const CheckedBlock> blocks,
                           const GradCheckOptions& options) {
  // Analytic pass.
  std::vector<Array> analytic;
  analytic.reserve(blocks.size());
  for (const CheckedBlock& block : blocks) analytic.emplace_back(block.value->shape());
  std::uint64_t base_signature = 0;
  {
    Graph graph(options.mode, options.graph_seed);
    std::vector<Var> vars;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      vars.push_back(graph.parameter(*blocks[i].value, &analytic[i]));
    }
    const Var out = fn(graph, vars);
    graph.backward(out);
    base_signature = graph.branch_signature();
  }

  std::mt19937_64 sampler(options.sample_seed);
  GradCheckReport report;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const CheckedBlock& block = blocks[b];
    Array& theta = *block.value;
    BlockReport block_report;
    block_report.name = block.name;

    std::vector<std::size_t> order(theta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t wanted = theta.size();
    if (options.max_entries_per_block != 0 &&
        options.max_entries_per_block < theta.size()) {
      std::shuffle(order.begin(), order.end(), sampler);
      wanted = options.max_entries_per_block;
    }

    std::size_t resamples_left = options.max_resamples;
    for (std::size_t pos = 0;
         pos < order.size() && block_report.checked < wanted; ++pos) {
      const std::size_t j = order[pos];
      const double original = theta[j];
      theta[j] = original + options.step;
      const Evaluation plus = evaluate(fn, blocks, options);
      theta[j] = original - options.step;
      const Evaluation minus = evaluate(fn, blocks, options);
      theta[j] = original;

      if (plus.signature != base_signature ||
          minus.signature != base_signature) {
        ++block_report.skipped_kinks;
        if (resamples_left == 0) break;
        --resamples_left;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * options.step);
      const double exact = analytic[b][j];
      const double abs_error = std::abs(exact - numeric);
      const double denom = std::max(
          {std::abs(exact), std::abs(numeric), options.denominator_floor});
      block_report.max_absolute_error =
          std::max(block_report.max_absolute_error, abs_error);
      block_report.max_relative_error =
          std::max(block_report.max_relative_error, abs_error / denom);
      ++block_report.checked;
    }
    report.max_relative_error =
        std::max(report.max_relative_error, block_report.max_relative_error);
    report.blocks.push_back(std::move(block_report));
  }
  report.passed = report.max_relative_error < options.tolerance;
  for (const BlockReport& br : report.blocks) {
    if (br.checked == 0 && !blocks.empty()) report.passed = false;
  }
  return report;
}

}  // namespace wordspot::diff
