#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordspot/retrieval/retrieval.hpp"

namespace wordspot::experiment {

enum class Benchmark { kGeorgeWashington, kIam, kBotany };

// "gw", "iam", "botany".
std::optional<Benchmark> parse_benchmark(std::string_view name);
std::string_view display_name(Benchmark benchmark);

struct ResultCell {
  std::string method;  // row label, e.g. "TPP-PHOCNet"
  Benchmark benchmark = Benchmark::kGeorgeWashington;
  retrieval::QueryMode mode = retrieval::QueryMode::kQbE;
  double mean_average_precision = 0.0;  // in [0, 1]
};

// Two header rows
//   Architecture/Method,George Washington,,IAM,,Botany,
//   ,QbE,QbS,QbE,QbS,QbE,QbS
// then one row per method with mAP in percent, two decimals, "-" for gaps.
// The four architectures come first in their canonical order, any other
// method follows in order of first appearance. A later cell for the same
// (method, benchmark, mode) replaces an earlier one.
void write_results_table(std::ostream& out, std::span<const ResultCell> cells);

// Tab-separated "method, benchmark, eval report path" rows; each report's
// summary row supplies the mode and the mAP. Relative paths resolve against
// the listing's directory.
std::vector<ResultCell> load_result_listing(const std::filesystem::path& path);

}  // namespace wordspot::experiment
