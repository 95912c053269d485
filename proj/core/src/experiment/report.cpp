#include "wordspot/experiment/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <ostream>

#include "wordspot/arch/builders.hpp"
#include "wordspot/error.hpp"
#include "wordspot/text.hpp"

namespace wordspot::experiment {

std::optional<Benchmark> parse_benchmark(std::string_view name) {
  if (name == "gw") return Benchmark::kGeorgeWashington;
  if (name == "iam") return Benchmark::kIam;
  if (name == "botany") return Benchmark::kBotany;
  return std::nullopt;
}

std::string_view display_name(Benchmark benchmark) {
  switch (benchmark) {
    case Benchmark::kGeorgeWashington: return "George Washington";
    case Benchmark::kIam: return "IAM";
    case Benchmark::kBotany: return "Botany";
  }
  return "?";
}

void write_results_table(std::ostream& out, std::span<const ResultCell> cells) {
  out << "Architecture/Method,George Washington,,IAM,,Botany,\n"
      << ",QbE,QbS,QbE,QbS,QbE,QbS\n";

  std::vector<std::string> rows;
  for (const auto kind : {arch::ArchKind::kLeNet, arch::ArchKind::kTppPhocNet,
                          arch::ArchKind::kPhocResNet, arch::ArchKind::kPhocDenseNet}) {
    const std::string name(arch::display_name(kind));
    if (std::any_of(cells.begin(), cells.end(),
                    [&](const ResultCell& c) { return c.method == name; })) {
      rows.push_back(name);
    }
  }
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.method) == rows.end()) {
      rows.push_back(c.method);
    }
  }

  std::map<std::string, std::array<std::optional<double>, 6>> values;
  for (const auto& c : cells) {
    const auto column = static_cast<std::size_t>(c.benchmark) * 2 +
                        (c.mode == retrieval::QueryMode::kQbS ? 1 : 0);
    values[c.method][column] = c.mean_average_precision;
  }
  for (const auto& row : rows) {
    out << row;
    for (const auto& v : values[row]) {
      out << ',' << (v ? text::format_fixed(*v * 100.0, 2) : std::string("-"));
    }
    out << '\n';
  }
}

std::vector<ResultCell> load_result_listing(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<ResultCell> cells;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (f.size() != 3) {
      throw Error(ErrorCode::kMalformedRow, where + ": expected method, benchmark, report");
    }
    const auto benchmark = parse_benchmark(text::trim(f[1]));
    if (!benchmark) {
      throw Error(ErrorCode::kMalformedRow,
                  where + ": unknown benchmark '" + std::string(f[1]) + "'");
    }
    std::filesystem::path report{std::string(text::trim(f[2]))};
    if (report.is_relative()) report = path.parent_path() / report;
    const auto summary = retrieval::read_report_summary(report);
    cells.push_back({std::string(text::trim(f[0])), *benchmark, summary.mode,
                     summary.mean_average_precision});
  }
  return cells;
}

}  // namespace wordspot::experiment
