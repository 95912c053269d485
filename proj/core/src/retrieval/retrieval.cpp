#include "wordspot/retrieval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "wordspot/error.hpp"
#include "wordspot/text.hpp"

namespace wordspot::retrieval {
namespace {

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (const double x : v) sum += x * x;
  return std::sqrt(sum);
}

// Shared by cosine_similarity() and rank() so both produce identical bits.
double cosine_from_norms(std::span<const double> a, double norm_a,
                         std::span<const double> b, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw Error(ErrorCode::kZeroVector, "cosine similarity of a zero vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace

void DescriptorSet::add(DescriptorEntry entry) {
  if (!entries_.empty() && entry.descriptor.size() != dimension()) {
    throw Error(ErrorCode::kShapeMismatch,
                "descriptor of '" + entry.sample_id + "' has length " +
                    std::to_string(entry.descriptor.size()) + ", expected " +
                    std::to_string(dimension()));
  }
  if (!ids_.insert(entry.sample_id).second) {
    throw Error(ErrorCode::kDuplicateId,
                "duplicate sample id '" + entry.sample_id + "'");
  }
  norms_.push_back(l2_norm(entry.descriptor));
  entries_.push_back(std::move(entry));
}

void DescriptorSet::scale(double factor) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (double& v : entries_[i].descriptor) v *= factor;
    norms_[i] = l2_norm(entries_[i].descriptor);
  }
}

void write_descriptors(std::ostream& out, const DescriptorSet& set) {
  for (const auto& e : set.entries()) {
    out << e.sample_id << '\t' << e.transcription;
    for (const double v : e.descriptor) out << '\t' << text::format_double(v);
    out << '\n';
  }
}

DescriptorSet read_descriptors(std::istream& in) {
  DescriptorSet set;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() < 3) {
      throw Error(ErrorCode::kMalformedRow,
                  "descriptor line " + std::to_string(line_number) +
                      ": expected id, transcription and values");
    }
    DescriptorEntry entry;
    entry.sample_id = std::string(fields[0]);
    entry.transcription = std::string(fields[1]);
    entry.descriptor.reserve(fields.size() - 2);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      double v = 0.0;
      if (!text::parse_double(fields[i], v)) {
        throw Error(ErrorCode::kMalformedRow,
                    "descriptor line " + std::to_string(line_number) +
                        ": bad value '" + std::string(fields[i]) + "'");
      }
      entry.descriptor.push_back(v);
    }
    set.add(std::move(entry));
  }
  return set;
}

void save_descriptors(const std::filesystem::path& path,
                      const DescriptorSet& set) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_descriptors(out, set);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return read_descriptors(in);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "cosine_similarity: lengths " + std::to_string(a.size()) +
                    " and " + std::to_string(b.size()));
  }
  return cosine_from_norms(a, l2_norm(a), b, l2_norm(b));
}

std::vector<std::size_t> select_qbe_queries(const DescriptorSet& test) {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : test.entries()) ++counts[e.transcription];
  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (counts[test[i].transcription] >= 2) queries.push_back(i);
  }
  return queries;
}

std::vector<std::string> select_qbs_queries(
    const DescriptorSet& test, const std::set<std::string>& stop_words) {
  std::set<std::string> seen;
  std::vector<std::string> queries;
  for (const auto& e : test.entries()) {
    if (stop_words.contains(e.transcription)) continue;
    if (seen.insert(e.transcription).second) queries.push_back(e.transcription);
  }
  return queries;
}

double average_precision(std::span<const std::uint8_t> relevance,
                         std::size_t relevant_count) {
  if (relevant_count == 0) {
    throw Error(ErrorCode::kNoRelevantItems, "query has no relevant items");
  }
  const std::size_t found = static_cast<std::size_t>(
      std::count_if(relevance.begin(), relevance.end(),
                    [](std::uint8_t r) { return r != 0; }));
  if (found > relevant_count) {
    throw Error(ErrorCode::kInvalidConfig,
                "relevance list holds more hits than the relevant count");
  }
  // Precision at every rank, then the running maximum from the tail.
  std::vector<double> precision(relevance.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    hits += relevance[k] ? 1 : 0;
    precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  for (std::size_t k = relevance.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (relevance[k]) sum += precision[k];
  }
  return sum / static_cast<double>(relevant_count);
}

const char* to_string(QueryMode mode) {
  return mode == QueryMode::kQbE ? "qbe" : "qbs";
}

std::optional<QueryMode> parse_mode(std::string_view text) {
  if (text == "qbe") return QueryMode::kQbE;
  if (text == "qbs") return QueryMode::kQbS;
  return std::nullopt;
}

RankedList rank(const DescriptorSet& set, std::span<const double> query,
                const std::string& query_transcription,
                std::optional<std::size_t> exclude) {
  if (query.size() != set.dimension()) {
    throw Error(ErrorCode::kShapeMismatch,
                "query length " + std::to_string(query.size()) +
                    " differs from descriptor length " +
                    std::to_string(set.dimension()));
  }
  const double query_norm = l2_norm(query);
  RankedList list;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (exclude && *exclude == i) continue;
    scored.emplace_back(
        cosine_from_norms(query, query_norm, set[i].descriptor, set.norm(i)), i);
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return set[a.second].sample_id < set[b.second].sample_id;
  });
  for (const auto& [score, index] : scored) {
    const bool hit = set[index].transcription == query_transcription;
    list.items.push_back(index);
    list.scores.push_back(score);
    list.relevant.push_back(hit ? 1 : 0);
    list.relevant_count += hit ? 1 : 0;
  }
  if (list.relevant_count > 0) {
    list.average_precision =
        average_precision(list.relevant, list.relevant_count);
  }
  return list;
}

Evaluation evaluate(const DescriptorSet& set, QueryMode mode,
                    const std::set<std::string>& stop_words,
                    const phoc::PhocConfig& phoc_config) {
  Evaluation result;
  result.mode = mode;
  if (mode == QueryMode::kQbE) {
    for (const std::size_t q : select_qbe_queries(set)) {
      const auto& entry = set[q];
      if (entry.transcription.empty() || stop_words.contains(entry.transcription)) {
        continue;
      }
      RankedList list = rank(set, entry.descriptor, entry.transcription, q);
      list.query = entry.sample_id;
      result.queries.push_back(std::move(list));
    }
  } else {
    for (const std::string& word : select_qbs_queries(set, stop_words)) {
      if (word.empty()) continue;
      const auto query = phoc::encode(word, phoc_config).as_real();
      if (query.size() != set.dimension()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "PHOC dimension " + std::to_string(query.size()) +
                        " differs from descriptor dimension " +
                        std::to_string(set.dimension()));
      }
      RankedList list = rank(set, query, word);
      list.query = word;
      result.queries.push_back(std::move(list));
    }
  }
  if (result.queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet,
                std::string("no ") + to_string(mode) + " queries in the test set");
  }
  double sum = 0.0;
  for (const auto& q : result.queries) sum += q.average_precision;
  result.mean_average_precision = sum / static_cast<double>(result.queries.size());
  return result;
}

void write_report(std::ostream& out, const Evaluation& evaluation) {
  const char* mode = to_string(evaluation.mode);
  out << "mode,query,R,AP\n";
  for (const auto& q : evaluation.queries) {
    out << mode << ',' << q.query << ',' << q.relevant_count << ','
        << text::format_double(q.average_precision) << '\n';
  }
  out << mode << ",*mAP*," << evaluation.queries.size() << ','
      << text::format_double(evaluation.mean_average_precision) << '\n';
}

ReportSummary read_report_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string line, last;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) last = line;
  }
  const auto fields = text::split(text::trim(last), ',');
  ReportSummary summary;
  long long count = 0;
  const auto mode = fields.size() == 4 ? parse_mode(fields[0]) : std::nullopt;
  if (!mode || fields[1] != "*mAP*" || !text::parse_int(fields[2], count) ||
      !text::parse_double(fields[3], summary.mean_average_precision)) {
    throw Error(ErrorCode::kMalformedRow,
                path.string() + ": missing mAP summary row");
  }
  summary.mode = *mode;
  summary.queries = static_cast<std::size_t>(count);
  return summary;
}

std::set<std::string> load_stop_words(const std::filesystem::path& path,
                                      const phoc::PhocConfig& phoc_config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto word =
        phoc::normalize_transcription(text::trim(line), phoc_config);
    if (!word.empty()) words.insert(word);
  }
  return words;
}

}  // namespace wordspot::retrieval
