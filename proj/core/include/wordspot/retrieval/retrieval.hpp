#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wordspot/phoc.hpp"

namespace wordspot::retrieval {

struct DescriptorEntry {
  std::string sample_id;
  std::string transcription;  // normalized
  std::vector<double> descriptor;
};

// Retrieval database. All descriptors share one length and sample ids are
// unique; add() enforces both.
class DescriptorSet {
 public:
  void add(DescriptorEntry entry);

  const std::vector<DescriptorEntry>& entries() const { return entries_; }
  const DescriptorEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dimension() const {
    return entries_.empty() ? 0 : entries_.front().descriptor.size();
  }

  // Euclidean norm of entry i, cached on insertion.
  double norm(std::size_t i) const { return norms_[i]; }

  // Multiplies every descriptor by `factor`.
  void scale(double factor);

 private:
  std::vector<DescriptorEntry> entries_;
  std::vector<double> norms_;
  std::set<std::string> ids_;
};

// Exchange format: one record per line,
//   sample_id <TAB> transcription <TAB> v_1 <TAB> ... <TAB> v_D
// Floats are written in shortest round-trip form.
void write_descriptors(std::ostream& out, const DescriptorSet& set);
DescriptorSet read_descriptors(std::istream& in);
void save_descriptors(const std::filesystem::path& path, const DescriptorSet& set);
DescriptorSet load_descriptors(const std::filesystem::path& path);

// a.b / (|a| |b|). Throws kZeroVector for an all-zero argument and
// kShapeMismatch for differing lengths.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Indices of items whose transcription occurs at least twice.
std::vector<std::size_t> select_qbe_queries(const DescriptorSet& test);

// Distinct transcriptions in first-occurrence order, minus stop words.
std::vector<std::string> select_qbs_queries(
    const DescriptorSet& test, const std::set<std::string>& stop_words = {});

// Interpolated average precision of a ranked relevance list:
//   AP = (1/R) sum_{k relevant} max_{k' >= k} precision(k').
// Throws kNoRelevantItems when relevant_count is 0.
double average_precision(std::span<const std::uint8_t> relevance,
                         std::size_t relevant_count);

enum class QueryMode { kQbE, kQbS };
const char* to_string(QueryMode mode);
std::optional<QueryMode> parse_mode(std::string_view text);

struct RankedList {
  std::string query;  // sample id (QbE) or query string (QbS)
  std::vector<std::size_t> items;
  std::vector<double> scores;
  std::vector<std::uint8_t> relevant;
  std::size_t relevant_count = 0;
  double average_precision = 0.0;
};

// Ranks every item except `exclude` by descending cosine similarity to
// `query`; equal scores are ordered by ascending sample id. Relevance is
// transcription equality with `query_transcription`.
RankedList rank(const DescriptorSet& set, std::span<const double> query,
                const std::string& query_transcription,
                std::optional<std::size_t> exclude = std::nullopt);

struct Evaluation {
  QueryMode mode = QueryMode::kQbE;
  std::vector<RankedList> queries;
  double mean_average_precision = 0.0;
};

// QbE: every item whose transcription occurs at least twice is a query
// against the rest of the set. QbS: every distinct transcription, encoded as
// a PHOC vector, is a query against the whole set. Stop words never serve as
// queries in either mode. Throws kEmptyQuerySet when nothing remains.
Evaluation evaluate(const DescriptorSet& set, QueryMode mode,
                    const std::set<std::string>& stop_words,
                    const phoc::PhocConfig& phoc_config);

// CSV with header "mode,query,R,AP" and a final summary row
// "<mode>,*mAP*,<query count>,<mAP>".
void write_report(std::ostream& out, const Evaluation& evaluation);

struct ReportSummary {
  QueryMode mode = QueryMode::kQbE;
  std::size_t queries = 0;
  double mean_average_precision = 0.0;
};
ReportSummary read_report_summary(const std::filesystem::path& path);

// One word per line, normalized like transcriptions; blank lines ignored.
std::set<std::string> load_stop_words(const std::filesystem::path& path,
                                      const phoc::PhocConfig& phoc_config);

}  // namespace wordspot::retrieval
