#include "wordspot/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "wordspot/error.hpp"
#include "wordspot/text.hpp"

namespace wordspot::data {

std::vector<WordSample> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kDataUnavailable, "cannot open manifest " + path.string());
  }
  const std::filesystem::path base = path.parent_path();
  std::vector<WordSample> samples;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(line_number);
    if (fields.size() != 4) {
      throw Error(ErrorCode::kMalformedRow,
                  where + ": expected 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::kMalformedRow, where + ": empty sample id or path");
    }
    WordSample sample;
    sample.sample_id = std::string(fields[0]);
    sample.transcription = std::string(fields[2]);
    sample.page_id = std::string(fields[3]);
    sample.image_path = std::filesystem::path(std::string(fields[1]));
    if (sample.image_path.is_relative()) sample.image_path = base / sample.image_path;
    if (!ids.insert(sample.sample_id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  where + ": duplicate sample id '" + sample.sample_id + "'");
    }
    if (!std::filesystem::is_regular_file(sample.image_path)) {
      throw Error(ErrorCode::kMissingImage,
                  where + ": image not found: " + sample.image_path.string());
    }
    sample.image = read_png(sample.image_path);
    samples.push_back(std::move(sample));
  }
  return samples;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<WordSample>& samples) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const auto base = path.parent_path();
  for (const auto& s : samples) {
    auto image = s.image_path;
    if (!base.empty()) {
      image = std::filesystem::relative(image, base);
    }
    out << s.sample_id << '\t' << image.generic_string() << '\t'
        << s.transcription << '\t' << s.page_id << '\n';
  }
}

bool page_order_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      // Compare digit runs by value: strip leading zeros, then length, then text.
      auto strip = [](std::string_view s) {
        const auto nz = s.find_first_not_of('0');
        return nz == std::string_view::npos ? std::string_view{} : s.substr(nz);
      };
      const auto na = strip(std::string_view(a).substr(i, ie - i));
      const auto nb = strip(std::string_view(b).substr(j, je - j));
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
      continue;
    }
    if (a[i] != b[j]) return a[i] < b[j];
    ++i;
    ++j;
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

SplitPlan make_page_folds(const std::vector<WordSample>& samples,
                          std::size_t folds, std::size_t pages_per_batch) {
  std::vector<std::string> pages;
  {
    std::set<std::string> seen;
    for (const auto& s : samples) {
      if (seen.insert(s.page_id).second) pages.push_back(s.page_id);
    }
  }
  if (pages.size() != folds * pages_per_batch) {
    throw Error(ErrorCode::kWrongPageCount,
                "expected " + std::to_string(folds * pages_per_batch) +
                    " pages, found " + std::to_string(pages.size()));
  }
  std::sort(pages.begin(), pages.end(), page_order_less);
  std::map<std::string, std::size_t> batch_of;
  for (std::size_t p = 0; p < pages.size(); ++p) {
    batch_of[pages[p]] = p / pages_per_batch;
  }
  SplitPlan plan;
  plan.strategy = SplitStrategy::kCrossValidation;
  plan.folds.resize(folds);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t batch = batch_of[samples[i].page_id];
    for (std::size_t f = 0; f < folds; ++f) {
      (f == batch ? plan.folds[f].test : plan.folds[f].train).push_back(i);
    }
  }
  return plan;
}

SplitPlan make_gw_folds(const std::vector<WordSample>& samples) {
  return make_page_folds(samples, 4, 5);
}

SplitPlan make_official_split(std::size_t train_count, std::size_t test_count) {
  SplitPlan plan;
  plan.strategy = SplitStrategy::kOfficial;
  Fold fold;
  for (std::size_t i = 0; i < train_count; ++i) fold.train.push_back(i);
  for (std::size_t i = 0; i < test_count; ++i) fold.test.push_back(train_count + i);
  plan.folds.push_back(std::move(fold));
  return plan;
}

}  // namespace wordspot::data
