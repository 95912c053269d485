#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wordspot/data/image.hpp"

namespace wordspot::data {

struct WordSample {
  std::string sample_id;
  std::string transcription;  // raw, as written in the manifest
  std::string page_id;
  std::filesystem::path image_path;
  GrayImage image;
};

// Tab-separated rows: sample_id, image_path, transcription, page_id.
// Relative image paths resolve against the manifest's directory. Blank lines
// and lines starting with '#' are skipped. Errors: kMalformedRow (with line
// number), kMissingImage (with path), kDuplicateId.
std::vector<WordSample> load_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path,
                    const std::vector<WordSample>& samples);

struct Fold {
  std::vector<std::size_t> train;  // indices into the sample list
  std::vector<std::size_t> test;
};

enum class SplitStrategy { kOfficial, kCrossValidation };

struct SplitPlan {
  SplitStrategy strategy = SplitStrategy::kOfficial;
  std::vector<Fold> folds;
};

// Orders page ids with digit runs compared numerically ("p2" < "p10").
bool page_order_less(const std::string& a, const std::string& b);

// Sorts the distinct pages, cuts them into `folds` consecutive batches of
// `pages_per_batch`; fold i tests on batch i and trains on the others.
// Throws kWrongPageCount unless there are exactly folds * pages_per_batch
// pages.
SplitPlan make_page_folds(const std::vector<WordSample>& samples,
                          std::size_t folds, std::size_t pages_per_batch);

// George Washington protocol: 20 pages, four folds of five pages.
SplitPlan make_gw_folds(const std::vector<WordSample>& samples);

// Pre-partitioned benchmarks: samples [0, train_count) train, the rest test.
SplitPlan make_official_split(std::size_t train_count, std::size_t test_count);

}  // namespace wordspot::data
