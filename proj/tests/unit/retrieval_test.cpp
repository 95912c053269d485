#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles/retrieval_oracle.hpp"
#include "wordspot/error.hpp"
#include "wordspot/retrieval/retrieval.hpp"

using namespace wordspot;
using namespace wordspot::retrieval;

namespace {

// Random instance: a handful of words, noisy descriptors, some exact ties.
std::vector<oracle::Item> random_instance(std::mt19937_64& rng, std::size_t max_items,
                                          std::size_t dim) {
  const std::vector<std::string> words = {"the", "and", "of", "fort", "camp", "sir"};
  std::uniform_int_distribution<std::size_t> count(2, max_items);
  std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const std::size_t n = count(rng);
  std::vector<oracle::Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    oracle::Item it;
    it.id = "s" + std::to_string((i * 7919) % 1000);
    while (std::any_of(items.begin(), items.end(), [&](const auto& o) { return o.id == it.id; })) {
      it.id += "x";
    }
    it.word = words[word(rng)];
    if (i > 0 && rng() % 6 == 0) {
      it.v = items[rng() % i].v;  // duplicate descriptor: a score tie
    } else {
      it.v.resize(dim);
      for (auto& x : it.v) x = u(rng);
    }
    items.push_back(std::move(it));
  }
  return items;
}

DescriptorSet to_set(const std::vector<oracle::Item>& items) {
  DescriptorSet set;
  for (const auto& it : items) set.add({it.id, it.word, it.v});
  return set;
}

}  // namespace

TEST(AveragePrecision, HandCases) {
  const std::vector<std::uint8_t> a{1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(average_precision(a, 2), 0.75);
  const std::vector<std::uint8_t> b{0, 1, 1};
  EXPECT_DOUBLE_EQ(average_precision(b, 2), 2.0 / 3.0);
  const std::vector<std::uint8_t> perfect{1, 1, 0, 0};
  EXPECT_EQ(average_precision(perfect, 2), 1.0);
}

TEST(AveragePrecision, NoRelevantItemsThrows) {
  const std::vector<std::uint8_t> none{0, 0};
  try {
    average_precision(none, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoRelevantItems);
  }
}

TEST(AveragePrecision, MatchesBruteForceOnRandomLists) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<std::uint8_t> rel(n);
    std::vector<int> rel_i(n);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rel[i] = (rng() % 3 == 0) ? 1 : 0;
      rel_i[i] = rel[i];
      r += rel[i];
    }
    if (r == 0) continue;
    const std::size_t missing = rng() % 3;  // relevant items never retrieved
    ASSERT_EQ(average_precision(rel, r + missing), oracle::average_precision(rel_i, r + missing));
  }
}

TEST(Cosine, BasicsAndErrors) {
  const std::vector<double> a{1, 0}, b{0, 2}, c{3, 0}, z{0, 0};
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_THROW(cosine_similarity(a, z), Error);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{1, 2, 3}), Error);
}

TEST(Ranking, ScoreTiesBreakByAscendingId) {
  DescriptorSet set;
  set.add({"b", "x", {1, 0}});
  set.add({"a", "x", {1, 0}});
  set.add({"c", "y", {0, 1}});
  const std::vector<double> q{1, 0};
  const auto list = rank(set, q, "x");
  EXPECT_EQ(list.items, (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(list.relevant_count, 2u);
  EXPECT_EQ(list.average_precision, 1.0);
}

TEST(Ranking, QueryNeverAppearsInItsOwnQbeList) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto set = to_set(random_instance(rng, 30, 6));
    for (const auto q : select_qbe_queries(set)) {
      const auto list = rank(set, set[q].descriptor, set[q].transcription, q);
      EXPECT_EQ(std::count(list.items.begin(), list.items.end(), q), 0);
      EXPECT_EQ(list.items.size(), set.size() - 1);
    }
  }
}

TEST(QuerySelection, MatchesEnumerationOracles) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = random_instance(rng, 40, 3);
    const auto set = to_set(items);
    EXPECT_EQ(select_qbe_queries(set), oracle::qbe_queries(items));
    EXPECT_EQ(select_qbs_queries(set), oracle::qbs_queries(items));
    const std::set<std::string> stop{"the", "of"};
    EXPECT_EQ(select_qbs_queries(set, stop), oracle::qbs_queries(items, stop));
  }
}

TEST(QuerySelection, SingletonsAreNotQbeQueries) {
  DescriptorSet set;
  set.add({"1", "alpha", {1, 0}});
  set.add({"2", "beta", {0, 1}});
  set.add({"3", "beta", {1, 1}});
  EXPECT_EQ(select_qbe_queries(set), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(select_qbs_queries(set), (std::vector<std::string>{"alpha", "beta"}));
}

TEST(Evaluate, MatchesBruteForceEvaluator) {
  std::mt19937_64 rng(34);
  const phoc::PhocConfig phoc_cfg;
  for (int trial = 0; trial < 100; ++trial) {
    auto items = random_instance(rng, 50, phoc_cfg.dimension());
    const auto set = to_set(items);
    const std::set<std::string> stop = (trial % 2) ? std::set<std::string>{"and"}
                                                   : std::set<std::string>{};
    const auto qbe_idx = oracle::qbe_queries(items, stop);
    if (!qbe_idx.empty()) {
      double sum = 0.0;
      for (const auto q : qbe_idx) sum += oracle::query_ap(items, items[q].v, items[q].word, q);
      const auto e = evaluate(set, QueryMode::kQbE, stop, phoc_cfg);
      ASSERT_EQ(e.queries.size(), qbe_idx.size());
      for (std::size_t i = 0; i < qbe_idx.size(); ++i) {
        ASSERT_EQ(e.queries[i].average_precision,
                  oracle::query_ap(items, items[qbe_idx[i]].v, items[qbe_idx[i]].word,
                                   qbe_idx[i]));
      }
      ASSERT_EQ(e.mean_average_precision, sum / static_cast<double>(qbe_idx.size()));
    }
    const auto qbs_words = oracle::qbs_queries(items, stop);
    double sum = 0.0;
    for (const auto& w : qbs_words) {
      const auto bits = phoc::encode(w, phoc_cfg).as_real();
      sum += oracle::query_ap(items, bits, w, static_cast<std::size_t>(-1));
    }
    const auto e = evaluate(set, QueryMode::kQbS, stop, phoc_cfg);
    ASSERT_EQ(e.queries.size(), qbs_words.size());
    ASSERT_EQ(e.mean_average_precision, sum / static_cast<double>(qbs_words.size()));
  }
}

TEST(Evaluate, StopWordsAreNeverQueries) {
  DescriptorSet set;
  set.add({"1", "the", {1, 0}});
  set.add({"2", "the", {1, 0.1}});
  set.add({"3", "fort", {0, 1}});
  set.add({"4", "fort", {0.1, 1}});
  const phoc::PhocConfig cfg = phoc::make_config("efhortx", {1});
  const auto e = evaluate(set, QueryMode::kQbE, {"the"}, cfg);
  ASSERT_EQ(e.queries.size(), 2u);
  EXPECT_EQ(e.queries[0].query, "3");
  EXPECT_THROW(evaluate(set, QueryMode::kQbE, {"the", "fort"}, cfg), Error);
}

TEST(Evaluate, QbsChecksDescriptorDimension) {
  DescriptorSet set;
  set.add({"1", "ab", {1, 0, 1}});
  EXPECT_THROW(evaluate(set, QueryMode::kQbS, {}, phoc::PhocConfig{}), Error);
}

TEST(DescriptorSet, RejectsDuplicatesAndLengthMismatch) {
  DescriptorSet set;
  set.add({"1", "a", {1, 2}});
  EXPECT_THROW(set.add({"1", "b", {1, 2}}), Error);
  EXPECT_THROW(set.add({"2", "b", {1, 2, 3}}), Error);
}

TEST(DescriptorIo, RoundTripIsBitExact) {
  std::mt19937_64 rng(35);
  const auto set = to_set(random_instance(rng, 20, 17));
  std::stringstream buffer;
  write_descriptors(buffer, set);
  const auto back = read_descriptors(buffer);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back[i].sample_id, set[i].sample_id);
    EXPECT_EQ(back[i].transcription, set[i].transcription);
    EXPECT_EQ(std::memcmp(back[i].descriptor.data(), set[i].descriptor.data(),
                          set[i].descriptor.size() * sizeof(double)),
              0);
  }
}

TEST(DescriptorIo, MalformedRowsAreReported) {
  std::stringstream bad("id\tword\t0.5\tnot-a-number\n");
  EXPECT_THROW(read_descriptors(bad), Error);
}

TEST(Report, CsvLayoutAndSummary) {
  DescriptorSet set;
  set.add({"1", "ab", {1, 0}});
  set.add({"2", "ab", {0.9, 0.1}});
  set.add({"3", "cd", {0, 1}});
  const auto e = evaluate(set, QueryMode::kQbE, {}, phoc::make_config("abcd", {1}));
  std::stringstream out;
  write_report(out, e);
  EXPECT_EQ(out.str(), "mode,query,R,AP\nqbe,1,1,1\nqbe,2,1,1\nqbe,*mAP*,2,1\n");

  const auto path = std::filesystem::temp_directory_path() / "wordspot_report_test.csv";
  {
    std::ofstream f(path);
    f << out.str();
  }
  const auto summary = read_report_summary(path);
  EXPECT_EQ(summary.mode, QueryMode::kQbE);
  EXPECT_EQ(summary.queries, 2u);
  EXPECT_EQ(summary.mean_average_precision, 1.0);
  std::filesystem::remove(path);
}
