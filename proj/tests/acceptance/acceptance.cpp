// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/adam_oracle.hpp"
#include "oracles/phoc_oracle.hpp"
#include "oracles/retrieval_oracle.hpp"
#include "wordspot/arch/builders.hpp"
#include "wordspot/arch/network.hpp"
#include "wordspot/data/dataset.hpp"
#include "wordspot/diff/adam.hpp"
#include "wordspot/diff/gradcheck.hpp"
#include "wordspot/diff/ops.hpp"
#include "wordspot/error.hpp"
#include "wordspot/experiment/checkpoint.hpp"
#include "wordspot/experiment/config.hpp"
#include "wordspot/experiment/trainer.hpp"
#include "wordspot/phoc.hpp"
#include "wordspot/retrieval/retrieval.hpp"

namespace fs = std::filesystem;
using namespace wordspot;

namespace {

// Tolerances and budgets.
constexpr double kPhocBudgetSeconds = 5.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
constexpr double kQbsTarget = 0.90;
constexpr double kQbeTarget = 0.80;
constexpr double kTrainBudgetSeconds = 15.0 * 60.0;
constexpr double kAdamFirstStepRelTol = 1e-7;
constexpr double kAdamTraceTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string random_word(std::mt19937_64& rng, std::string_view alphabet, std::size_t lo,
                        std::size_t hi) {
  std::uniform_int_distribution<std::size_t> len(lo, hi);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string w(len(rng), ' ');
  for (auto& c : w) c = alphabet[pick(rng)];
  return w;
}

diff::Array random_array(diff::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  diff::Array a(std::move(shape));
  for (auto& v : a.storage()) v = u(rng);
  return a;
}

// ---- 1 ---------------------------------------------------------------------

Outcome phoc_oracle_equivalence() {
  const phoc::PhocConfig cfg;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto word = random_word(rng, cfg.alphabet, 1, 12);
    const auto v = phoc::encode(word, cfg);
    const std::vector<int> bits(v.bits.begin(), v.bits.end());
    if (bits != oracle::phoc(word, cfg.alphabet, cfg.levels)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && cfg.dimension() == 540 && secs < kPhocBudgetSeconds,
          "1000 words, " + std::to_string(mismatches) + " mismatches, dim " +
              std::to_string(cfg.dimension()) + ", " + fmt("%.2f s", secs)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome phoc_home_example() {
  const phoc::PhocConfig cfg;
  const auto v = phoc::encode("home", cfg);
  // Level 2 starts after the 36 level-1 bits; region r adds r * 36.
  const std::size_t base = 36;
  const auto idx = [&](int region, char c) {
    return base + static_cast<std::size_t>(region) * 36 + cfg.alphabet.find(c);
  };
  std::vector<std::size_t> got;
  for (std::size_t i = base; i < base + 72; ++i) {
    if (v.bits[i]) got.push_back(i);
  }
  const std::vector<std::size_t> want = {idx(0, 'h'), idx(0, 'o'), idx(1, 'e'), idx(1, 'm')};
  std::string listed;
  for (const auto i : got) listed += (listed.empty() ? "" : " ") + std::to_string(i);
  return {got == want, "level-2 bits {" + listed + "} = ho | me"};
}

// ---- 3 ---------------------------------------------------------------------

diff::Var project(diff::Graph& g, diff::Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto w = g.input(random_array({1, g.value(x).size()}, rng));
  return diff::linear(g, x, w, g.input(diff::Array({1})));
}

diff::GradCheckReport check_blocks(const diff::ScalarFunction& fn, std::vector<diff::Array>& v,
                                   diff::GradCheckOptions opt = {}) {
  std::vector<diff::CheckedBlock> blocks;
  for (std::size_t i = 0; i < v.size(); ++i) blocks.push_back({"b" + std::to_string(i), &v[i]});
  return diff::grad_check(fn, blocks, opt);
}

Outcome gradient_checks() {
  using diff::Graph;
  using diff::Var;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  std::string worst_name;
  bool all = true;
  const auto record = [&](const std::string& name, const diff::GradCheckReport& r) {
    all = all && r.passed && r.max_relative_error < kGradTolerance;
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = name;
    }
  };

  using Unary = std::function<Var(Graph&, Var)>;
  const std::vector<std::pair<std::string, Unary>> unary = {
      {"max_pool", [](Graph& g, Var x) { return diff::max_pool2d(g, x, 2, 2); }},
      {"avg_pool", [](Graph& g, Var x) { return diff::avg_pool2d(g, x, 3, 1); }},
      {"relu", [](Graph& g, Var x) { return diff::relu(g, x); }},
      {"sigmoid", [](Graph& g, Var x) { return diff::sigmoid(g, x); }},
      {"tpp_max", [](Graph& g, Var x) { return diff::tpp(g, x, {4, diff::TppPooling::kMax}); }},
      {"tpp_avg",
       [](Graph& g, Var x) { return diff::tpp(g, x, {3, diff::TppPooling::kAverage}); }},
  };
  for (const auto& [name, op] : unary) {
    std::vector<diff::Array> v{random_array({2, 7, 9}, rng)};
    record(name, check_blocks([&](Graph& g, std::span<const Var> x) {
             return project(g, op(g, x[0]), 1);
           }, v));
  }
  for (const int stride : {1, 2}) {
    std::vector<diff::Array> v{random_array({2, 6, 7}, rng), random_array({3, 2, 3, 3}, rng),
                               random_array({3}, rng)};
    record("conv2d", check_blocks([&](Graph& g, std::span<const Var> x) {
             return project(g, diff::conv2d(g, x[0], x[1], x[2], stride), 2);
           }, v));
  }
  {
    std::vector<diff::Array> v{random_array({6}, rng), random_array({4, 6}, rng),
                               random_array({4}, rng)};
    record("linear", check_blocks([](Graph& g, std::span<const Var> x) {
             return project(g, diff::linear(g, x[0], x[1], x[2]), 3);
           }, v));
  }
  {
    std::vector<diff::Array> v{random_array({2, 4, 4}, rng), random_array({2, 4, 4}, rng)};
    diff::GradCheckOptions train;
    train.mode = diff::Mode::kTrain;
    train.graph_seed = 7;
    record("dropout", check_blocks([](Graph& g, std::span<const Var> x) {
             return project(g, diff::dropout(g, x[0], 0.5), 4);
           }, v, train));
    record("concat", check_blocks([](Graph& g, std::span<const Var> x) {
             return project(g, diff::concat_channels(g, x[0], x[1]), 5);
           }, v));
    record("add", check_blocks([](Graph& g, std::span<const Var> x) {
             return project(g, diff::add(g, x[0], x[1]), 6);
           }, v));
  }
  {
    std::vector<diff::Array> v{random_array({12}, rng, 0.05, 0.95)};
    std::vector<double> t(12);
    for (auto& x : t) x = (rng() & 1) ? 1.0 : 0.0;
    record("bce", check_blocks([&](Graph& g, std::span<const Var> x) {
             return diff::bce_loss(g, x[0], t);
           }, v));
  }

  for (const auto kind : {arch::ArchKind::kLeNet, arch::ArchKind::kTppPhocNet,
                          arch::ArchKind::kPhocResNet, arch::ArchKind::kPhocDenseNet}) {
    arch::ArchOptions o;
    o.width_divisor = 8;
    o.phoc_dim = 12;
    o.tpp.levels = 2;
    const auto graph = arch::build(kind, o);
    auto params = arch::init_parameters(graph, 1);
    const std::size_t w = std::max<std::size_t>(arch::minimum_width(graph, 12), 12);
    std::vector<double> target(o.phoc_dim);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = (i % 3 == 0) ? 1.0 : 0.0;
    diff::GradCheckOptions opt;
    opt.max_entries_per_block = 24;
    record(std::string(arch::to_string(kind)),
           arch::check_gradients(graph, params, random_array({1, 12, w}, rng, 0.0, 1.0),
                                 target, opt));
  }
  const double secs = seconds_since(t0);
  return {all && secs < kGradBudgetSeconds,
          "14 op checks + 4 architectures, max rel err " + fmt("%.2e", worst) + " (" +
              worst_name + "), " + fmt("%.1f s", secs)};
}

// ---- 4 ---------------------------------------------------------------------

Outcome tpp_contract() {
  std::mt19937_64 rng(4);
  std::size_t checked = 0, wrong = 0;
  for (const std::size_t c : {1u, 50u, 512u}) {
    for (std::size_t h = 5; h <= 64; ++h) {
      for (std::size_t w = 5; w <= 64; ++w) {
        diff::Graph g;
        diff::Array a({c, h, w});
        for (auto& v : a.storage()) v = static_cast<double>(rng() % 1000);
        const auto out = diff::tpp(g, g.input(std::move(a)), {5, diff::TppPooling::kMax});
        wrong += g.value(out).size() != 15 * c;
        ++checked;
      }
    }
  }
  return {wrong == 0, std::to_string(checked) + " (C, H, W) shapes, " + std::to_string(wrong) +
                          " with length != 15 C"};
}

// ---- 5 ---------------------------------------------------------------------

Outcome channel_accounting() {
  const auto tpp = arch::summarize(arch::build_tpp_phocnet({}));
  const auto dense = arch::summarize(arch::build_phocdensenet({}));
  const auto res = arch::summarize(arch::build_phocresnet({}));
  const bool ok = tpp.tpp_input_channels == 512 && dense.tpp_input_channels == 916 &&
                  res.conv_layers == 49 && res.parameters > 144000000u;
  return {ok, "TPP-PHOCNet " + std::to_string(tpp.tpp_input_channels) + " maps (" +
                  std::to_string(tpp.parameters) + " params), PHOCDenseNet " +
                  std::to_string(dense.tpp_input_channels) + " maps, PHOCResNet " +
                  std::to_string(res.conv_layers) + " convs / " +
                  std::to_string(res.parameters) + " params"};
}

// ---- 6, 7 ------------------------------------------------------------------

std::vector<oracle::Item> random_instance(std::mt19937_64& rng, std::size_t max_items,
                                          std::size_t dim) {
  const std::vector<std::string> words = {"the", "and", "of", "fort", "camp", "sir", "may"};
  const std::size_t n = 2 + rng() % (max_items - 1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<oracle::Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    oracle::Item it;
    it.id = "id" + std::to_string((i * 37) % 101);
    it.word = words[rng() % words.size()];
    if (i > 0 && rng() % 5 == 0) {
      it.v = items[rng() % i].v;
    } else {
      it.v.resize(dim);
      for (auto& x : it.v) x = u(rng);
    }
    items.push_back(std::move(it));
  }
  return items;
}

retrieval::DescriptorSet to_set(const std::vector<oracle::Item>& items) {
  retrieval::DescriptorSet set;
  for (const auto& it : items) set.add({it.id, it.word, it.v});
  return set;
}

Outcome map_oracle_equivalence() {
  bool ok = retrieval::average_precision(std::vector<std::uint8_t>{1, 0, 0, 1}, 2) == 0.75 &&
            retrieval::average_precision(std::vector<std::uint8_t>{0, 1, 1}, 2) == 2.0 / 3.0;
  const bool hand = ok;
  const phoc::PhocConfig cfg;
  std::mt19937_64 rng(6);
  std::size_t instances = 0, queries = 0, mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = random_instance(rng, 50, cfg.dimension());
    const auto set = to_set(items);
    ++instances;
    const auto qbe = oracle::qbe_queries(items);
    if (!qbe.empty()) {
      const auto e = retrieval::evaluate(set, retrieval::QueryMode::kQbE, {}, cfg);
      double sum = 0.0;
      for (std::size_t i = 0; i < qbe.size(); ++i) {
        const double ap = oracle::query_ap(items, items[qbe[i]].v, items[qbe[i]].word, qbe[i]);
        sum += ap;
        mismatches += e.queries[i].average_precision != ap;
        ++queries;
      }
      mismatches += e.mean_average_precision != sum / static_cast<double>(qbe.size());
    }
    const auto qbs = oracle::qbs_queries(items);
    const auto e = retrieval::evaluate(set, retrieval::QueryMode::kQbS, {}, cfg);
    double sum = 0.0;
    for (std::size_t i = 0; i < qbs.size(); ++i) {
      const double ap = oracle::query_ap(items, phoc::encode(qbs[i], cfg).as_real(), qbs[i],
                                         static_cast<std::size_t>(-1));
      sum += ap;
      mismatches += e.queries[i].average_precision != ap;
      ++queries;
    }
    mismatches += e.mean_average_precision != sum / static_cast<double>(qbs.size());
  }
  ok = ok && mismatches == 0;
  return {ok, std::to_string(instances) + " instances, " + std::to_string(queries) +
                  " queries, " + std::to_string(mismatches) + " inexact; hand cases " +
                  (hand ? "hold" : "FAIL")};
}

Outcome query_protocol() {
  std::mt19937_64 rng(7);
  const phoc::PhocConfig cfg;
  const std::set<std::string> stop{"the", "and", "of"};
  std::size_t bad_selection = 0, self_hits = 0, lists = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = random_instance(rng, 40, 8);
    const auto set = to_set(items);
    bad_selection += retrieval::select_qbe_queries(set) != oracle::qbe_queries(items);
    bad_selection += retrieval::select_qbs_queries(set) != oracle::qbs_queries(items);
    bad_selection += retrieval::select_qbs_queries(set, stop) != oracle::qbs_queries(items, stop);
    const auto expected = oracle::qbe_queries(items, stop);
    if (!expected.empty()) {
      const auto e = retrieval::evaluate(set, retrieval::QueryMode::kQbE, stop,
                                         phoc::make_config(cfg.alphabet, {1}));
      std::vector<std::string> got, want;
      for (const auto& q : e.queries) got.push_back(q.query);
      for (const auto i : expected) want.push_back(items[i].id);
      bad_selection += got != want;
    }
    for (const auto q : retrieval::select_qbe_queries(set)) {
      const auto list = retrieval::rank(set, set[q].descriptor, set[q].transcription, q);
      self_hits += std::count(list.items.begin(), list.items.end(), q);
      ++lists;
    }
  }
  return {bad_selection == 0 && self_hits == 0,
          std::to_string(bad_selection) + " selection mismatches over 100 instances, " +
              std::to_string(self_hits) + " self-hits in " + std::to_string(lists) +
              " QbE lists"};
}

// ---- 8, 9 ------------------------------------------------------------------

const fs::path kSource = WORDSPOT_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wordspot_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome end_to_end() {
  auto cfg = experiment::load_config(kSource / "configs/toy_lenet.cfg");
  cfg.output_dir = scratch("e2e");
  const auto train_set = data::load_manifest(cfg.train_manifest);
  const auto test_set = data::load_manifest(cfg.test_manifest);
  const auto t0 = Clock::now();
  const auto ckpt = experiment::train(cfg, train_set, nullptr);
  const auto graph = experiment::build_network(cfg);
  const auto descriptors = experiment::extract(ckpt, graph, test_set, cfg.phoc);
  const auto qbe = retrieval::evaluate(descriptors, retrieval::QueryMode::kQbE, {}, cfg.phoc);
  const auto qbs = retrieval::evaluate(descriptors, retrieval::QueryMode::kQbS, {}, cfg.phoc);
  const double secs = seconds_since(t0);
  fs::remove_all(cfg.output_dir);
  const data::AugmentedStream stream(train_set, cfg.phoc, cfg.augment);
  std::size_t min_per_class = SIZE_MAX;
  for (std::size_t k = 0; k < stream.class_count(); ++k) {
    min_per_class = std::min(min_per_class, stream.per_class_count(k));
  }
  const bool ok = stream.class_count() >= 20 && min_per_class >= 30 &&
                  qbs.mean_average_precision >= kQbsTarget &&
                  qbe.mean_average_precision >= kQbeTarget && secs < kTrainBudgetSeconds;
  return {ok, "LeNet " + std::to_string(cfg.total_iterations) + " it, " +
                  std::to_string(stream.class_count()) + " classes x >= " +
                  std::to_string(min_per_class) + " images; QbE " +
                  fmt("%.4f", qbe.mean_average_precision) + ", QbS " +
                  fmt("%.4f", qbs.mean_average_precision) + " on " +
                  std::to_string(test_set.size()) + " held-out words, " +
                  fmt("%.0f s", secs)};
}

std::string serialize(const experiment::Checkpoint& c) {
  std::ostringstream out(std::ios::binary);
  experiment::write_checkpoint(out, c);
  return out.str();
}

struct RunArtifacts {
  std::string loss_log;
  std::string checkpoint;
  std::string descriptors;
};

RunArtifacts short_run(const experiment::TrainConfig& cfg,
                       const std::vector<data::WordSample>& train_set,
                       const std::vector<data::WordSample>& test_set) {
  std::vector<experiment::LossRecord> log;
  const auto ckpt = experiment::train(cfg, train_set, &log);
  std::ostringstream loss;
  experiment::write_loss_header(loss);
  for (const auto& r : log) experiment::write_loss_record(loss, r);
  std::ostringstream desc;
  retrieval::write_descriptors(
      desc, experiment::extract(ckpt, experiment::build_network(cfg), test_set, cfg.phoc));
  return {loss.str(), serialize(ckpt), desc.str()};
}

Outcome determinism() {
  auto cfg = experiment::load_config(kSource / "configs/toy_lenet.cfg");
  cfg.total_iterations = 40;
  cfg.lr_step = 30;
  cfg.checkpoint_period = 20;
  const auto train_set = data::load_manifest(cfg.train_manifest);
  const auto test_set = data::load_manifest(cfg.test_manifest);
  const auto a = short_run(cfg, train_set, test_set);
  const auto b = short_run(cfg, train_set, test_set);
  const bool same_log = a.loss_log == b.loss_log;
  const bool same_ckpt = a.checkpoint == b.checkpoint;
  const bool same_desc = a.descriptors == b.descriptors;

  std::istringstream in(a.checkpoint, std::ios::binary);
  const bool round_trip = serialize(experiment::read_checkpoint(in)) == a.checkpoint;

  // Resume from a mid-run checkpoint and finish the run.
  std::string mid;
  experiment::TrainHooks hooks;
  hooks.on_checkpoint = [&](const experiment::Checkpoint& c) { mid = serialize(c); };
  experiment::train(cfg, train_set, nullptr, hooks);
  std::istringstream mid_in(mid, std::ios::binary);
  const auto restored = experiment::read_checkpoint(mid_in);
  const bool resume =
      serialize(experiment::train(cfg, train_set, nullptr, {}, &restored)) == a.checkpoint;

  const auto yes = [](bool v) { return v ? "identical" : "DIFFER"; };
  return {same_log && same_ckpt && same_desc && round_trip && resume,
          std::string("loss logs ") + yes(same_log) + ", checkpoints " + yes(same_ckpt) +
              ", descriptors " + yes(same_desc) + ", round trip " + yes(round_trip) +
              ", resume " + yes(resume) + " (" + std::to_string(a.checkpoint.size()) +
              " checkpoint bytes)"};
}

// ---- 10 --------------------------------------------------------------------

Outcome optimizer() {
  std::mt19937_64 rng(10);
  std::vector<diff::Array> params{random_array({3, 4}, rng), random_array({5}, rng)};
  const auto before = params;
  auto state = diff::AdamState::for_parameters(params, 1e-4);
  std::vector<diff::Array> zero{diff::Array({3, 4}), diff::Array({5})};
  for (int i = 0; i < 3; ++i) diff::adam_step(params, zero, state);
  const bool noop = params == before;

  std::vector<diff::Array> p1{diff::Array({4}, 0.5)};
  std::vector<diff::Array> g1{diff::Array::vector({1.0, -1.0, 0.5, -250.0})};
  diff::AdamState s1;
  s1.learning_rate = 1e-4;
  diff::adam_step(p1, g1, s1);
  double first_dev = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    first_dev = std::max(first_dev, std::abs(std::abs(p1[0][i] - 0.5) - 1e-4) / 1e-4);
  }

  const std::vector<std::vector<double>> grads = {
      {0.3, -1.2, 4.0}, {-0.7, 0.1, 2.5}, {0.05, 0.9, -3.0}};
  std::vector<diff::Array> p3{diff::Array::vector({1.0, -2.0, 0.25})};
  diff::AdamState s3;
  s3.learning_rate = 1e-3;
  std::vector<oracle::ScalarAdam> ref(3, oracle::ScalarAdam{1e-3});
  std::vector<double> theta{1.0, -2.0, 0.25};
  double trace_dev = 0.0;
  for (const auto& g : grads) {
    std::vector<diff::Array> ga{diff::Array({3}, g)};
    diff::adam_step(p3, ga, s3);
    for (std::size_t i = 0; i < 3; ++i) {
      theta[i] = ref[i].step(theta[i], g[i]);
      trace_dev = std::max(trace_dev, std::abs(p3[0][i] - theta[i]));
    }
  }
  return {noop && first_dev < kAdamFirstStepRelTol && trace_dev < kAdamTraceTol,
          std::string("zero-grad ") + (noop ? "no-op" : "MOVED") + ", first step rel dev " +
              fmt("%.1e", first_dev) + ", 3-step trace max dev " + fmt("%.1e", trace_dev)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"PHOC oracle equivalence", phoc_oracle_equivalence},
      {"PHOC home example", phoc_home_example},
      {"gradient checks", gradient_checks},
      {"TPP output length", tpp_contract},
      {"channel accounting", channel_accounting},
      {"mAP oracle equivalence", map_oracle_equivalence},
      {"QbE/QbS protocol", query_protocol},
      {"desk-scale end-to-end", end_to_end},
      {"determinism", determinism},
      {"optimizer", optimizer},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1 < 10 ? " " : "") << i + 1 << "  "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
