#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wordspot/arch/builders.hpp"
#include "wordspot/arch/network.hpp"
#include "wordspot/data/dataset.hpp"
#include "wordspot/data/toy_corpus.hpp"
#include "wordspot/error.hpp"
#include "wordspot/experiment/checkpoint.hpp"
#include "wordspot/experiment/config.hpp"
#include "wordspot/experiment/report.hpp"
#include "wordspot/experiment/trainer.hpp"
#include "wordspot/phoc.hpp"
#include "wordspot/retrieval/retrieval.hpp"
#include "wordspot/text.hpp"

namespace fs = std::filesystem;
using namespace wordspot;

namespace {

// Exit codes: 0 ok, 2 usage, then one per error category.
int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return 3;
    case ErrorCategory::kShape: return 4;
    case ErrorCategory::kData: return 5;
    case ErrorCategory::kNumeric: return 6;
    case ErrorCategory::kFormat: return 7;
  }
  return 1;
}

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid argument";
    case ErrorCategory::kShape: return "shape";
    case ErrorCategory::kData: return "data";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kFormat: return "format";
  }
  return "error";
}

struct PhocArgs {
  std::string alphabet{phoc::kDefaultAlphabet};
  std::string levels = "1,2,4,8";
  bool keep_case = false;

  void attach(CLI::App* app) {
    app->add_option("--alphabet", alphabet, "PHOC alphabet");
    app->add_option("--levels", levels, "Comma-separated pyramid levels");
    app->add_flag("--keep-case", keep_case, "Do not lowercase transcriptions");
  }
  phoc::PhocConfig config() const {
    return phoc::make_config(alphabet, phoc::parse_levels(levels), 0.5, !keep_case);
  }
};

void write_text(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << contents;
}

int run_train(const std::string& config_path, const std::string& resume_path,
              bool quiet) {
  const auto config = experiment::load_config(config_path);
  if (config.train_manifest.empty()) {
    throw Error(ErrorCode::kDataUnavailable, "config has no data.train_manifest");
  }
  const fs::path out_dir = config.output_dir.empty() ? fs::path(".") : config.output_dir;
  fs::create_directories(out_dir);
  const auto samples = data::load_manifest(config.train_manifest);

  std::optional<experiment::Checkpoint> resume;
  if (!resume_path.empty()) resume = experiment::load_checkpoint(resume_path);

  // A resumed run keeps the rows before the checkpoint and appends after.
  const fs::path log_path = out_dir / "loss.csv";
  std::vector<experiment::LossRecord> previous;
  if (resume && fs::exists(log_path)) {
    for (const auto& r : experiment::read_loss_log(log_path)) {
      if (r.iteration < resume->iteration) previous.push_back(r);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error(ErrorCode::kIo, "cannot write " + log_path.string());
  experiment::write_loss_header(log);
  for (const auto& r : previous) experiment::write_loss_record(log, r);
  {
    std::ofstream cfg(out_dir / "config.txt");
    cfg << experiment::format_config(config);
  }

  const auto start = std::chrono::steady_clock::now();
  experiment::TrainHooks hooks;
  hooks.on_iteration = [&](const experiment::LossRecord& r) {
    experiment::write_loss_record(log, r);
    if (!quiet && (r.iteration + 1) % 100 == 0) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "iter %llu  lr %g  loss %.6f  (%.1fs)\n",
                   static_cast<unsigned long long>(r.iteration + 1),
                   r.learning_rate, r.loss, secs);
    }
  };
  hooks.on_checkpoint = [&](const experiment::Checkpoint& c) {
    log.flush();
    experiment::save_checkpoint(
        out_dir / ("checkpoint-" + std::to_string(c.iteration) + ".bin"), c);
  };
  const auto final_checkpoint = experiment::train(
      config, samples, nullptr, hooks, resume ? &*resume : nullptr);
  experiment::save_checkpoint(out_dir / "checkpoint.bin", final_checkpoint);
  std::cout << "trained " << final_checkpoint.iteration << " iterations; wrote "
            << (out_dir / "checkpoint.bin").string() << '\n';
  return 0;
}

int run_extract(const std::string& config_path, const std::string& checkpoint_path,
                const std::string& manifest_path, const std::string& output) {
  const auto config = experiment::load_config(config_path);
  const fs::path manifest =
      manifest_path.empty() ? config.test_manifest : fs::path(manifest_path);
  if (manifest.empty()) throw Error(ErrorCode::kDataUnavailable, "no manifest given");
  const auto graph = experiment::build_network(config);
  const auto checkpoint = experiment::load_checkpoint(checkpoint_path);
  const auto samples = data::load_manifest(manifest);
  const auto set = experiment::extract(checkpoint, graph, samples, config.phoc);
  if (output.empty() || output == "-") {
    retrieval::write_descriptors(std::cout, set);
  } else {
    retrieval::save_descriptors(output, set);
  }
  return 0;
}

int run_eval(const std::string& descriptors, const std::string& mode_text,
             const std::string& stop_words_path, const std::string& output,
             const PhocArgs& phoc_args) {
  const auto mode = retrieval::parse_mode(mode_text);
  if (!mode) throw Error(ErrorCode::kInvalidConfig, "mode must be qbe or qbs");
  const auto phoc_config = phoc_args.config();
  const auto set = retrieval::load_descriptors(descriptors);
  std::set<std::string> stop_words;
  if (!stop_words_path.empty()) {
    stop_words = retrieval::load_stop_words(stop_words_path, phoc_config);
  }
  const auto evaluation = retrieval::evaluate(set, *mode, stop_words, phoc_config);
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + output);
    retrieval::write_report(out, evaluation);
  }
  std::cout << retrieval::to_string(*mode) << " mAP "
            << text::format_fixed(evaluation.mean_average_precision * 100.0, 2)
            << "% over " << evaluation.queries.size() << " queries\n";
  return 0;
}

int run_inspect(const std::string& arch_name, int width_divisor, std::size_t phoc_dim,
                int stem_stride, std::size_t height, std::size_t width) {
  const auto kind = arch::parse_arch(arch_name);
  if (!kind) throw Error(ErrorCode::kInvalidConfig, "unknown architecture " + arch_name);
  arch::ArchOptions options;
  options.width_divisor = width_divisor;
  options.phoc_dim = phoc_dim;
  options.resnet_stem_stride = stem_stride;
  const auto graph = arch::build(*kind, options);
  std::printf("%-5s %-28s %-10s %-20s %s\n", "#", "layer", "kind", "shape", "params");
  for (const auto& l : arch::infer_shapes(graph, height, width)) {
    std::printf("%-5d %-28s %-10s %-20s %zu\n", l.index, l.name.c_str(),
                arch::to_string(l.kind), diff::shape_string(l.shape).c_str(),
                l.parameters);
  }
  const auto s = arch::summarize(graph);
  std::printf("\narchitecture      %s\n", std::string(arch::display_name(*kind)).c_str());
  std::printf("conv layers       %zu (+%zu shortcut projections)\n", s.conv_layers,
              s.shortcut_convs);
  std::printf("tpp input maps    %zu\n", s.tpp_input_channels);
  std::printf("tpp output        %zu\n", s.tpp_output);
  std::printf("parameters        %zu\n", s.parameters);
  return 0;
}

int run_gradcheck(const std::string& which, int width_divisor, std::size_t entries,
                  std::uint64_t seed) {
  std::vector<arch::ArchKind> kinds;
  if (which == "all") {
    kinds = {arch::ArchKind::kLeNet, arch::ArchKind::kTppPhocNet,
             arch::ArchKind::kPhocResNet, arch::ArchKind::kPhocDenseNet};
  } else if (const auto k = arch::parse_arch(which)) {
    kinds = {*k};
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown architecture " + which);
  }
  bool ok = true;
  for (const auto kind : kinds) {
    arch::ArchOptions options;
    options.width_divisor = width_divisor;
    options.phoc_dim = 12;
    options.tpp.levels = 2;
    const auto graph = arch::build(kind, options);
    auto params = arch::init_parameters(graph, seed);
    const std::size_t h = 12;
    const std::size_t w = std::max<std::size_t>(arch::minimum_width(graph, h), 12);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    diff::Array image({1, h, w});
    for (auto& v : image.storage()) v = u(rng);
    std::vector<double> target(options.phoc_dim);
    for (auto& t : target) t = u(rng) < 0.5 ? 0.0 : 1.0;
    diff::GradCheckOptions gc;
    gc.max_entries_per_block = entries;
    gc.sample_seed = seed;
    const auto report = arch::check_gradients(graph, params, image, target, gc);
    std::printf("%-14s max rel err %.3e  %s\n",
                std::string(arch::display_name(kind)).c_str(),
                report.max_relative_error, report.passed ? "ok" : "FAIL");
    ok = ok && report.passed;
  }
  return ok ? 0 : exit_code(ErrorCategory::kNumeric);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word spotting with PHOC-predicting networks"};
  app.require_subcommand(1);

  // phoc
  auto* phoc_cmd = app.add_subcommand("phoc", "PHOC utilities");
  phoc_cmd->require_subcommand(1);
  PhocArgs phoc_args;
  std::string word;
  auto* encode_cmd = phoc_cmd->add_subcommand("encode", "Print the PHOC of a word");
  encode_cmd->add_option("word", word, "Word to encode")->required();
  phoc_args.attach(encode_cmd);
  auto* dim_cmd = phoc_cmd->add_subcommand("dim", "Print the PHOC dimension");
  PhocArgs dim_args;
  dim_args.attach(dim_cmd);

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Shape table and parameter count");
  std::string arch_name;
  int width_divisor = 1;
  std::size_t phoc_dim = 540;
  int stem_stride = 1;
  std::size_t height = 60, width = 160;
  inspect_cmd->add_option("--arch", arch_name, "lenet | tppnet | resnet | densenet")
      ->required();
  inspect_cmd->add_option("--width-divisor", width_divisor, "Divide all widths by this");
  inspect_cmd->add_option("--phoc-dim", phoc_dim, "Output dimension");
  inspect_cmd->add_option("--stem-stride", stem_stride, "PHOCResNet stem stride");
  inspect_cmd->add_option("--height", height, "Input height for the shape trace");
  inspect_cmd->add_option("--width", width, "Input width for the shape trace");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a network from a config file");
  std::string config_path, resume_path;
  bool quiet = false;
  train_cmd->add_option("--config", config_path, "Run config")->required();
  train_cmd->add_option("--resume", resume_path, "Continue from this checkpoint");
  train_cmd->add_flag("--quiet", quiet, "No progress output");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Write descriptors for a manifest");
  std::string checkpoint_path, manifest_path, output;
  extract_cmd->add_option("--config", config_path, "Run config")->required();
  extract_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required();
  extract_cmd->add_option("--manifest", manifest_path,
                          "Manifest (defaults to data.test_manifest)");
  extract_cmd->add_option("--output,-o", output, "Descriptor file (default stdout)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Retrieval evaluation");
  std::string descriptors, mode, stop_words;
  PhocArgs eval_phoc;
  eval_cmd->add_option("--descriptors", descriptors, "Descriptor file")->required();
  eval_cmd->add_option("--mode", mode, "qbe | qbs")->required();
  eval_cmd->add_option("--stop-words", stop_words, "Stop-word list");
  eval_cmd->add_option("--output,-o", output, "Per-query CSV report");
  eval_phoc.attach(eval_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "Results table from eval reports");
  std::string listing;
  report_cmd->add_option("--input", listing, "TSV: method, benchmark, eval report")
      ->required();
  report_cmd->add_option("--output,-o", output, "CSV table (default stdout)");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Check miniature architectures");
  std::string which = "all";
  int gc_divisor = 8;
  std::size_t entries = 24;
  std::uint64_t seed = 1;
  gradcheck_cmd->add_option("--arch", which, "Architecture or 'all'");
  gradcheck_cmd->add_option("--width-divisor", gc_divisor, "Width divisor");
  gradcheck_cmd->add_option("--entries", entries, "Entries sampled per block (0 = all)");
  gradcheck_cmd->add_option("--seed", seed, "Seed");

  // toy-corpus
  auto* toy_cmd = app.add_subcommand("toy-corpus", "Render the synthetic corpus");
  std::string toy_dir;
  data::ToyCorpusOptions toy;
  toy_cmd->add_option("--output,-o", toy_dir, "Destination directory")->required();
  toy_cmd->add_option("--seed", toy.seed, "Seed");
  toy_cmd->add_option("--pages", toy.pages, "Pages");
  toy_cmd->add_option("--train-pages", toy.train_pages, "Pages used for training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*phoc_cmd) {
      if (*encode_cmd) {
        const auto cfg = phoc_args.config();
        std::cout << phoc::encode(phoc::normalize_transcription(word, cfg), cfg).to_string()
                  << '\n';
      } else {
        std::cout << dim_args.config().dimension() << '\n';
      }
      return 0;
    }
    if (*inspect_cmd) {
      return run_inspect(arch_name, width_divisor, phoc_dim, stem_stride, height, width);
    }
    if (*train_cmd) return run_train(config_path, resume_path, quiet);
    if (*extract_cmd) {
      return run_extract(config_path, checkpoint_path, manifest_path, output);
    }
    if (*eval_cmd) return run_eval(descriptors, mode, stop_words, output, eval_phoc);
    if (*report_cmd) {
      const auto cells = experiment::load_result_listing(listing);
      std::ostringstream table;
      experiment::write_results_table(table, cells);
      write_text(output, table.str());
      return 0;
    }
    if (*gradcheck_cmd) return run_gradcheck(which, gc_divisor, entries, seed);
    if (*toy_cmd) {
      const auto files = data::write_toy_corpus(toy_dir, toy);
      std::cout << "wrote " << files.train_count << " training and " << files.test_count
                << " test images to " << toy_dir << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << category_name(e.category()) << "): " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
