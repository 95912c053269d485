#include "wordspot/experiment/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include "wordspot/data/augment.hpp"
#include "wordspot/diff/ops.hpp"
#include "wordspot/error.hpp"
#include "wordspot/text.hpp"

namespace wordspot::experiment {
namespace {

constexpr std::uint32_t kBatchStream = 1;
constexpr std::uint32_t kDropoutStream = 2;

std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration,
                              std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration),
                    static_cast<std::uint32_t>(iteration >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace

double learning_rate_at(const TrainConfig& config, std::uint64_t iteration) {
  return iteration < config.lr_step ? config.learning_rate : config.learning_rate / 10.0;
}

BatchGradient batch_gradient(const arch::LayerGraph& graph,
                             const arch::ParameterSet& params,
                             std::span<const diff::Array> images,
                             std::span<const std::vector<double>> targets,
                             diff::Mode mode,
                             std::span<const std::uint64_t> dropout_seeds) {
  if (images.empty() || images.size() != targets.size() ||
      images.size() != dropout_seeds.size()) {
    throw Error(ErrorCode::kShapeMismatch, "batch inputs disagree in length");
  }
  BatchGradient out;
  out.grads = params.zeros_like();
  for (std::size_t j = 0; j < images.size(); ++j) {
    diff::Graph g(mode, dropout_seeds[j]);
    const auto vars = arch::bind_parameters(g, params, &out.grads);
    const auto x = g.input(images[j]);
    const auto prediction = arch::run(g, graph, vars, x);
    const auto loss = diff::bce_loss(g, prediction, targets[j]);
    g.backward(loss);
    out.loss += g.value(loss)[0];
  }
  const double inv = 1.0 / static_cast<double>(images.size());
  for (auto& grad : out.grads) {
    for (auto& v : grad.storage()) v *= inv;
  }
  out.loss *= inv;
  return out;
}

Checkpoint train(const TrainConfig& config,
                 std::span<const data::WordSample> train_samples,
                 std::vector<LossRecord>* log, const TrainHooks& hooks,
                 const Checkpoint* resume) {
  validate(config);
  if (train_samples.empty()) {
    throw Error(ErrorCode::kDataUnavailable, "no training samples");
  }
  const auto graph = build_network(config);
  const data::AugmentedStream stream(train_samples, config.phoc, config.augment);

  std::vector<std::vector<double>> class_targets;
  for (std::size_t k = 0; k < stream.class_count(); ++k) {
    class_targets.push_back(phoc::encode(stream.class_name(k), config.phoc).as_real());
  }

  arch::ParameterSet params;
  diff::AdamState adam;
  std::uint64_t start = 0;
  if (resume) {
    require_compatible(*resume, graph);
    params = resume->parameters;
    adam = resume->optimizer;
    start = resume->iteration;
  } else {
    params = arch::init_parameters(graph, config.seed, config.init_fan);
    adam = diff::AdamState::for_parameters(params.values, config.learning_rate);
  }

  const auto snapshot = [&](std::uint64_t done) {
    auto c = make_checkpoint(graph, params, adam, done);
    c.metadata["config"] = format_config(config);
    return c;
  };

  const std::size_t b = config.batch_size;
  std::vector<diff::Array> images(b);
  std::vector<std::vector<double>> targets(b);
  std::vector<std::uint64_t> dropout_seeds(b);
  for (std::uint64_t it = start; it < config.total_iterations; ++it) {
    auto batch_rng = iteration_rng(config.seed, it, kBatchStream);
    auto dropout_rng = iteration_rng(config.seed, it, kDropoutStream);
    std::uniform_int_distribution<std::size_t> pick(0, stream.size() - 1);
    for (std::size_t j = 0; j < b; ++j) {
      auto sample = stream.generate(pick(batch_rng));
      images[j] = std::move(sample.image);
      targets[j] = class_targets[sample.class_index];
      dropout_seeds[j] = dropout_rng();
    }
    const auto step =
        batch_gradient(graph, params, images, targets, diff::Mode::kTrain, dropout_seeds);
    if (!std::isfinite(step.loss)) {
      throw Error(ErrorCode::kDivergedLoss,
                  "non-finite loss at iteration " + std::to_string(it));
    }
    adam.learning_rate = learning_rate_at(config, it);
    diff::adam_step(params.values, step.grads, adam);

    const LossRecord record{it, adam.learning_rate, step.loss};
    if (log) log->push_back(record);
    if (hooks.on_iteration) hooks.on_iteration(record);
    const std::uint64_t done = it + 1;
    if (hooks.on_checkpoint && config.checkpoint_period > 0 &&
        done % config.checkpoint_period == 0 && done < config.total_iterations) {
      hooks.on_checkpoint(snapshot(done));
    }
  }
  return snapshot(std::max(start, config.total_iterations));
}

void write_loss_header(std::ostream& out) { out << "iteration,learning_rate,loss\n"; }

void write_loss_record(std::ostream& out, const LossRecord& r) {
  out << r.iteration << ',' << text::format_double(r.learning_rate) << ','
      << text::format_double(r.loss) << '\n';
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open loss log " + path.string());
  std::vector<LossRecord> records;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    LossRecord r;
    long long it = 0;
    if (f.size() != 3 || !text::parse_int(f[0], it) ||
        !text::parse_double(f[1], r.learning_rate) || !text::parse_double(f[2], r.loss)) {
      throw Error(ErrorCode::kMalformedRow, "bad loss log row: " + line);
    }
    r.iteration = static_cast<std::uint64_t>(it);
    records.push_back(r);
  }
  return records;
}

retrieval::DescriptorSet extract(const arch::LayerGraph& graph,
                                 const arch::ParameterSet& params,
                                 std::span<const data::WordSample> samples,
                                 const phoc::PhocConfig& phoc_config) {
  retrieval::DescriptorSet set;
  for (const auto& s : samples) {
    retrieval::DescriptorEntry entry;
    entry.sample_id = s.sample_id;
    entry.transcription = phoc::normalize_transcription(s.transcription, phoc_config);
    entry.descriptor = arch::predict(graph, params, data::normalize_pixels(s.image));
    set.add(std::move(entry));
  }
  return set;
}

retrieval::DescriptorSet extract(const Checkpoint& checkpoint,
                                 const arch::LayerGraph& graph,
                                 std::span<const data::WordSample> samples,
                                 const phoc::PhocConfig& phoc_config) {
  require_compatible(checkpoint, graph);
  return extract(graph, checkpoint.parameters, samples, phoc_config);
}

}  // namespace wordspot::experiment
