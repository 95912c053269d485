#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "wordspot/arch/network.hpp"
#include "wordspot/data/dataset.hpp"
#include "wordspot/experiment/checkpoint.hpp"
#include "wordspot/experiment/config.hpp"
#include "wordspot/retrieval/retrieval.hpp"

namespace wordspot::experiment {

struct LossRecord {
  std::uint64_t iteration = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
};

// Iterations are 0-based: lr0 while iteration < lr_step, lr0 / 10 after.
double learning_rate_at(const TrainConfig& config, std::uint64_t iteration);

struct BatchGradient {
  double loss = 0.0;                // mean over the batch
  std::vector<diff::Array> grads;   // mean over the batch
};

// Runs one forward/backward pass per sample and averages the gradients.
// Per-sample contributions are summed in index order. Sample j of the batch
// draws its dropout masks from `dropout_seeds[j]`.
BatchGradient batch_gradient(const arch::LayerGraph& graph,
                             const arch::ParameterSet& params,
                             std::span<const diff::Array> images,
                             std::span<const std::vector<double>> targets,
                             diff::Mode mode,
                             std::span<const std::uint64_t> dropout_seeds);

struct TrainHooks {
  std::function<void(const LossRecord&)> on_iteration;
  // Called every checkpoint_period iterations (not for the final one).
  std::function<void(const Checkpoint&)> on_checkpoint;
};

// Trains from scratch, or from `resume` onwards. Iteration t draws its batch
// and dropout masks from (seed, t) alone, so a resumed run reproduces the
// uninterrupted one. Throws kDivergedLoss naming the iteration when the loss
// turns non-finite.
Checkpoint train(const TrainConfig& config,
                 std::span<const data::WordSample> train_samples,
                 std::vector<LossRecord>* log, const TrainHooks& hooks = {},
                 const Checkpoint* resume = nullptr);

// CSV "iteration,learning_rate,loss" with shortest round-trip floats.
void write_loss_header(std::ostream& out);
void write_loss_record(std::ostream& out, const LossRecord& record);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

// Sigmoid outputs of every sample in evaluation mode.
retrieval::DescriptorSet extract(const arch::LayerGraph& graph,
                                 const arch::ParameterSet& params,
                                 std::span<const data::WordSample> samples,
                                 const phoc::PhocConfig& phoc_config);

// Checks the checkpoint against `graph` (kArchMismatch) before extracting.
retrieval::DescriptorSet extract(const Checkpoint& checkpoint,
                                 const arch::LayerGraph& graph,
                                 std::span<const data::WordSample> samples,
                                 const phoc::PhocConfig& phoc_config);

}  // namespace wordspot::experiment
