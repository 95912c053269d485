#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "wordspot/arch/builders.hpp"
#include "wordspot/arch/network.hpp"
#include "wordspot/data/augment.hpp"
#include "wordspot/phoc.hpp"

namespace wordspot::experiment {

// Run configuration. The text form is one `dotted.key = value` per line;
// `[section]` lines prefix the keys that follow, '#' starts a comment.
//
//   model.arch               lenet | tppnet | resnet | densenet
//   model.width_divisor      int >= 1
//   model.resnet_stem_stride int >= 1
//   model.dropout            [0, 1)
//   model.init_fan           fan_in | layer_weights
//   tpp.levels               int >= 1
//   tpp.pooling              max | average
//   phoc.alphabet            string
//   phoc.levels              comma-separated ints
//   phoc.lowercase           true | false
//   train.learning_rate      > 0
//   train.lr_step            iterations before the learning rate drops 10x
//   train.total_iterations
//   train.batch_size         >= 1
//   train.seed
//   train.checkpoint_period  0 writes only the final checkpoint
//   data.train_manifest      paths resolve against the config directory
//   data.test_manifest
//   data.stop_words
//   augment.target_total | rotation_deg | shear_deg | scale_min |
//   augment.scale_max | translate_frac | seed
//   output.dir               receives checkpoint.bin and loss.csv
struct TrainConfig {
  arch::ArchKind arch = arch::ArchKind::kTppPhocNet;
  int width_divisor = 1;
  int resnet_stem_stride = 1;
  double dropout = 0.5;
  arch::InitFan init_fan = arch::InitFan::kFanIn;
  diff::TppConfig tpp{};
  phoc::PhocConfig phoc{};

  double learning_rate = 1e-4;
  std::uint64_t lr_step = 70000;
  std::uint64_t total_iterations = 80000;
  std::size_t batch_size = 10;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_period = 0;

  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path stop_words;
  data::AugmentationPlan augment{};
  std::filesystem::path output_dir;
};

// Throws Error(kBadConfig) on unknown keys, malformed values, duplicates, or
// broken invariants (lr_step > total_iterations, batch_size 0, ...).
TrainConfig parse_config(std::string_view text,
                         const std::filesystem::path& base_dir = {});
TrainConfig load_config(const std::filesystem::path& path);
void validate(const TrainConfig& config);

// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const TrainConfig& config);

arch::ArchOptions arch_options(const TrainConfig& config);
arch::LayerGraph build_network(const TrainConfig& config);

}  // namespace wordspot::experiment
