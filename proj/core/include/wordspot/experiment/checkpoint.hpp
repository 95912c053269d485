#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "wordspot/arch/layer_graph.hpp"
#include "wordspot/arch/network.hpp"
#include "wordspot/diff/adam.hpp"

namespace wordspot::experiment {

// Binary layout, every integer and double little-endian:
//   "WSPTCKPT"  u32 version  u64 architecture hash  u64 iteration
//   str architecture descriptor
//   u32 metadata count, then (str key, str value) pairs
//   f64 beta1, beta2, epsilon, learning_rate  u64 adam step count
//   u32 array count, then per array:
//     str name  u32 rank  u64 extents[rank]  f64 values[prod(extents)]
// where str is a u32 byte length followed by the bytes. Arrays are the
// parameters in order, then "adam.m/<name>" and "adam.v/<name>".
struct Checkpoint {
  std::uint64_t arch_hash = 0;
  std::string arch_descriptor;
  std::uint64_t iteration = 0;
  std::map<std::string, std::string> metadata;
  arch::ParameterSet parameters;
  diff::AdamState optimizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

Checkpoint make_checkpoint(const arch::LayerGraph& graph,
                           arch::ParameterSet parameters,
                           diff::AdamState optimizer, std::uint64_t iteration);

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
// Throws kBadCheckpoint on a bad magic, version, truncation or a descriptor
// whose hash disagrees with the stored one.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws kArchMismatch unless the checkpoint was produced for `graph` and its
// parameter shapes match.
void require_compatible(const Checkpoint& checkpoint, const arch::LayerGraph& graph);

}  // namespace wordspot::experiment
