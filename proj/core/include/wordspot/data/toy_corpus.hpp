#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wordspot/data/image.hpp"

namespace wordspot::data {

// Synthetic word-image corpus: words drawn from a 5x7 bitmap font with
// per-page writing style (slant, spacing, stroke weight, ink) and
// per-instance jitter. Every page holds one instance of every word.
struct ToyCorpusOptions {
  std::vector<std::string> words;  // empty selects the built-in vocabulary
  std::size_t pages = 8;
  std::size_t train_pages = 5;     // pages [1, train_pages] go to train.tsv
  int glyph_scale = 2;
  std::uint64_t seed = 7;
};

std::vector<std::string> default_toy_vocabulary();

// Renders a single word (characters outside a-z / 0-9 are skipped).
GrayImage render_word(const std::string& word, std::uint64_t style_seed,
                      std::uint64_t instance_seed, int glyph_scale);

struct ToyCorpusFiles {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

// Writes images/*.png plus train.tsv and test.tsv under `directory`.
ToyCorpusFiles write_toy_corpus(const std::filesystem::path& directory,
                                const ToyCorpusOptions& options);

}  // namespace wordspot::data
