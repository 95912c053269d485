#include "wordspot/data/toy_corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

#include "wordspot/data/dataset.hpp"
#include "wordspot/error.hpp"

namespace wordspot::data {
namespace {

using Glyph = std::array<const char*, 7>;

// 5x7 bitmap font, '#' is ink.
const Glyph* glyph_for(char c) {
  static const Glyph kLetters[26] = {
      {".....", ".....", ".###.", "....#", ".####", "#...#", ".####"},  // a
      {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."},  // b
      {".....", ".....", ".###.", "#....", "#....", "#...#", ".###."},  // c
      {"....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"},  // d
      {".....", ".....", ".###.", "#...#", "#####", "#....", ".###."},  // e
      {"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."},  // f
      {".....", ".####", "#...#", "#...#", ".####", "....#", ".###."},  // g
      {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"},  // h
      {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."},  // i
      {"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."},  // j
      {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."},  // k
      {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},  // l
      {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"},  // m
      {".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"},  // n
      {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."},  // o
      {".....", ".....", "####.", "#...#", "####.", "#....", "#...."},  // p
      {".....", ".....", ".##.#", "#..##", ".####", "....#", "....#"},  // q
      {".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."},  // r
      {".....", ".....", ".###.", "#....", ".###.", "....#", "####."},  // s
      {".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."},  // t
      {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"},  // u
      {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."},  // v
      {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."},  // w
      {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"},  // x
      {".....", ".....", "#...#", "#...#", ".####", "....#", ".###."},  // y
      {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"},  // z
  };
  static const Glyph kDigits[10] = {
      {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},  // 0
      {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},  // 1
      {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},  // 2
      {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},  // 3
      {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},  // 4
      {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},  // 5
      {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},  // 6
      {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},  // 7
      {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},  // 8
      {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},  // 9
  };
  const auto u = static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(c)));
  if (u >= 'a' && u <= 'z') return &kLetters[u - 'a'];
  if (u >= '0' && u <= '9') return &kDigits[u - '0'];
  return nullptr;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

std::vector<std::string> default_toy_vocabulary() {
  return {"The",   "and",   "of",    "to",     "in",     "that",
          "with",  "from",  "have",  "been",   "were",   "Sir",
          "your",  "men",   "fort",  "may",    "orders", "camp",
          "army",  "letter", "would", "their", "which",  "1756"};
}

GrayImage render_word(const std::string& word, std::uint64_t style_seed,
                      std::uint64_t instance_seed, int glyph_scale) {
  std::mt19937_64 style(style_seed);
  std::mt19937_64 rng(instance_seed);
  const double slant = uniform(style, -0.35, 0.35);
  const int base_gap = uniform_int(style, 1, 3);
  const int weight = uniform_int(style, 0, 1);
  const double ink = uniform(style, 0.75, 1.0);

  const int s = glyph_scale;
  const int margin = 3;
  const int glyph_h = 7 * s;
  const int height = glyph_h + 2 * margin + 2;
  int pen = margin + static_cast<int>(std::ceil(std::abs(slant) * glyph_h));

  struct Stamp {
    const Glyph* glyph;
    int x, y;
  };
  std::vector<Stamp> stamps;
  for (const char c : word) {
    const Glyph* g = glyph_for(c);
    if (!g) continue;
    stamps.push_back({g, pen, margin + uniform_int(rng, 0, 2)});
    pen += 5 * s + base_gap + uniform_int(rng, 0, 2);
  }
  const int width = std::max(pen + margin + weight, 2 * margin + 1) +
                    static_cast<int>(std::ceil(std::abs(slant) * glyph_h));

  std::vector<double> canvas(static_cast<std::size_t>(height * width), 0.0);
  auto put = [&](int y, int x, double v) {
    if (y < 0 || x < 0 || y >= height || x >= width) return;
    double& cell = canvas[static_cast<std::size_t>(y * width + x)];
    cell = std::max(cell, v);
  };
  for (const Stamp& st : stamps) {
    for (int gy = 0; gy < 7; ++gy) {
      for (int gx = 0; gx < 5; ++gx) {
        if ((*st.glyph)[gy][gx] != '#') continue;
        for (int dy = 0; dy < s; ++dy) {
          const int y = st.y + gy * s + dy;
          // Slant leans the glyph around its baseline.
          const double shift = slant * static_cast<double>(st.y + glyph_h - y);
          for (int dx = 0; dx < s + weight; ++dx) {
            const double x = st.x + gx * s + dx + shift;
            const int x0 = static_cast<int>(std::floor(x));
            const double f = x - x0;
            put(y, x0, ink * (1.0 - f));
            put(y, x0 + 1, ink * f);
          }
        }
      }
    }
  }

  GrayImage image(static_cast<std::size_t>(height), static_cast<std::size_t>(width));
  const double paper = uniform(rng, 225.0, 250.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = canvas[static_cast<std::size_t>(y * width + x)];
      const double noise = uniform(rng, -12.0, 12.0);
      const double gray = paper * (1.0 - v) + 20.0 * v + noise;
      image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
          static_cast<std::uint8_t>(std::clamp(std::lround(gray), 0L, 255L));
    }
  }
  return image;
}

ToyCorpusFiles write_toy_corpus(const std::filesystem::path& directory,
                                const ToyCorpusOptions& options) {
  const auto words =
      options.words.empty() ? default_toy_vocabulary() : options.words;
  if (options.train_pages >= options.pages) {
    throw Error(ErrorCode::kInvalidConfig, "toy corpus needs at least one test page");
  }
  const auto images = directory / "images";
  std::filesystem::create_directories(images);

  std::vector<WordSample> train, test;
  for (std::size_t page = 1; page <= options.pages; ++page) {
    const std::uint64_t style_seed = options.seed * 1000003ULL + page;
    for (std::size_t w = 0; w < words.size(); ++w) {
      WordSample sample;
      const std::string pid = "p" + std::to_string(page);
      sample.sample_id = pid + "_w" + std::to_string(w);
      sample.transcription = words[w];
      sample.page_id = pid;
      sample.image = render_word(words[w], style_seed,
                                 style_seed * 7919ULL + w * 104729ULL + 1,
                                 options.glyph_scale);
      sample.image_path = images / (sample.sample_id + ".png");
      write_png(sample.image_path, sample.image);
      (page <= options.train_pages ? train : test).push_back(std::move(sample));
    }
  }
  ToyCorpusFiles files;
  files.train_manifest = directory / "train.tsv";
  files.test_manifest = directory / "test.tsv";
  write_manifest(files.train_manifest, train);
  write_manifest(files.test_manifest, test);
  files.train_count = train.size();
  files.test_count = test.size();
  return files;
}

}  // namespace wordspot::data
