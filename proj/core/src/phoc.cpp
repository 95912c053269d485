#include "wordspot/phoc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <numeric>

#include "wordspot/error.hpp"
#include "wordspot/hash.hpp"

namespace wordspot::phoc {
namespace {

// Maps a byte to its alphabet position, or -1.
std::array<int, 256> char_table(const PhocConfig& config) {
  std::array<int, 256> table;
  table.fill(-1);
  for (std::size_t i = 0; i < config.alphabet.size(); ++i) {
    table[static_cast<unsigned char>(config.alphabet[i])] = static_cast<int>(i);
  }
  return table;
}

std::size_t level_sum(const PhocConfig& config) {
  return std::accumulate(config.levels.begin(), config.levels.end(),
                         std::size_t{0});
}

}  // namespace

std::size_t PhocConfig::dimension() const {
  return alphabet.size() * level_sum(*this);
}

std::uint64_t PhocConfig::fingerprint() const {
  Fnv1a h;
  h.update(alphabet);
  for (int level : levels) h.update_value(level);
  h.update_value(overlap_threshold);
  h.update_value(lowercase);
  return h.digest();
}

void validate(const PhocConfig& config) {
  if (config.alphabet.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "alphabet is empty");
  }
  std::array<bool, 256> seen{};
  for (char c : config.alphabet) {
    auto& slot = seen[static_cast<unsigned char>(c)];
    if (slot) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("duplicate alphabet character '") + c + "'");
    }
    slot = true;
  }
  if (config.levels.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "no pyramid levels");
  }
  for (std::size_t i = 0; i < config.levels.size(); ++i) {
    if (config.levels[i] <= 0 ||
        (i > 0 && config.levels[i] <= config.levels[i - 1])) {
      throw Error(ErrorCode::kInvalidConfig,
                  "levels must be positive and strictly increasing");
    }
  }
  if (!(config.overlap_threshold > 0.0 && config.overlap_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "overlap threshold outside (0, 1]");
  }
}

PhocConfig make_config(std::string alphabet, std::vector<int> levels,
                       double overlap_threshold, bool lowercase) {
  PhocConfig config{std::move(alphabet), std::move(levels), overlap_threshold,
                    lowercase};
  validate(config);
  return config;
}

std::vector<int> parse_levels(std::string_view text) {
  std::vector<int> levels;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = text.substr(0, comma);
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "bad level list '" + std::string(text) + "'");
    }
    levels.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return levels;
}

std::vector<double> PhocVector::as_real() const {
  return {bits.begin(), bits.end()};
}

std::string PhocVector::to_string() const {
  std::string out(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i] = '1';
  }
  return out;
}

std::size_t flat_index(const PhocConfig& config, const AttributeIndex& index) {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < index.level_index; ++l) {
    offset += static_cast<std::size_t>(config.levels[l]);
  }
  offset += static_cast<std::size_t>(index.region);
  return offset * config.alphabet.size() + index.char_index;
}

AttributeIndex decode_index(const PhocConfig& config, std::size_t flat) {
  const std::size_t k = config.alphabet.size();
  std::size_t region_slot = flat / k;
  AttributeIndex index;
  index.char_index = flat % k;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const auto n = static_cast<std::size_t>(config.levels[l]);
    if (region_slot < n) {
      index.level_index = l;
      index.region = static_cast<int>(region_slot);
      return index;
    }
    region_slot -= n;
  }
  throw Error(ErrorCode::kInvalidConfig, "attribute index out of range");
}

std::string normalize_transcription(std::string_view raw,
                                    const PhocConfig& config) {
  const auto table = char_table(config);
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (config.lowercase) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (table[static_cast<unsigned char>(c)] >= 0) out.push_back(c);
  }
  return out;
}

PhocVector encode(std::string_view word, const PhocConfig& config) {
  if (word.empty()) {
    throw Error(ErrorCode::kEmptyWord, "cannot encode an empty word");
  }
  const auto table = char_table(config);
  const auto length = static_cast<long long>(word.size());
  const std::size_t k = config.alphabet.size();

  PhocVector out;
  out.bits.assign(config.dimension(), 0);
  out.config_id = config.fingerprint();

  std::size_t level_offset = 0;
  for (const int level : config.levels) {
    const long long n = level;
    // Scaled by L*n, character i spans [i*n, (i+1)*n] and region r spans
    // [r*L, (r+1)*L]. The character needs an overlap of threshold * n.
    const double required = config.overlap_threshold * static_cast<double>(n);
    for (long long i = 0; i < length; ++i) {
      const int c = table[static_cast<unsigned char>(word[i])];
      if (c < 0) {
        throw Error(ErrorCode::kOutOfAlphabet,
                    "character '" + std::string(1, word[i]) + "' in '" +
                        std::string(word) + "' is not in the alphabet");
      }
      const long long char_begin = i * n;
      const long long char_end = (i + 1) * n;
      // Only regions that intersect the character can qualify.
      const long long first_region = char_begin / length;
      const long long last_region = std::min(n - 1, (char_end - 1) / length);
      for (long long r = first_region; r <= last_region; ++r) {
        const long long overlap = std::min(char_end, (r + 1) * length) -
                                  std::max(char_begin, r * length);
        if (overlap > 0 && static_cast<double>(overlap) >= required) {
          out.bits[(level_offset + static_cast<std::size_t>(r)) * k +
                   static_cast<std::size_t>(c)] = 1;
        }
      }
    }
    level_offset += static_cast<std::size_t>(n);
  }
  return out;
}

}  // namespace wordspot::phoc
