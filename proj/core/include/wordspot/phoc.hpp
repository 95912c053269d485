#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wordspot::phoc {

inline constexpr std::string_view kDefaultAlphabet =
    "abcdefghijklmnopqrstuvwxyz0123456789";

// Pyramid configuration. Validated on construction via make_config().
struct PhocConfig {
  std::string alphabet{kDefaultAlphabet};
  std::vector<int> levels{1, 2, 4, 8};
  double overlap_threshold = 0.5;
  // When false, transcriptions keep their case and the alphabet is matched
  // verbatim (e.g. a 62-character alphabet).
  bool lowercase = true;

  std::size_t dimension() const;
  // Stable fingerprint of the configuration, stored with every vector.
  std::uint64_t fingerprint() const;
};

// Throws Error(kInvalidConfig) on duplicate characters, non-increasing or
// non-positive levels, or a threshold outside (0, 1].
PhocConfig make_config(std::string alphabet, std::vector<int> levels,
                       double overlap_threshold = 0.5, bool lowercase = true);
void validate(const PhocConfig& config);

// Parses "1,2,4,8".
std::vector<int> parse_levels(std::string_view text);

struct PhocVector {
  std::vector<std::uint8_t> bits;
  std::uint64_t config_id = 0;

  std::size_t size() const { return bits.size(); }
  std::vector<double> as_real() const;
  std::string to_string() const;  // one '0'/'1' per attribute
};

// Position of a single attribute in the level-major, region, alphabet layout.
struct AttributeIndex {
  std::size_t level_index = 0;  // index into config.levels
  int region = 0;               // 0-based region within the level
  std::size_t char_index = 0;   // position in the alphabet

  friend bool operator==(const AttributeIndex&, const AttributeIndex&) = default;
};

std::size_t flat_index(const PhocConfig& config, const AttributeIndex& index);
AttributeIndex decode_index(const PhocConfig& config, std::size_t flat);

// Case-folds (when configured) and drops characters not in the alphabet.
std::string normalize_transcription(std::string_view raw,
                                    const PhocConfig& config);

// `word` must already be normalized. Throws Error(kEmptyWord) when empty and
// Error(kInvalidArgument-class) when it contains out-of-alphabet characters.
PhocVector encode(std::string_view word, const PhocConfig& config);

}  // namespace wordspot::phoc
