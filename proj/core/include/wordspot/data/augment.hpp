#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wordspot/data/dataset.hpp"
#include "wordspot/diff/array.hpp"
#include "wordspot/phoc.hpp"

namespace wordspot::data {

// Class-balanced augmentation. These ranges are a stand-in for the original
// augmentation procedure; only the per-class balance and the total count are
// load-bearing.
struct AugmentationPlan {
  std::size_t target_total = 10000;
  double rotation_deg = 5.0;     // uniform in [-r, r]
  double shear_deg = 5.0;        // uniform in [-s, s]
  double scale_min = 0.9;        // independent horizontal / vertical scale
  double scale_max = 1.1;
  double translate_frac = 0.05;  // of width / height, uniform in [-t, t]
  std::uint64_t seed = 0;
};

struct AffineParams {
  double rotation_rad = 0.0;
  double shear_rad = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;
  double translate_x = 0.0;  // pixels
  double translate_y = 0.0;
};

// Warps a 1 x H x W normalized image about its center with bilinear
// resampling; samples outside the source read 0.0 (paper background).
diff::Array warp_affine(const diff::Array& image, const AffineParams& params);

struct AugmentedSample {
  diff::Array image;          // normalized, 1 x H x W
  std::string transcription;  // copied from the source sample
  std::size_t class_index = 0;
  std::size_t source_index = 0;
};

// Lazily generated, fully seed-determined stream of target_total images.
// Classes are normalized transcriptions. Class k owns a contiguous index
// range holding target_total / K images (the first target_total % K classes
// get one more). Image j of class k draws its source and transform from an
// RNG seeded by (seed, k, j), so any index can be produced independently.
class AugmentedStream {
 public:
  // `samples` must outlive the stream. Samples whose transcription
  // normalizes to an empty string are ignored. Classes are ordered by name.
  // Throws kEmptyClass if no class remains or target_total < class count.
  AugmentedStream(std::span<const WordSample> samples,
                  const phoc::PhocConfig& phoc_config, AugmentationPlan plan);

  std::size_t size() const { return plan_.target_total; }
  std::size_t class_count() const { return classes_.size(); }
  const std::string& class_name(std::size_t k) const { return classes_[k]; }
  std::size_t per_class_count(std::size_t k) const;
  std::size_t class_of(std::size_t index) const;
  const AugmentationPlan& plan() const { return plan_; }

  // Transform drawn for `index`, with translations still expressed as
  // fractions of the source width / height.
  AffineParams sample_transform(std::size_t index) const;
  AugmentedSample generate(std::size_t index) const;

 private:
  std::span<const WordSample> samples_;
  AugmentationPlan plan_;
  std::vector<std::string> classes_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> class_start_;  // prefix offsets, size K + 1
};

}  // namespace wordspot::data
