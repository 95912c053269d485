#include "wordspot/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "wordspot/error.hpp"

namespace wordspot::data {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::mt19937_64 item_rng(std::uint64_t seed, std::size_t k, std::size_t j) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  const auto hi = [](std::uint64_t v) {
    return static_cast<std::uint32_t>(v >> 32);
  };
  std::seed_seq seq{lo(seed), hi(seed), lo(k), hi(k), lo(j), hi(j)};
  return std::mt19937_64(seq);
}

}  // namespace

diff::Array warp_affine(const diff::Array& image, const AffineParams& p) {
  const std::size_t height = image.extent(1);
  const std::size_t width = image.extent(2);
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;

  // Forward map A = R * Shear * Scale on centered coordinates, then translate.
  const double c = std::cos(p.rotation_rad);
  const double s = std::sin(p.rotation_rad);
  const double k = std::tan(p.shear_rad);
  const double a00 = c * p.scale_x;
  const double a01 = (c * k - s) * p.scale_y;
  const double a10 = s * p.scale_x;
  const double a11 = (s * k + c) * p.scale_y;
  const double det = a00 * a11 - a01 * a10;
  const double i00 = a11 / det, i01 = -a01 / det;
  const double i10 = -a10 / det, i11 = a00 / det;

  const auto read = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(height) ||
        x >= static_cast<std::ptrdiff_t>(width)) {
      return 0.0;
    }
    return image[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
  };

  diff::Array out({1, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx - p.translate_x;
      const double dy = static_cast<double>(y) - cy - p.translate_y;
      const double sx = i00 * dx + i01 * dy + cx;
      const double sy = i10 * dx + i11 * dy + cy;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const double wx = sx - fx;
      const double wy = sy - fy;
      const auto x0 = static_cast<std::ptrdiff_t>(fx);
      const auto y0 = static_cast<std::ptrdiff_t>(fy);
      double v = (1.0 - wy) * (1.0 - wx) * read(y0, x0);
      if (wx != 0.0) v += (1.0 - wy) * wx * read(y0, x0 + 1);
      if (wy != 0.0) v += wy * (1.0 - wx) * read(y0 + 1, x0);
      if (wx != 0.0 && wy != 0.0) v += wy * wx * read(y0 + 1, x0 + 1);
      out[y * width + x] = v;
    }
  }
  return out;
}

AugmentedStream::AugmentedStream(std::span<const WordSample> samples,
                                 const phoc::PhocConfig& phoc_config,
                                 AugmentationPlan plan)
    : samples_(samples), plan_(plan) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto key = phoc::normalize_transcription(samples[i].transcription, phoc_config);
    if (key.empty()) continue;
    by_class[std::move(key)].push_back(i);
  }
  if (by_class.empty()) {
    throw Error(ErrorCode::kEmptyClass, "no usable samples to augment");
  }
  if (plan_.target_total < by_class.size()) {
    throw Error(ErrorCode::kEmptyClass,
                "target_total " + std::to_string(plan_.target_total) +
                    " leaves some of the " + std::to_string(by_class.size()) +
                    " classes without images");
  }
  if (plan_.scale_min <= 0.0 || plan_.scale_max < plan_.scale_min) {
    throw Error(ErrorCode::kInvalidConfig, "invalid augmentation scale range");
  }
  for (auto& [name, members] : by_class) {
    classes_.push_back(name);
    members_.push_back(std::move(members));
  }
  const std::size_t k = classes_.size();
  class_start_.assign(k + 1, 0);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t count =
        plan_.target_total / k + (c < plan_.target_total % k ? 1 : 0);
    class_start_[c + 1] = class_start_[c] + count;
  }
}

std::size_t AugmentedStream::per_class_count(std::size_t k) const {
  return class_start_[k + 1] - class_start_[k];
}

std::size_t AugmentedStream::class_of(std::size_t index) const {
  const auto it =
      std::upper_bound(class_start_.begin(), class_start_.end(), index);
  return static_cast<std::size_t>(it - class_start_.begin()) - 1;
}

AffineParams AugmentedStream::sample_transform(std::size_t index) const {
  const std::size_t k = class_of(index);
  auto rng = item_rng(plan_.seed, k, index - class_start_[k]);
  rng.discard(1);  // the first draw picks the source image
  constexpr double kDeg = std::numbers::pi / 180.0;
  AffineParams p;
  p.rotation_rad = uniform(rng, -plan_.rotation_deg, plan_.rotation_deg) * kDeg;
  p.shear_rad = uniform(rng, -plan_.shear_deg, plan_.shear_deg) * kDeg;
  p.scale_x = uniform(rng, plan_.scale_min, plan_.scale_max);
  p.scale_y = uniform(rng, plan_.scale_min, plan_.scale_max);
  p.translate_x = uniform(rng, -plan_.translate_frac, plan_.translate_frac);
  p.translate_y = uniform(rng, -plan_.translate_frac, plan_.translate_frac);
  return p;
}

AugmentedSample AugmentedStream::generate(std::size_t index) const {
  if (index >= size()) {
    throw Error(ErrorCode::kInvalidConfig, "augmentation index out of range");
  }
  const std::size_t k = class_of(index);
  auto rng = item_rng(plan_.seed, k, index - class_start_[k]);
  const auto& members = members_[k];
  const std::size_t pick = std::min(
      members.size() - 1,
      static_cast<std::size_t>(uniform(rng, 0.0, 1.0) *
                               static_cast<double>(members.size())));
  const WordSample& source = samples_[members[pick]];

  AffineParams params = sample_transform(index);
  params.translate_x *= static_cast<double>(source.image.width);
  params.translate_y *= static_cast<double>(source.image.height);

  AugmentedSample out;
  out.image = warp_affine(normalize_pixels(source.image), params);
  out.transcription = source.transcription;
  out.class_index = k;
  out.source_index = members[pick];
  return out;
}

}  // namespace wordspot::data
