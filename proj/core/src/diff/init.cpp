#include "wordspot/diff/init.hpp"

#include <cmath>

#include "wordspot/error.hpp"

namespace wordspot::diff {

Array he_init(const Shape& shape, std::size_t fan, std::mt19937_64& rng) {
  if (fan == 0) {
    throw Error(ErrorCode::kInvalidConfig, "he_init: fan must be positive");
  }
  std::normal_distribution<double> normal(
      0.0, std::sqrt(2.0 / static_cast<double>(fan)));
  Array out(shape);
  for (double& v : out.storage()) v = normal(rng);
  return out;
}

}  // namespace wordspot::diff
