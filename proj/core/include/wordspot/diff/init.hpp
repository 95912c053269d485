#pragma once

#include <cstddef>
#include <random>

#include "wordspot/diff/array.hpp"

namespace wordspot::diff {

// I.i.d. samples from N(0, 2 / fan), the He et al. initialization. `fan` is
// the layer size the variance is normalized by (see arch::InitFan).
Array he_init(const Shape& shape, std::size_t fan, std::mt19937_64& rng);

}  // namespace wordspot::diff
