#pragma once

// Exact-arithmetic PHOC reference built on boost::rational. It shares no code
// with the library: intervals are kept as fractions of the unit word length.

#include <boost/rational.hpp>
#include <string>
#include <vector>

namespace oracle {

using Q = boost::rational<long long>;

inline std::vector<int> phoc(const std::string& word, const std::string& alphabet,
                             const std::vector<int>& levels,
                             Q threshold = Q(1, 2)) {
  std::vector<int> out;
  const long long n = static_cast<long long>(word.size());
  for (const int level : levels) {
    for (int region = 0; region < level; ++region) {
      const Q r_lo(region, level);
      const Q r_hi(region + 1, level);
      std::vector<int> hist(alphabet.size(), 0);
      for (long long i = 0; i < n; ++i) {
        const Q c_lo(i, n);
        const Q c_hi(i + 1, n);
        const Q lo = c_lo > r_lo ? c_lo : r_lo;
        const Q hi = c_hi < r_hi ? c_hi : r_hi;
        if (hi <= lo) continue;
        // Share of the character's own interval that falls in the region.
        if ((hi - lo) / Q(1, n) >= threshold) {
          hist[alphabet.find(word[static_cast<std::size_t>(i)])] = 1;
        }
      }
      out.insert(out.end(), hist.begin(), hist.end());
    }
  }
  return out;
}

}  // namespace oracle
