#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace wordspot {

// 64-bit FNV-1a. Used for configuration and architecture fingerprints.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view text) { return update(text.data(), text.size()); }
  template <typename T>
  Fnv1a& update_value(const T& value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    return update(raw, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace wordspot
