#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace alignnet {

// Error taxonomy. Callers that can recover catch the specific type; the CLI
// catches std::exception and turns anything into a one-line diagnostic.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndicatorError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct StatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a over raw bytes. Used for parameter fingerprints in training logs and
// the freeze checks; not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_values(std::span<const double> v) {
  return fnv1a64(v.data(), v.size() * sizeof(double));
}

}  // namespace alignnet
