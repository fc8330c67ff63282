#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trollscore {

// Input data failed validation (malformed record, unknown enum value,
// conflicting labels, ...). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// An internal invariant was violated. The CLI maps this to exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

#define TS_CHECK(cond, msg)                        \
  do {                                             \
    if (!(cond)) throw ::trollscore::InternalError(msg); \
  } while (0)

enum class Label : int { negative = 0, positive = 1 };

inline const char* label_name(Label l) {
  return l == Label::positive ? "positive" : "negative";
}

// Version of the canonical state-action code table. Persisted artifacts
// embed it so files produced under a different table are rejected.
inline constexpr std::uint32_t kPairTableVersion = 1;

// FNV-1a, used to fingerprint input files in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace trollscore
