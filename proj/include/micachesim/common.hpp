#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace micachesim {

// All caches and the DRAM mapping work on 64-byte lines. This is a global
// architectural constant, not a tunable: the trace format, the generators and
// the address interleaving all assume it.
inline constexpr uint64_t kLineBytes = 64;

inline constexpr uint64_t line_of(uint64_t addr) { return addr & ~(kLineBytes - 1); }

inline constexpr bool is_power_of_two(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline constexpr uint32_t log2_exact(uint64_t v) {
  uint32_t n = 0;
  while (v > 1) {
    v >>= 1;
    ++n;
  }
  return n;
}

// Configuration or API misuse that no amount of input data should trigger.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace micachesim
