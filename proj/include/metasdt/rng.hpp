#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace metasdt {

/// Identifier of the generator family below; pinned in run configs so that
/// resample sequences can be reproduced bit-exactly by other implementations.
inline constexpr const char* kRngFamily = "mt19937_64+seed_seq/v1";

/// Counter-addressed random substream. Substream (seed, stream, index) is a
/// std::mt19937_64 seeded through std::seed_seq with the six 32-bit words
///   seed_lo, seed_hi, stream_lo, stream_hi, index_lo, index_hi.
/// Both algorithms are fully specified by the C++ standard, and derived
/// variates avoid the implementation-defined std distributions:
///   uniform()        = (u >> 11) * 2^-53
///   uniform_open()   = ((u >> 11) + 0.5) * 2^-53
///   index_below(n)   = (u * n) >> 64           (128-bit product)
///   normal()         = normal_quantile(uniform_open())
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  std::size_t index_below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
  }
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Stable 64-bit stream identifier for a text label (FNV-1a).
std::uint64_t stream_id(const char* label, std::size_t length);

}  // namespace metasdt
