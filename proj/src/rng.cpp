#include "metasdt/rng.hpp"

#include "metasdt/gaussian.hpp"

namespace metasdt {

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(index), hi(index)};
  return std::mt19937_64(seq);
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    : engine_(seeded(seed, stream, index)) {}

double SubstreamRng::normal() { return normal_quantile(uniform_open()); }

std::uint64_t stream_id(const char* label, std::size_t length) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < length; ++i) {
    h ^= static_cast<unsigned char>(label[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace metasdt
