#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sparsegeo {

// 64-bit avalanche mix (splitmix64 finalizer). Every derived seed in the
// project goes through this function; the constants are part of the
// reproducibility contract and must not change between versions.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream tags keeping independent random streams from colliding.
namespace stage {
inline constexpr std::uint64_t graph = 1;
inline constexpr std::uint64_t features = 2;
inline constexpr std::uint64_t masks = 3;
inline constexpr std::uint64_t scan = 4;
inline constexpr std::uint64_t draw = 5;
inline constexpr std::uint64_t weights = 6;
inline constexpr std::uint64_t probes = 7;
inline constexpr std::uint64_t retry = 8;
inline constexpr std::uint64_t train = 9;
}  // namespace stage

// Seed for (level, draw, stage) derived from a master seed. Independent of
// execution order, so parallel draws reproduce bit-identically.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t level,
                                    std::uint64_t draw,
                                    std::uint64_t stage_tag) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ mix64(level + 0x3c6ef372fe94f82bull));
  h = mix64(h ^ mix64(draw + 0x78dde6e5fd29f05bull));
  h = mix64(h ^ mix64(stage_tag + 0xb504f333f9de6484ull));
  return h;
}

// Deterministic random stream. mt19937_64 has a standard-specified output
// sequence; the double-valued draws below are hand-rolled because the
// std:: distributions are implementation-defined and would break bit-exact
// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, no caching so the stream position stays predictable.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n) by rejection; exact, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sparsegeo
