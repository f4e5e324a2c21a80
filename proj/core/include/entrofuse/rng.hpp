#ifndef ENTROFUSE_RNG_HPP
#define ENTROFUSE_RNG_HPP

#include <cstdint>
#include <random>

namespace entrofuse {

/// SplitMix64 finalizer, used to turn (master seed, stream id) pairs into
/// well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Deterministic random stream. One master seed fans out into independent
/// streams keyed by id (particle index, model/fold pair, ...), so serial and
/// parallel consumers draw identical sequences. Doubles are produced with the
/// canonical 53-bit construction rather than std::uniform_real_distribution,
/// whose algorithm is implementation-defined.
class RandomStream {
public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(mix64(master_seed ^ mix64(stream_id + 1))) {}

  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling keeps the result
  /// unbiased and platform-stable.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

} // namespace entrofuse

#endif
