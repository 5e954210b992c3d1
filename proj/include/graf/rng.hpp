#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace graf {

/// Named branches of the seed derivation tree. A child seed is
/// derive_seed(parent, stream, index); values are part of the on-disk
/// reproducibility contract and must not be renumbered.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kModel = 2,
  kTree = 3,
  kThompson = 4,
  kNoise = 5,
  kBootstrap = 6,
  kShuffle = 7,
  kShapley = 8,
  kCandidates = 9,
  kMember = 10,
  kInitial = 11,
  kProxy = 12,
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t parent, SeedStream stream, std::uint64_t index = 0);

/// Platform-independent random source. std::mt19937_64's output sequence is
/// fixed by the standard; the distributions below are implemented here
/// because the standard library ones are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform double in [0, 1).
  double uniform();
  double normal();

  template <class T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n) in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace graf
