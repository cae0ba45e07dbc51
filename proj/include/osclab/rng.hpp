#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace osclab {

/// SplitMix64 finalizer. Used only to derive substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Substream seed as a pure function of a master seed and a path of indices,
/// e.g. derive_seed(master, {tag, n_index, rep_index}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags keep independent consumers of one master seed apart.
enum class StreamTag : std::uint64_t {
  kReplicate = 1,
  kReference = 2,
  kCoupling = 3,
  kOracle = 4,
  kSample = 5,
};

/// A per-task random stream. Never share one between threads.
class Stream {
 public:
  using engine_type = std::mt19937_64;

  explicit Stream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  Stream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
      : Stream(derive_seed(master, path)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  engine_type& engine() noexcept { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    for (;;) {
      const double u = std::generate_canonical<double, 53>(engine_);
      if (u > 0.0) return u;
    }
  }

  double normal() { return normal_(engine_); }
  double exponential() { return exponential_(engine_); }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace osclab
