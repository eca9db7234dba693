#pragma once

#include <cstdint>
#include <random>

namespace qwalk {

// splitmix64 step; used for seed expansion and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seedable, splittable random stream. split(tag) derives a child stream as a
// pure function of (seed, tag), so concurrent trials stay bit-reproducible
// regardless of scheduling. A stream is never shared across threads.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  RngStream split(std::uint64_t tag) const {
    std::uint64_t s = seed_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    return RngStream(splitmix64(s));
  }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  double uniform() { return std::generate_canonical<double, 53>(engine_); }

  // inclusive range
  long long uniform_int(long long lo, long long hi) {
    return std::uniform_int_distribution<long long>(lo, hi)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace qwalk
