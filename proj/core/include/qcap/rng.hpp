#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace qcap {

// splitmix64; used to seed streams and to hash stream tags.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// xoshiro256++ with explicitly coded distributions so results do not depend
// on the standard library implementation.
//
// Stream discipline: every consumer derives its own child generator with
// split(tag) or split(tag, index) instead of sharing one sequence. The split
// is a pure function of (parent seed material, tag), so adding consumers or
// reordering calls never perturbs sibling streams.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = mix64(x += 0x9e3779b97f4a7c15ULL);
    seed_material_ = mix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) {
    // Lemire rejection; unbiased.
    uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  uint64_t binomial(uint64_t n, double p) {
    uint64_t k = 0;
    for (uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  Rng split(const std::string& tag) const {
    uint64_t h = seed_material_;
    for (const char c : tag) h = mix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return Rng(h);
  }

  Rng split(const std::string& tag, uint64_t index) const {
    Rng child = split(tag);
    return Rng(mix64(child.seed_material_ ^ mix64(index)));
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4]{};
  uint64_t seed_material_{};
};

}  // namespace qcap
