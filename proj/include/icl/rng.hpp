#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace icl {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// stable derivation of per-sample seeds from (run seed, sample index)
inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Seeded RNG with hand-rolled draw helpers. std::uniform_int_distribution is
// implementation-defined, so seeded experiment runs would not replay across
// standard libraries; everything here is pinned to the mt19937_64 stream.
class StableRng {
 public:
  explicit StableRng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform draw in [0, n), rejection sampled so there is no modulo bias
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("StableRng::below: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  // inclusive range
  int range(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("StableRng::range: empty range");
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // [0, 1)
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw std::invalid_argument("StableRng::pick: empty vector");
    return v[static_cast<size_t>(below(v.size()))];
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace icl
