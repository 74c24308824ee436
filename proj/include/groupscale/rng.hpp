#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace groupscale {

// Seeded RNG with hand-rolled distributions so that streams are identical
// across standard library implementations, not just across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t integer(std::uint64_t n) { return gen_() % n; }

  // standard normal via Box-Muller, one cached value
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::vector<int> permutation(std::size_t n) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  // stable independent stream for (seed, stream) pairs
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace groupscale
