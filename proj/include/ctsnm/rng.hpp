#ifndef CTSNM_RNG_HPP
#define CTSNM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ctsnm {

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// bit-identical across standard libraries and platforms. Independent
// per-subject streams are derived from (seed, subject index).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  // Stream for one subject: mixes the dataset seed with the subject index so
  // that subject k's draws do not depend on how many subjects are generated.
  static Rng subject_stream(std::uint64_t seed, std::uint64_t subject_index) {
    return Rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (subject_index + 1))));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double normal(double mean = 0.0, double sd = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sd * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return mean + sd * r * std::cos(a);
  }

  // Beta(2,2) as the median of three uniforms.
  double beta22() {
    double a = uniform(), b = uniform(), c = uniform();
    const double lo = std::fmin(a, std::fmin(b, c));
    const double hi = std::fmax(a, std::fmax(b, c));
    return a + b + c - lo - hi;
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  void seed_state(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto &s : s_) {
      x = splitmix64(x);
      s = x;
    }
    // xoshiro must not start from the all-zero state
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ctsnm

#endif
