#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "omega/common.hpp"

namespace omega {

// Deterministic random source. The engine (mt19937_64) is bit-exact by
// standard; the value transforms are hand-rolled because the std
// distributions are implementation-defined and would break byte-identical
// reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second sample of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::int64_t below(std::int64_t n) {
    require(n > 0, "Rng::below: n must be positive");
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::int64_t>(x % un);
  }

  std::vector<int> sample_with_replacement(int population, int count) {
    std::vector<int> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = static_cast<int>(below(population));
    return out;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(static_cast<std::int64_t>(i)));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fans one root seed out into independent named streams (data/init/batching/
// kmeans/...), so adding draws to one component never perturbs the others.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t root) : root_(root) {}

  std::uint64_t derive(std::string_view name) const {
    // FNV-1a over the name, keyed by the root, then a splitmix64 finalizer.
    std::uint64_t h = 1469598103934665603ULL ^ (root_ * 0x9e3779b97f4a7c15ULL);
    for (const char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
  }

  Rng stream(std::string_view name) const { return Rng(derive(name)); }

  std::uint64_t root() const { return root_; }

 private:
  std::uint64_t root_;
};

}  // namespace omega
