#pragma once

#include <cstdint>
#include <random>

#include "tdekit/field.hpp"

namespace tde {

// Seeded generator with a platform-stable uniform mapping (the distribution
// classes in <random> are not guaranteed to produce identical streams across
// standard libraries; bit-twiddling is).
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vec point_in(const DomainBox& box) {
    Vec x(static_cast<std::size_t>(box.dim()));
    for (int i = 0; i < box.dim(); ++i)
      x[static_cast<std::size_t>(i)] =
          uniform(box.lower[static_cast<std::size_t>(i)], box.upper[static_cast<std::size_t>(i)]);
    return x;
  }
};

}  // namespace tde
