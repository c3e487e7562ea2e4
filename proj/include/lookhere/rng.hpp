#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lookhere {

/// Seeded Gaussian draws for learnable-table initialization. All randomized
/// construction in the toolkit goes through this so that a seed pins every
/// artifact bit-for-bit on a given platform.
class GaussianSource {
 public:
  explicit GaussianSource(uint64_t seed, double stddev = 1.0)
      : engine_(seed), dist_(0.0, stddev) {}

  double next() { return dist_(engine_); }

  std::vector<double> draw(size_t count) {
    std::vector<double> out(count);
    for (auto& v : out) v = dist_(engine_);
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

}  // namespace lookhere
