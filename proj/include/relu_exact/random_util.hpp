#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace relu_exact {

// Uniform point in the unit ball: normalized Gaussian direction scaled by
// U^(1/n).
inline Eigen::VectorXd ball_uniform(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double radius = std::pow(unif(rng), 1.0 / n);
  return dir * (radius / norm);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace relu_exact
