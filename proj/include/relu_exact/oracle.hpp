#pragma once

#include "relu_exact/model.hpp"

#include <cstdint>
#include <vector>

namespace relu_exact {

struct GridSearchResult {
  ReluNet net;
  double error = 0.0;
  std::int64_t nets_evaluated = 0;
};

// Exhaustively evaluates the squared loss over the grid
// {lo, lo+step, ..., hi}^(k(n+1)) of weights and biases. Independent of the
// trainer's solve path; used to validate it.
GridSearchResult grid_search_train(const SampleSet& s, int k,
                                   const std::vector<double>& alphas, double lo,
                                   double hi, double step, int jobs = 0);

struct RandomProbeResult {
  double min_error = 0.0;
  ReluNet best_net;
  std::uint64_t seed = 0;
};

// Minimum squared loss over `trials` nets sampled from the seeded RNG;
// ball-uniform weights and uniform biases in [-1,1] when norm_constrained,
// otherwise uniform entries in [-2,2].
RandomProbeResult random_probe(const SampleSet& s, int k,
                               const std::vector<double>& alphas, int trials,
                               bool norm_constrained, std::uint64_t seed);

}  // namespace relu_exact
