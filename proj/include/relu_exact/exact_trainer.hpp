#pragma once

#include "relu_exact/model.hpp"
#include "relu_exact/subproblem.hpp"

#include <cstdint>
#include <vector>

namespace relu_exact {

enum class EnumerationMode {
  kAuto,           // full bit matrices when tiny, activation cells otherwise
  kCells,          // realizable strict sign vectors per unit
  kFullBitMatrix,  // all 2^(km) patterns
};

struct TrainOptions {
  int k = 1;
  std::vector<double> alphas;  // empty means all +1; entries must be +/-1
  bool norm_constrained = false;
  bool reliable = false;
  bool train_bias = true;  // when false every bias is pinned at zero
  SolverConfig solver;
  int parallelism = 0;  // 0 picks the hardware default
  EnumerationMode enumeration = EnumerationMode::kAuto;
  int guard_km_plus_k = 30;
  std::uint64_t max_joint_patterns = std::uint64_t{1} << 27;
  double stop_below_error = -1.0;  // negative disables early stopping
};

struct TrainResult {
  ReluNet net;
  double error = 0.0;
  ActivationPattern pattern;
  std::int64_t patterns_searched = 0;
  std::int64_t patterns_infeasible = 0;
  std::int64_t solver_failures = 0;
  std::int64_t cells_per_unit = 0;  // 0 in full bit-matrix mode
};

// Builds the convex subproblem for one activation-pattern guess.
ConstrainedLsq pattern_constraints(const ActivationPattern& pattern,
                                   const SampleSet& s, const TrainOptions& opts);

// Global trainer: enumerates activation patterns, solves the convex
// subproblem of each, and keeps the best. The returned error is within
// opts.solver.beta of the true constrained minimum.
TrainResult train_exact(const SampleSet& s, const TrainOptions& opts);

// Same, minimizing additionally over all 2^k sign vectors; the winning
// alphas are recorded on the returned net.
TrainResult train_exact_unknown_coeffs(const SampleSet& s, const TrainOptions& opts);

}  // namespace relu_exact
