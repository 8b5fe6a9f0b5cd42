#pragma once

#include "relu_exact/model.hpp"
#include "relu_exact/subproblem.hpp"

namespace relu_exact {

enum class RealizableStatus { kFit, kNotRealizable };

struct RealizableResult {
  RealizableStatus status = RealizableStatus::kNotRealizable;
  Eigen::VectorXd w;
  double b = 0.0;
};

// Polynomial-time exact-fit check for a single ReLU: each positive label
// becomes a linear equality, each zero label a nonpositivity constraint,
// and any negative label is unfittable outright. Throws NonConvergedError
// when the feasibility solver gives up (distinct from NotRealizable).
RealizableResult check_realizable_single(const SampleSet& s, bool with_bias = true,
                                         const SolverConfig& cfg = {});

}  // namespace relu_exact
