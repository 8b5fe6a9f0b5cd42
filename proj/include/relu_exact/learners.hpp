#pragma once

#include "relu_exact/exact_trainer.hpp"
#include "relu_exact/model.hpp"

#include <cstdint>
#include <functional>

namespace relu_exact {

/// Pull-based i.i.d. sample stream over the unit ball.
using SampleSource = std::function<std::pair<Eigen::VectorXd, double>()>;

struct LearnerConfig {
  int k = 1;
  double epsilon = 0.1;  // target excess error
  double delta = 0.1;    // failure probability
  double constant_scale = 1.0;
  SolverConfig solver{/*beta=*/0.0};  // beta 0 means pick epsilon/100
  int parallelism = 0;
  std::uint64_t max_joint_patterns = std::uint64_t{1} << 27;

  void validate() const;
};

// ceil(scale * 10^10 * k^4 * (1 + ln(1/delta)) / eps^2)
std::int64_t sample_count_agnostic(const LearnerConfig& cfg);

// ceil(scale * 10^10 * k^6 * ln(2/delta) / eps^4)
std::int64_t sample_count_reliable(const LearnerConfig& cfg);

struct LearnOutcome {
  ReluNet net;
  ReluNet net_preshift;  // reliable learner only; equal to net otherwise
  std::int64_t samples_used = 0;
  double training_loss = 0.0;
  SampleSet training_set;
};

// ERM over the norm-one class: draws the agnostic sample count and runs the
// exact trainer with all-positive coefficients and unit-ball weights.
LearnOutcome learn_agnostic(const SampleSource& source, const LearnerConfig& cfg);

// Reliable variant: trains under the zero-output constraint on y = 0
// samples, then shifts every bias down by gamma = eps / (12 k^2), clamped
// at -1, so sub-gamma activations become exact zeros.
LearnOutcome learn_reliable(const SampleSource& source, const LearnerConfig& cfg);

double reliable_bias_shift(int k, double epsilon);  // eps / (12 k^2)

// 2k / sqrt(m)
double rademacher_bound(int k, std::int64_t m);

// 4 L R_m + 2 b sqrt(ln(1/delta) / m); squared loss on [0,2k]^2 uses
// L = 4k, b = 4k^2.
double generalization_bound(int k, std::int64_t m, double delta, double lipschitz,
                            double bound);

}  // namespace relu_exact
