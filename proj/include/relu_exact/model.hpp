#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace relu_exact {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BudgetExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A labeled training sample set: m points in R^n with real labels.
///
/// `unit_ball`, when set, asserts every point has Euclidean norm <= 1
/// (the domain of the learner modules). Reduction instances keep it off
/// since gadget samples have larger norms.
struct SampleSet {
  Eigen::MatrixXd points;  // m x n, one sample per row
  Eigen::VectorXd labels;  // m
  bool unit_ball = false;

  int n() const { return static_cast<int>(points.cols()); }
  int m() const { return static_cast<int>(points.rows()); }

  // Throws ValidationError on shape mismatch or unit-ball violation.
  void validate() const;
};

SampleSet make_sample_set(Eigen::MatrixXd points, Eigen::VectorXd labels,
                          bool unit_ball = false);

/// Depth-2 sum-of-ReLUs network with k units, sign coefficients in {+1,-1},
/// per-unit weight vectors and biases.
///
/// `normalized`, when set, asserts ||w_j|| <= 1 and b_j in [-1,1] for all j.
struct ReluNet {
  Eigen::VectorXd alphas;   // k entries, each exactly +1 or -1
  Eigen::MatrixXd weights;  // k x n
  Eigen::VectorXd biases;   // k
  bool normalized = false;

  int k() const { return static_cast<int>(weights.rows()); }
  int n() const { return static_cast<int>(weights.cols()); }

  void validate() const;

  double eval(const Eigen::VectorXd& x) const;
};

ReluNet make_relu_net(Eigen::VectorXd alphas, Eigen::MatrixXd weights,
                      Eigen::VectorXd biases, bool normalized = false);

/// Which unit is constrained active (affine form >= 0) at which sample.
/// bits are stored row-major: bit(j, i) covers unit j at sample i.
struct ActivationPattern {
  int units = 0;
  int samples = 0;
  std::vector<std::uint8_t> bits;

  bool bit(int unit, int sample) const {
    return bits[static_cast<std::size_t>(unit) * samples + sample] != 0;
  }
  void set_bit(int unit, int sample, bool value) {
    bits[static_cast<std::size_t>(unit) * samples + sample] = value ? 1 : 0;
  }
};

ActivationPattern make_activation_pattern(int units, int samples);

// [<w,x> + b]_+
double eval_unit(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x);

// sum_j alpha_j [<w_j,x> + b_j]_+
double eval_net(const ReluNet& net, const Eigen::VectorXd& x);

// sum_i (eval_net(net, x_i) - y_i)^2
double squared_loss(const ReluNet& net, const SampleSet& s);

// Mean over samples of the gamma-margin false-positive surrogate: 0 when
// y != 0; otherwise 0 / f(x)/gamma / 1 depending on where f(x) falls in
// (-inf,0], (0,gamma), [gamma,inf).
double gamma_cont_loss(const ReluNet& net, const SampleSet& s, double gamma);

// Fraction of all samples where y_i = 0 and the net output is strictly
// positive. Threshold is exactly 0, no epsilon.
double false_positive_rate(const ReluNet& net, const SampleSet& s);

// --- serialization -------------------------------------------------------

std::string sample_set_to_json(const SampleSet& s);
SampleSet sample_set_from_json(const std::string& text);

std::string sample_set_to_csv(const SampleSet& s);
SampleSet sample_set_from_csv(const std::string& text);

std::string relu_net_to_json(const ReluNet& net);
ReluNet relu_net_from_json(const std::string& text);

}  // namespace relu_exact
