#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace relu_exact {

// <coeff, v> + constant <= 0
struct LinearInequality {
  Eigen::VectorXd coeff;
  double constant = 0.0;
};

// <coeff, v> = rhs
struct LinearEquality {
  Eigen::VectorXd coeff;
  double rhs = 0.0;
};

// One squared residual (<coeff, v> + constant - target)^2.
struct ResidualTerm {
  Eigen::VectorXd coeff;
  double constant = 0.0;
  double target = 0.0;
};

struct BoxConstraint {
  int index = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Convex subproblem arising from one activation-pattern guess: a sum of
/// squared affine residuals over linear inequality constraints, with
/// optional per-group Euclidean-ball constraints (||v_G|| <= 1) and
/// per-variable boxes.
struct ConstrainedLsq {
  int num_vars = 0;
  std::vector<ResidualTerm> residuals;
  std::vector<LinearInequality> inequalities;
  std::vector<std::vector<int>> ball_groups;
  std::vector<BoxConstraint> boxes;
};

struct SolverConfig {
  double beta = 1e-8;            // additive accuracy on the objective value
  int max_iterations = 100000;
  double feasibility_tol = 1e-8;
};

enum class SolveStatus { kOptimal, kInfeasible, kNonConverged };

struct SolveResult {
  SolveStatus status = SolveStatus::kNonConverged;
  Eigen::VectorXd solution;
  double value = 0.0;
  int iterations = 0;
  // Set when the ball stage was skipped because the relaxation value already
  // exceeded the caller's cutoff; value is then only a lower bound.
  bool value_is_lower_bound = false;
};

/// Assembled matrix form: minimize ||R v - t||^2 subject to A v <= b and the
/// ball groups. Boxes and equalities fold into A. The hot path of the
/// trainer builds this directly.
struct DenseLsq {
  Eigen::MatrixXd R;
  Eigen::VectorXd t;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<std::vector<int>> ball_groups;
};

// skip_ball_above: when the linear relaxation already has value above this
// cutoff, the (more expensive) ball stage is skipped and the result is
// flagged as a lower bound.
SolveResult solve_dense(const DenseLsq& problem, const SolverConfig& cfg,
                        double skip_ball_above = std::numeric_limits<double>::infinity());

// Minimizes the residual sum subject to all constraints. The returned value
// is the objective evaluated at the returned point; constraint violation at
// the point stays within cfg.feasibility_tol.
SolveResult solve(const ConstrainedLsq& problem, const SolverConfig& cfg);

// Finds any point satisfying the equalities and inequalities within
// cfg.feasibility_tol, or reports infeasibility.
SolveResult check_feasible(int num_vars,
                           const std::vector<LinearInequality>& inequalities,
                           const std::vector<LinearEquality>& equalities,
                           const SolverConfig& cfg);

double objective_value(const ConstrainedLsq& problem, const Eigen::VectorXd& v);

// Largest violation of any constraint of `problem` at v (0 when feasible).
double max_violation(const ConstrainedLsq& problem, const Eigen::VectorXd& v);

}  // namespace relu_exact
