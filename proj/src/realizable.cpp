#include "relu_exact/realizable.hpp"

namespace relu_exact {

RealizableResult check_realizable_single(const SampleSet& s, bool with_bias,
                                         const SolverConfig& cfg) {
  s.validate();
  if (s.m() < 1) throw ValidationError("realizability check needs m >= 1");

  RealizableResult result;
  for (int i = 0; i < s.m(); ++i) {
    if (s.labels[i] < 0.0) return result;  // no assignment satisfies it
  }

  // The bias folds in as a constant-one coordinate.
  const int d = with_bias ? s.n() + 1 : s.n();
  std::vector<LinearEquality> equalities;
  std::vector<LinearInequality> inequalities;
  for (int i = 0; i < s.m(); ++i) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
    z.head(s.n()) = s.points.row(i).transpose();
    if (with_bias) z[s.n()] = 1.0;
    if (s.labels[i] > 0.0) {
      equalities.push_back({std::move(z), s.labels[i]});
    } else {
      inequalities.push_back({std::move(z), 0.0});
    }
  }

  const SolveResult feas = check_feasible(d, inequalities, equalities, cfg);
  if (feas.status == SolveStatus::kNonConverged) {
    throw NonConvergedError("feasibility solver did not converge");
  }
  if (feas.status == SolveStatus::kInfeasible) return result;

  result.status = RealizableStatus::kFit;
  result.w = feas.solution.head(s.n());
  result.b = with_bias ? feas.solution[s.n()] : 0.0;
  return result;
}

}  // namespace relu_exact
