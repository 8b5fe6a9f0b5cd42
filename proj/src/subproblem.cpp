#include "relu_exact/subproblem.hpp"

#include "relu_exact/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relu_exact {

namespace {

Eigen::VectorXd min_norm_lsq(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs) {
  if (M.rows() == 0) return Eigen::VectorXd::Zero(M.cols());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
  return cod.solve(rhs);
}

// Exact minimizer over s in [0,1] of the piecewise quadratic
//   phi(s) = sum_eq (r_i + s dr_i)^2 + sum_ineq max(0, w_i + s dw_i)^2.
double piecewise_line_search(const Eigen::VectorXd& r, const Eigen::VectorXd& dr,
                             const Eigen::VectorXd& w, const Eigen::VectorXd& dw) {
  std::vector<double> knots{0.0, 1.0};
  for (int i = 0; i < w.size(); ++i) {
    if (dw[i] != 0.0) {
      const double s = -w[i] / dw[i];
      if (s > 0.0 && s < 1.0) knots.push_back(s);
    }
  }
  std::sort(knots.begin(), knots.end());

  const auto phi = [&](double s) {
    double total = (r + s * dr).squaredNorm();
    for (int i = 0; i < w.size(); ++i) {
      const double h = w[i] + s * dw[i];
      if (h > 0.0) total += h * h;
    }
    return total;
  };

  double best_s = 0.0;
  double best_phi = phi(0.0);
  for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
    const double lo = knots[seg], hi = knots[seg + 1];
    if (hi - lo <= 0.0) continue;
    const double mid = 0.5 * (lo + hi);
    double q2 = dr.squaredNorm(), q1 = 2.0 * r.dot(dr);
    for (int i = 0; i < w.size(); ++i) {
      if (w[i] + mid * dw[i] > 0.0) {
        q2 += dw[i] * dw[i];
        q1 += 2.0 * w[i] * dw[i];
      }
    }
    double cand = hi;
    if (q2 > 0.0) cand = std::clamp(-q1 / (2.0 * q2), lo, hi);
    for (double s : {cand, hi}) {
      const double value = phi(s);
      if (value < best_phi) {
        best_phi = value;
        best_s = s;
      }
    }
  }
  return best_s;
}

// Gauss-Newton with exact line search on
//   Phi(v) = ||E v - f||^2 + sum_i max(0, a_i v - b_i)^2.
struct Phase1Result {
  SolveStatus status;
  Eigen::VectorXd point;
  int iterations = 0;
};

Phase1Result phase1(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const Eigen::MatrixXd& E, const Eigen::VectorXd& f,
                    const SolverConfig& cfg, const Eigen::VectorXd& start) {
  const int d = static_cast<int>(A.cols() > 0 ? A.cols() : E.cols());
  Eigen::VectorXd v = start.size() == d ? start : Eigen::VectorXd::Zero(d);
  const double feas_target = 0.25 * cfg.feasibility_tol * cfg.feasibility_tol;
  const int cap = std::min(cfg.max_iterations, 500);

  const auto violations = [&](const Eigen::VectorXd& p) {
    return A.rows() > 0 ? Eigen::VectorXd(A * p - b) : Eigen::VectorXd(0);
  };
  const auto phi_of = [&](const Eigen::VectorXd& p) {
    double total = E.rows() > 0 ? (E * p - f).squaredNorm() : 0.0;
    const Eigen::VectorXd w = violations(p);
    for (int i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) total += w[i] * w[i];
    return total;
  };

  double phi = phi_of(v);
  int iter = 0;
  for (; iter < cap; ++iter) {
    if (phi <= feas_target) return {SolveStatus::kOptimal, v, iter};
    const Eigen::VectorXd w = violations(v);
    std::vector<int> active;
    for (int i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) active.push_back(i);
    const int rows = static_cast<int>(E.rows() + active.size());
    Eigen::MatrixXd M(rows, d);
    Eigen::VectorXd rhs(rows);
    if (E.rows() > 0) {
      M.topRows(E.rows()) = E;
      rhs.head(E.rows()) = f;
    }
    for (std::size_t s = 0; s < active.size(); ++s) {
      M.row(E.rows() + s) = A.row(active[s]);
      rhs[E.rows() + s] = b[active[s]];
    }
    const Eigen::VectorXd target = min_norm_lsq(M, rhs);
    const Eigen::VectorXd p = target - v;
    if (p.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + v.lpNorm<Eigen::Infinity>())) {
      break;  // stationary
    }
    Eigen::VectorXd r_eq = E.rows() > 0 ? Eigen::VectorXd(E * v - f) : Eigen::VectorXd(0);
    Eigen::VectorXd dr_eq = E.rows() > 0 ? Eigen::VectorXd(E * p) : Eigen::VectorXd(0);
    Eigen::VectorXd dw = A.rows() > 0 ? Eigen::VectorXd(A * p) : Eigen::VectorXd(0);
    const double step = piecewise_line_search(r_eq, dr_eq, w, dw);
    if (step <= 0.0) break;
    v += step * p;
    const double next_phi = phi_of(v);
    if (phi - next_phi <= 1e-18 * (1.0 + phi)) {
      phi = next_phi;
      break;
    }
    phi = next_phi;
  }
  if (phi <= feas_target) return {SolveStatus::kOptimal, v, iter};
  if (iter >= cap) return {SolveStatus::kNonConverged, v, iter};
  return {SolveStatus::kInfeasible, v, iter};
}

// Primal active-set method on the Gram form: minimize
//   v' G v - 2 g' v   s.t.  A v <= b,
// from a feasible start. G and g carry any ball multipliers already.
struct ActiveSetOutcome {
  SolveStatus status;
  Eigen::VectorXd v;
  int iterations = 0;
};

class ActiveSetSolver {
 public:
  ActiveSetSolver(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                  const SolverConfig& cfg)
      : A_(A), b_(b), cfg_(cfg), d_(static_cast<int>(A.cols())),
        q_(static_cast<int>(A.rows())) {}

  ActiveSetOutcome run(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                       Eigen::VectorXd v) const {
    std::vector<char> in_working(q_, 0);
    std::vector<int> working;
    const int cap = std::min(cfg_.max_iterations, 60 * (d_ + q_) + 200);
    const int bland_after = 3 * (d_ + q_) + 60;

    const auto solve_eqp = [&](Eigen::VectorXd& out) {
      const int rows = static_cast<int>(working.size());
      if (rows == 0) {
        out = min_norm_lsq_psd(G, g);
        return;
      }
      Eigen::MatrixXd C(rows, d_);
      Eigen::VectorXd rhs(rows);
      for (int s = 0; s < rows; ++s) {
        C.row(s) = A_.row(working[s]);
        rhs[s] = b_[working[s]];
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
      const Eigen::VectorXd v_part = cod.solve(rhs);
      const int nullity = d_ - static_cast<int>(cod.rank());
      if (nullity == 0) {
        out = v_part;
        return;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
      lu.setThreshold(1e-12);
      const Eigen::MatrixXd K = lu.kernel();
      if (K.cols() == 1 && K.col(0).isZero(0.0)) {
        out = v_part;
        return;
      }
      // minimize over u: (v_part + K u)' G (v_part + K u) - 2 g' (v_part + K u)
      const Eigen::VectorXd u =
          min_norm_lsq_psd(K.transpose() * G * K, K.transpose() * (g - G * v_part));
      out = v_part + K * u;
    };

    int iter = 0;
    for (; iter < cap; ++iter) {
      Eigen::VectorXd target;
      solve_eqp(target);
      const Eigen::VectorXd step = target - v;
      const double vscale = 1.0 + v.lpNorm<Eigen::Infinity>();
      if (step.lpNorm<Eigen::Infinity>() <= 1e-13 * vscale) {
        if (working.empty()) return {SolveStatus::kOptimal, v, iter};
        const Eigen::VectorXd grad = 2.0 * (G * v - g);
        Eigen::MatrixXd Ct(d_, static_cast<int>(working.size()));
        for (std::size_t s = 0; s < working.size(); ++s) {
          Ct.col(static_cast<int>(s)) = A_.row(working[s]).transpose();
        }
        const Eigen::VectorXd lambda = min_norm_lsq(Ct, -grad);
        const double mult_tol = 1e-10 * (1.0 + grad.lpNorm<Eigen::Infinity>());
        int drop_slot = -1;
        if (iter >= bland_after) {
          int best_idx = std::numeric_limits<int>::max();
          for (std::size_t s = 0; s < working.size(); ++s) {
            if (lambda[static_cast<int>(s)] < -mult_tol && working[s] < best_idx) {
              best_idx = working[s];
              drop_slot = static_cast<int>(s);
            }
          }
        } else {
          double most_negative = -mult_tol;
          for (std::size_t s = 0; s < working.size(); ++s) {
            if (lambda[static_cast<int>(s)] < most_negative) {
              most_negative = lambda[static_cast<int>(s)];
              drop_slot = static_cast<int>(s);
            }
          }
        }
        if (drop_slot < 0) return {SolveStatus::kOptimal, v, iter};
        in_working[working[drop_slot]] = 0;
        working.erase(working.begin() + drop_slot);
        continue;
      }

      double alpha = 1.0;
      int blocker = -1;
      const double step_scale = 1.0 + step.lpNorm<Eigen::Infinity>();
      for (int i = 0; i < q_; ++i) {
        if (in_working[i]) continue;
        const double s = A_.row(i).dot(step);
        if (s <= 1e-14 * step_scale) continue;
        const double slack = b_[i] - A_.row(i).dot(v);
        const double a_i = std::max(0.0, slack) / s;
        if (a_i < alpha) {
          alpha = a_i;
          blocker = i;
        }
      }
      v += alpha * step;
      if (blocker >= 0) {
        in_working[blocker] = 1;
        working.push_back(blocker);
      }
    }
    return {SolveStatus::kNonConverged, v, iter};
  }

 private:
  // Minimizer of v' G v - 2 g' v for PSD G (min-norm among minimizers).
  static Eigen::VectorXd min_norm_lsq_psd(const Eigen::MatrixXd& G,
                                          const Eigen::VectorXd& g) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    return cod.solve(g);
  }

  const Eigen::MatrixXd& A_;
  const Eigen::VectorXd& b_;
  const SolverConfig& cfg_;
  int d_;
  int q_;
};

double group_norm(const Eigen::VectorXd& v, const std::vector<int>& group) {
  double total = 0.0;
  for (int idx : group) total += v[idx] * v[idx];
  return std::sqrt(total);
}

void validate_problem(const ConstrainedLsq& problem) {
  if (problem.num_vars < 1) throw ValidationError("num_vars must be >= 1");
  for (const auto& r : problem.residuals) {
    if (r.coeff.size() != problem.num_vars)
      throw ValidationError("residual coefficient length mismatch");
  }
  for (const auto& c : problem.inequalities) {
    if (c.coeff.size() != problem.num_vars)
      throw ValidationError("inequality coefficient length mismatch");
  }
  std::vector<char> seen(problem.num_vars, 0);
  for (const auto& g : problem.ball_groups) {
    for (int idx : g) {
      if (idx < 0 || idx >= problem.num_vars)
        throw ValidationError("ball group index out of range");
      if (seen[idx]) throw ValidationError("ball groups must be disjoint");
      seen[idx] = 1;
    }
  }
  for (const auto& box : problem.boxes) {
    if (box.index < 0 || box.index >= problem.num_vars)
      throw ValidationError("box index out of range");
    if (box.lo > box.hi) throw ValidationError("empty box");
  }
}

}  // namespace

double objective_value(const ConstrainedLsq& problem, const Eigen::VectorXd& v) {
  double total = 0.0;
  for (const auto& term : problem.residuals) {
    const double r = term.coeff.dot(v) + term.constant - term.target;
    total += r * r;
  }
  return total;
}

double max_violation(const ConstrainedLsq& problem, const Eigen::VectorXd& v) {
  double worst = 0.0;
  for (const auto& ineq : problem.inequalities) {
    worst = std::max(worst, ineq.coeff.dot(v) + ineq.constant);
  }
  for (const auto& box : problem.boxes) {
    worst = std::max(worst, v[box.index] - box.hi);
    worst = std::max(worst, box.lo - v[box.index]);
  }
  for (const auto& group : problem.ball_groups) {
    worst = std::max(worst, group_norm(v, group) - 1.0);
  }
  return worst;
}

SolveResult solve_dense(const DenseLsq& problem, const SolverConfig& cfg,
                        double skip_ball_above) {
  const int d = static_cast<int>(problem.A.cols() > 0 ? problem.A.cols()
                                                      : problem.R.cols());
  SolveResult result;

  // Feasible start: the origin when possible, phase 1 otherwise.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
  int iters = 0;
  double worst0 = 0.0;
  for (int i = 0; i < problem.A.rows(); ++i) worst0 = std::max(worst0, -problem.b[i]);
  if (worst0 > 0.0) {
    const Phase1Result ph = phase1(problem.A, problem.b, Eigen::MatrixXd(0, d),
                                   Eigen::VectorXd(0), cfg, start);
    iters += ph.iterations;
    if (ph.status != SolveStatus::kOptimal) {
      result.status = ph.status;
      result.solution = ph.point;
      result.value = (problem.R * ph.point - problem.t).squaredNorm();
      result.iterations = iters;
      return result;
    }
    start = ph.point;
  }

  const Eigen::MatrixXd G = problem.R.transpose() * problem.R;
  const Eigen::VectorXd g = problem.R.transpose() * problem.t;
  ActiveSetSolver engine(problem.A, problem.b, cfg);

  const auto value_at = [&](const Eigen::VectorXd& v) {
    return problem.R.rows() > 0 ? (problem.R * v - problem.t).squaredNorm() : 0.0;
  };

  ActiveSetOutcome lin = engine.run(G, g, start);
  iters += lin.iterations;
  if (lin.status != SolveStatus::kOptimal) {
    result.status = lin.status;
    result.solution = lin.v;
    result.value = value_at(lin.v);
    result.iterations = iters;
    return result;
  }

  Eigen::VectorXd v = lin.v;
  bool any_violated = false;
  for (const auto& group : problem.ball_groups) {
    if (group_norm(v, group) > 1.0 + 1e-12) any_violated = true;
  }
  if (!any_violated) {
    result.status = SolveStatus::kOptimal;
    result.solution = v;
    result.value = value_at(v);
    result.iterations = iters;
    return result;
  }
  const double lin_value = value_at(v);
  if (lin_value > skip_ball_above) {
    result.status = SolveStatus::kOptimal;
    result.solution = v;
    result.value = lin_value;
    result.iterations = iters;
    result.value_is_lower_bound = true;
    return result;
  }

  // Ball stage: per-group multipliers enter as diagonal Tikhonov shifts;
  // ||v_G(lam)|| is nonincreasing in lam, so bisection finds the
  // complementarity point.
  const std::size_t groups = problem.ball_groups.size();
  std::vector<double> lams(groups, 0.0);
  const auto resolve = [&]() {
    Eigen::MatrixXd G_lam = G;
    for (std::size_t gi = 0; gi < groups; ++gi) {
      if (lams[gi] <= 0.0) continue;
      for (int idx : problem.ball_groups[gi]) G_lam(idx, idx) += lams[gi];
    }
    ActiveSetOutcome out = engine.run(G_lam, g, start);
    iters += out.iterations;
    return out;
  };

  bool converged = false;
  SolveStatus fail_status = SolveStatus::kNonConverged;
  for (int pass = 0; pass < 8 && !converged; ++pass) {
    converged = true;
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const auto& group = problem.ball_groups[gi];
      const double norm_now = group_norm(v, group);
      if (lams[gi] == 0.0 && norm_now <= 1.0 + 1e-12) continue;
      if (lams[gi] > 0.0 && std::abs(norm_now - 1.0) <= 1e-11) continue;
      converged = false;
      lams[gi] = 0.0;
      ActiveSetOutcome at_zero = resolve();
      if (at_zero.status != SolveStatus::kOptimal) {
        fail_status = at_zero.status;
        converged = false;
        pass = 8;
        break;
      }
      v = at_zero.v;
      if (group_norm(v, group) <= 1.0 + 1e-12) continue;

      double lo = 0.0, hi = 1.0;
      bool bracketed = false;
      for (int doubling = 0; doubling < 60; ++doubling) {
        lams[gi] = hi;
        ActiveSetOutcome out = resolve();
        if (out.status != SolveStatus::kOptimal) break;
        v = out.v;
        if (group_norm(v, group) <= 1.0) {
          bracketed = true;
          break;
        }
        lo = hi;
        hi *= 8.0;
      }
      if (!bracketed) {
        result.status = SolveStatus::kInfeasible;
        result.solution = v;
        result.value = value_at(v);
        result.iterations = iters;
        return result;
      }
      for (int step = 0; step < 90; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        lams[gi] = mid;
        ActiveSetOutcome out = resolve();
        if (out.status != SolveStatus::kOptimal) continue;
        if (group_norm(out.v, group) <= 1.0) {
          hi = mid;
          v = out.v;
        } else {
          lo = mid;
        }
      }
      lams[gi] = hi;
      ActiveSetOutcome fin = resolve();
      if (fin.status == SolveStatus::kOptimal) v = fin.v;
    }
  }
  if (!converged) {
    result.status = fail_status;
    result.solution = v;
    result.value = value_at(v);
    result.iterations = iters;
    return result;
  }

  result.status = SolveStatus::kOptimal;
  result.solution = v;
  result.value = value_at(v);
  result.iterations = iters;
  return result;
}

namespace {

DenseLsq assemble(const ConstrainedLsq& problem) {
  const int d = problem.num_vars;
  DenseLsq p;
  p.R.resize(static_cast<int>(problem.residuals.size()), d);
  p.t.resize(p.R.rows());
  for (std::size_t r = 0; r < problem.residuals.size(); ++r) {
    const auto& term = problem.residuals[r];
    p.R.row(static_cast<int>(r)) = term.coeff.transpose();
    p.t[static_cast<int>(r)] = term.target - term.constant;
  }
  int box_rows = 0;
  for (const auto& box : problem.boxes) {
    if (box.lo > -std::numeric_limits<double>::infinity()) ++box_rows;
    if (box.hi < std::numeric_limits<double>::infinity()) ++box_rows;
  }
  p.A.resize(static_cast<int>(problem.inequalities.size()) + box_rows, d);
  p.b.resize(p.A.rows());
  int row = 0;
  for (const auto& ineq : problem.inequalities) {
    p.A.row(row) = ineq.coeff.transpose();
    p.b[row] = -ineq.constant;
    ++row;
  }
  for (const auto& box : problem.boxes) {
    if (box.hi < std::numeric_limits<double>::infinity()) {
      p.A.row(row).setZero();
      p.A(row, box.index) = 1.0;
      p.b[row] = box.hi;
      ++row;
    }
    if (box.lo > -std::numeric_limits<double>::infinity()) {
      p.A.row(row).setZero();
      p.A(row, box.index) = -1.0;
      p.b[row] = -box.lo;
      ++row;
    }
  }
  p.ball_groups = problem.ball_groups;
  return p;
}

}  // namespace

SolveResult solve(const ConstrainedLsq& problem, const SolverConfig& cfg) {
  validate_problem(problem);
  return solve_dense(assemble(problem), cfg);
}

SolveResult check_feasible(int num_vars,
                           const std::vector<LinearInequality>& inequalities,
                           const std::vector<LinearEquality>& equalities,
                           const SolverConfig& cfg) {
  if (num_vars < 1) throw ValidationError("num_vars must be >= 1");
  Eigen::MatrixXd A(static_cast<int>(inequalities.size()), num_vars);
  Eigen::VectorXd b(A.rows());
  for (std::size_t i = 0; i < inequalities.size(); ++i) {
    if (inequalities[i].coeff.size() != num_vars)
      throw ValidationError("inequality coefficient length mismatch");
    A.row(static_cast<int>(i)) = inequalities[i].coeff.transpose();
    b[static_cast<int>(i)] = -inequalities[i].constant;
  }
  Eigen::MatrixXd E(static_cast<int>(equalities.size()), num_vars);
  Eigen::VectorXd f(E.rows());
  for (std::size_t i = 0; i < equalities.size(); ++i) {
    if (equalities[i].coeff.size() != num_vars)
      throw ValidationError("equality coefficient length mismatch");
    E.row(static_cast<int>(i)) = equalities[i].coeff.transpose();
    f[static_cast<int>(i)] = equalities[i].rhs;
  }
  const Phase1Result ph = phase1(A, b, E, f, cfg, Eigen::VectorXd::Zero(num_vars));
  SolveResult result;
  result.status = ph.status;
  result.solution = ph.point;
  result.value = 0.0;
  result.iterations = ph.iterations;
  return result;
}

}  // namespace relu_exact
