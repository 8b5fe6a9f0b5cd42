#include "relu_exact/exact_trainer.hpp"

#include "relu_exact/cells.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace relu_exact {

namespace {

std::vector<double> effective_alphas(const TrainOptions& opts) {
  if (opts.alphas.empty()) return std::vector<double>(opts.k, 1.0);
  return opts.alphas;
}

void validate_options(const SampleSet& s, const TrainOptions& opts,
                      const std::vector<double>& alphas) {
  s.validate();
  if (s.m() < 1) throw ValidationError("training needs at least one sample");
  if (opts.k < 1) throw ValidationError("unit count must be >= 1");
  if (static_cast<int>(alphas.size()) != opts.k) {
    throw ValidationError("alphas length does not match k");
  }
  for (double a : alphas) {
    if (a != 1.0 && a != -1.0) throw ValidationError("alphas must be +1 or -1");
  }
  if (opts.reliable) {
    if (!opts.train_bias) {
      throw ValidationError("reliable training requires trainable biases");
    }
    for (double a : alphas) {
      if (a != 1.0) {
        throw ValidationError("reliable training requires all-positive alphas");
      }
    }
  }
}

int resolve_jobs(const TrainOptions& opts) {
  if (opts.parallelism > 0) return opts.parallelism;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  std::uint64_t index = std::numeric_limits<std::uint64_t>::max();
  Eigen::VectorXd solution;
  std::vector<std::uint32_t> ranks;  // per-unit cell ranks (cells mode)
  std::uint64_t raw_bits = 0;        // full mode pattern id

  bool beats(double value_other, std::uint64_t index_other) const {
    return value < value_other || (value == value_other && index < index_other);
  }
};

struct SharedBest {
  std::mutex mu;
  Candidate best;
  std::int64_t infeasible = 0;
  std::int64_t failures = 0;
};

// Per-unit variable block: w coordinates then the bias.
int block_size(const SampleSet& s) { return s.n() + 1; }

ActivationPattern pattern_from_ranks(const std::vector<std::uint32_t>& ranks,
                                     const std::vector<std::vector<std::uint64_t>>& cells,
                                     int m) {
  ActivationPattern p = make_activation_pattern(static_cast<int>(ranks.size()), m);
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    for (int i = 0; i < m; ++i) {
      p.set_bit(static_cast<int>(j), i, mask_test(cells[ranks[j]], i));
    }
  }
  return p;
}

ActivationPattern pattern_from_bits(std::uint64_t bits, int k, int m) {
  ActivationPattern p = make_activation_pattern(k, m);
  const int total = k * m;
  for (int pos = 0; pos < total; ++pos) {
    const bool bit = (bits >> (total - 1 - pos)) & 1;
    p.set_bit(pos / m, pos % m, bit);
  }
  return p;
}

struct JointSolveInput {
  const SampleSet& s;
  const TrainOptions& opts;
  const std::vector<double>& alphas;
};

// Assembled form of pattern_constraints; built directly so the hot loop
// avoids per-term allocations.
DenseLsq build_dense_pattern(const ActivationPattern& pattern, const SampleSet& s,
                             const TrainOptions& opts,
                             const std::vector<double>& alphas) {
  const int n = s.n();
  const int m = s.m();
  const int bs = n + 1;
  const int d = opts.k * bs;

  int residual_rows = 0;
  int extra_eq_rows = 0;
  std::vector<char> zero_forced(m, 0);
  for (int i = 0; i < m; ++i) {
    zero_forced[i] = opts.reliable && s.labels[i] == 0.0;
    if (!zero_forced[i]) ++residual_rows;
  }
  if (opts.reliable) {
    for (int j = 0; j < opts.k; ++j) {
      for (int i = 0; i < m; ++i) {
        if (zero_forced[i] && pattern.bit(j, i)) ++extra_eq_rows;
      }
    }
  }
  int box_rows = 0;
  if (opts.norm_constrained) box_rows += 2 * opts.k;
  if (!opts.train_bias) box_rows += 2 * opts.k;

  DenseLsq p;
  p.R = Eigen::MatrixXd::Zero(residual_rows, d);
  p.t.resize(residual_rows);
  int row = 0;
  for (int i = 0; i < m; ++i) {
    if (zero_forced[i]) continue;
    for (int j = 0; j < opts.k; ++j) {
      if (!pattern.bit(j, i)) continue;
      p.R.row(row).segment(j * bs, n) = alphas[j] * s.points.row(i);
      p.R(row, j * bs + n) = alphas[j];
    }
    p.t[row] = s.labels[i];
    ++row;
  }

  p.A = Eigen::MatrixXd::Zero(opts.k * m + extra_eq_rows + box_rows, d);
  p.b = Eigen::VectorXd::Zero(p.A.rows());
  row = 0;
  for (int j = 0; j < opts.k; ++j) {
    for (int i = 0; i < m; ++i) {
      const bool active = !zero_forced[i] && pattern.bit(j, i);
      const double sign = active ? -1.0 : 1.0;
      p.A.row(row).segment(j * bs, n) = sign * s.points.row(i);
      p.A(row, j * bs + n) = sign;
      ++row;
      if (zero_forced[i] && pattern.bit(j, i)) {
        p.A.row(row).segment(j * bs, n) = -s.points.row(i);
        p.A(row, j * bs + n) = -1.0;
        ++row;
      }
    }
  }
  for (int j = 0; j < opts.k; ++j) {
    if (opts.norm_constrained) {
      p.A(row, j * bs + n) = 1.0;
      p.b[row] = 1.0;
      ++row;
      p.A(row, j * bs + n) = -1.0;
      p.b[row] = 1.0;
      ++row;
    }
    if (!opts.train_bias) {
      p.A(row, j * bs + n) = 1.0;
      ++row;
      p.A(row, j * bs + n) = -1.0;
      ++row;
    }
  }
  if (opts.norm_constrained) {
    for (int j = 0; j < opts.k; ++j) {
      std::vector<int> group(n);
      for (int c = 0; c < n; ++c) group[c] = j * bs + c;
      p.ball_groups.push_back(std::move(group));
    }
  }
  return p;
}

struct JointSolveOutput {
  SolveStatus status;
  double value = 0.0;
  bool value_is_lower_bound = false;
  Eigen::VectorXd solution;
};

JointSolveOutput solve_pattern(const JointSolveInput& in, const ActivationPattern& pattern,
                               double prune_value) {
  const DenseLsq dense = build_dense_pattern(pattern, in.s, in.opts, in.alphas);
  const SolveResult r = solve_dense(dense, in.opts.solver, prune_value);
  JointSolveOutput out;
  out.status = r.status;
  out.value = r.value;
  out.value_is_lower_bound = r.value_is_lower_bound;
  out.solution = r.solution;
  return out;
}

struct EnumerationPlan {
  bool use_cells = false;
  // With identical coefficients the units are interchangeable, so only
  // nondecreasing rank tuples need solving; the sorted tuple is exactly the
  // lexicographically first permutation, which keeps the tie-break intact.
  bool symmetric_units = false;
  std::vector<std::vector<std::uint64_t>> cells;
  std::uint64_t total = 0;  // joint patterns
};

EnumerationPlan plan_enumeration(const SampleSet& s, const TrainOptions& opts) {
  const int m = s.m();
  const int k = opts.k;
  const std::int64_t km_plus_k = static_cast<std::int64_t>(k) * m + k;

  EnumerationMode mode = opts.enumeration;
  if (mode == EnumerationMode::kAuto) {
    mode = km_plus_k <= 14 ? EnumerationMode::kFullBitMatrix
                           : EnumerationMode::kCells;
  }

  EnumerationPlan plan;
  if (mode == EnumerationMode::kFullBitMatrix) {
    if (static_cast<std::int64_t>(k) * m > 62) {
      throw BudgetExceededError("full bit-matrix enumeration too large");
    }
    const std::uint64_t total = std::uint64_t{1} << (k * m);
    if (km_plus_k > opts.guard_km_plus_k && total > opts.max_joint_patterns) {
      throw BudgetExceededError("enumeration budget exceeded");
    }
    plan.total = total;
    return plan;
  }

  // Cells mode. Budget: within the km+k guard anything goes (the raw count
  // is already acceptable); beyond it the cell product must fit the cap.
  const std::size_t hard_cell_cap = std::size_t{1} << 22;
  std::size_t max_cells = hard_cell_cap;
  if (km_plus_k > opts.guard_km_plus_k) {
    double per_unit = std::pow(static_cast<double>(opts.max_joint_patterns),
                               1.0 / static_cast<double>(k));
    max_cells = std::min<std::size_t>(
        hard_cell_cap, static_cast<std::size_t>(std::max(1.0, per_unit)));
  }

  const bool with_bias = opts.train_bias;
  const int d = with_bias ? s.n() + 1 : s.n();
  Eigen::MatrixXd Z(m, d);
  Z.leftCols(s.n()) = s.points;
  if (with_bias) Z.col(s.n()).setOnes();

  std::vector<std::uint8_t> forced;
  if (opts.reliable) {
    forced.assign(m, 0);
    for (int i = 0; i < m; ++i) forced[i] = s.labels[i] == 0.0 ? 1 : 0;
  }

  CellEnumResult cells = enumerate_activation_cells(Z, forced, max_cells);
  if (cells.budget_exceeded) {
    throw BudgetExceededError("activation cell enumeration exceeded budget");
  }
  double joint = 1.0;
  for (int j = 0; j < k; ++j) joint *= static_cast<double>(cells.cells.size());
  if (km_plus_k > opts.guard_km_plus_k &&
      joint > static_cast<double>(opts.max_joint_patterns)) {
    throw BudgetExceededError("joint pattern budget exceeded");
  }
  plan.use_cells = true;
  plan.cells = std::move(cells.cells);
  plan.total = static_cast<std::uint64_t>(joint);
  return plan;
}

// Iterates joint patterns [begin, end) in index order, pruning against the
// shared best, and merges local winners back.
void scan_range(const JointSolveInput& in, const EnumerationPlan& plan,
                std::uint64_t index_offset, std::uint64_t begin, std::uint64_t end,
                SharedBest& shared) {
  const int k = in.opts.k;
  const int m = in.s.m();
  const int words = plan.use_cells ? mask_words(m) : 0;
  const std::size_t num_cells = plan.cells.size();

  // Per-sample squared labels for the fixed-residual lower bound.
  std::vector<double> y2(m);
  std::vector<std::uint64_t> nonzero(words, 0);
  for (int i = 0; i < m; ++i) {
    y2[i] = in.s.labels[i] * in.s.labels[i];
    if (plan.use_cells && in.s.labels[i] != 0.0) mask_set(nonzero, i);
  }

  Candidate local;
  double prune_value;
  std::uint64_t prune_index;
  std::int64_t local_infeasible = 0, local_failures = 0;
  const auto refresh = [&] {
    std::lock_guard<std::mutex> lock(shared.mu);
    prune_value = shared.best.value;
    prune_index = shared.best.index;
  };
  refresh();

  std::vector<std::uint32_t> ranks(k, 0);
  if (plan.use_cells) {
    std::uint64_t rest = begin;
    for (int j = k - 1; j >= 0; --j) {
      ranks[j] = static_cast<std::uint32_t>(rest % num_cells);
      rest /= num_cells;
    }
  }

  std::vector<std::uint64_t> uncovered(words);
  for (std::uint64_t pos = begin; pos < end; ++pos) {
    if (((pos - begin) & 0xfff) == 0xfff) refresh();
    const std::uint64_t global_index = index_offset + pos;
    double best_v = prune_value;
    std::uint64_t best_i = prune_index;
    if (local.beats(best_v, best_i)) {
      best_v = local.value;
      best_i = local.index;
    }

    bool skip = false;
    if (plan.symmetric_units) {
      for (int j = 0; j + 1 < k; ++j) {
        if (ranks[j] > ranks[j + 1]) {
          skip = true;
          break;
        }
      }
    }
    if (!skip && plan.use_cells) {
      double lb0 = 0.0;
      for (int w = 0; w < words; ++w) {
        std::uint64_t covered = 0;
        for (int j = 0; j < k; ++j) covered |= plan.cells[ranks[j]][w];
        uncovered[w] = nonzero[w] & ~covered;
      }
      for (int w = 0; w < words; ++w) {
        std::uint64_t bits = uncovered[w];
        while (bits) {
          const int b = std::countl_zero(bits);
          lb0 += y2[w * 64 + b];
          bits &= ~(std::uint64_t{1} << (63 - b));
        }
      }
      if (lb0 > best_v || (lb0 == best_v && global_index > best_i)) skip = true;
    }

    if (!skip) {
      ActivationPattern pattern =
          plan.use_cells ? pattern_from_ranks(ranks, plan.cells, m)
                         : pattern_from_bits(pos, k, m);
      const JointSolveOutput out = solve_pattern(in, pattern, best_v);
      if (out.status == SolveStatus::kInfeasible) {
        ++local_infeasible;
      } else if (out.status == SolveStatus::kNonConverged) {
        ++local_failures;
      } else if (!out.value_is_lower_bound &&
                 (out.value < best_v ||
                  (out.value == best_v && global_index < best_i))) {
        local.value = out.value;
        local.index = global_index;
        local.solution = out.solution;
        if (plan.use_cells) {
          local.ranks = ranks;
        } else {
          local.raw_bits = pos;
        }
      }
    }

    if (plan.use_cells && pos + 1 < end) {
      for (int j = k - 1; j >= 0; --j) {
        if (++ranks[j] < num_cells) break;
        ranks[j] = 0;
      }
    }
  }

  std::lock_guard<std::mutex> lock(shared.mu);
  shared.infeasible += local_infeasible;
  shared.failures += local_failures;
  if (local.beats(shared.best.value, shared.best.index)) {
    shared.best = std::move(local);
  }
}

TrainResult finalize(const JointSolveInput& in, const EnumerationPlan& plan,
                     const SharedBest& shared, std::int64_t searched) {
  const TrainOptions& opts = in.opts;
  const SampleSet& s = in.s;
  const Candidate& best = shared.best;
  if (!std::isfinite(best.value)) {
    throw NonConvergedError("no activation pattern produced a solution");
  }
  const int bs = block_size(s);
  Eigen::MatrixXd weights(opts.k, s.n());
  Eigen::VectorXd biases(opts.k);
  Eigen::VectorXd alphas(opts.k);
  for (int j = 0; j < opts.k; ++j) {
    weights.row(j) = best.solution.segment(j * bs, s.n()).transpose();
    biases[j] = best.solution[j * bs + s.n()];
    alphas[j] = in.alphas[j];
  }

  ActivationPattern pattern =
      plan.use_cells ? pattern_from_ranks(best.ranks, plan.cells, s.m())
                     : pattern_from_bits(best.raw_bits, opts.k, s.m());

  if (opts.norm_constrained) {
    // Scale whole unit blocks: the sign constraints are homogeneous per
    // unit, so this keeps the pattern satisfied while making the ball and
    // box hold exactly.
    for (int j = 0; j < opts.k; ++j) {
      const double norm = weights.row(j).norm();
      if (norm > 1.0) {
        const double scale = (1.0 - 4.0 * std::numeric_limits<double>::epsilon()) / norm;
        weights.row(j) *= scale;
        biases[j] *= scale;
      }
      biases[j] = std::clamp(biases[j], -1.0, 1.0);
    }
  }
  if (opts.reliable) {
    // Push each bias down by any residual positive slack on its
    // constrained-inactive samples so those outputs are exactly zero.
    for (int j = 0; j < opts.k; ++j) {
      double worst = 0.0;
      for (int i = 0; i < s.m(); ++i) {
        if (pattern.bit(j, i)) continue;
        worst = std::max(worst, weights.row(j).dot(s.points.row(i)) + biases[j]);
      }
      if (worst > 0.0) biases[j] -= worst;
    }
  }

  TrainResult result;
  result.net = make_relu_net(std::move(alphas), std::move(weights), std::move(biases),
                             opts.norm_constrained);
  result.error = squared_loss(result.net, s);
  result.pattern = std::move(pattern);
  result.patterns_searched = searched;
  result.patterns_infeasible = shared.infeasible;
  result.solver_failures = shared.failures;
  result.cells_per_unit = plan.use_cells ? static_cast<std::int64_t>(plan.cells.size()) : 0;
  return result;
}

// Wave-synchronized parallel scan: chunks within a wave run concurrently,
// the early-stop decision happens only at wave boundaries, so the examined
// prefix of the pattern space is schedule-independent.
std::int64_t run_scan(const JointSolveInput& in, const EnumerationPlan& plan,
                      std::uint64_t index_offset, SharedBest& shared) {
  const std::uint64_t total = plan.total;
  const int jobs = resolve_jobs(in.opts);
  const std::uint64_t chunk = std::clamp<std::uint64_t>(
      total / (static_cast<std::uint64_t>(jobs) * 64 + 1), 4096, std::uint64_t{1} << 20);
  std::uint64_t processed = 0;
  while (processed < total) {
    const std::uint64_t wave_end =
        std::min<std::uint64_t>(total, processed + chunk * static_cast<std::uint64_t>(jobs));
    if (jobs == 1 || wave_end - processed <= chunk) {
      scan_range(in, plan, index_offset, processed, wave_end, shared);
    } else {
      std::vector<std::thread> workers;
      for (std::uint64_t start = processed; start < wave_end; start += chunk) {
        const std::uint64_t stop = std::min(wave_end, start + chunk);
        workers.emplace_back([&, start, stop] {
          scan_range(in, plan, index_offset, start, stop, shared);
        });
      }
      for (auto& w : workers) w.join();
    }
    processed = wave_end;
    if (in.opts.stop_below_error >= 0.0) {
      std::lock_guard<std::mutex> lock(shared.mu);
      if (shared.best.value <= in.opts.stop_below_error) break;
    }
  }
  return static_cast<std::int64_t>(processed);
}

}  // namespace

ConstrainedLsq pattern_constraints(const ActivationPattern& pattern,
                                   const SampleSet& s, const TrainOptions& opts) {
  const std::vector<double> alphas = effective_alphas(opts);
  if (pattern.units != opts.k || pattern.samples != s.m()) {
    throw ValidationError("pattern dimensions do not match problem");
  }
  const int n = s.n();
  const int bs = n + 1;
  const int d = opts.k * bs;

  ConstrainedLsq problem;
  problem.num_vars = d;

  for (int i = 0; i < s.m(); ++i) {
    const bool zero_forced = opts.reliable && s.labels[i] == 0.0;
    if (!zero_forced) {
      ResidualTerm term;
      term.coeff = Eigen::VectorXd::Zero(d);
      for (int j = 0; j < opts.k; ++j) {
        if (!pattern.bit(j, i)) continue;
        term.coeff.segment(j * bs, n) = alphas[j] * s.points.row(i).transpose();
        term.coeff[j * bs + n] = alphas[j];
      }
      term.constant = 0.0;
      term.target = s.labels[i];
      problem.residuals.push_back(std::move(term));
    }
  }

  for (int j = 0; j < opts.k; ++j) {
    for (int i = 0; i < s.m(); ++i) {
      const bool zero_forced = opts.reliable && s.labels[i] == 0.0;
      const bool active = !zero_forced && pattern.bit(j, i);
      LinearInequality ineq;
      ineq.coeff = Eigen::VectorXd::Zero(d);
      const double sign = active ? -1.0 : 1.0;
      ineq.coeff.segment(j * bs, n) = sign * s.points.row(i).transpose();
      ineq.coeff[j * bs + n] = sign;
      ineq.constant = 0.0;
      problem.inequalities.push_back(std::move(ineq));
      if (zero_forced && pattern.bit(j, i)) {
        // The guess said active; forcing the unit's affine value to zero
        // keeps the pattern's solution set inside the reliable constraint.
        LinearInequality eq_other;
        eq_other.coeff = Eigen::VectorXd::Zero(d);
        eq_other.coeff.segment(j * bs, n) = -s.points.row(i).transpose();
        eq_other.coeff[j * bs + n] = -1.0;
        eq_other.constant = 0.0;
        problem.inequalities.push_back(std::move(eq_other));
      }
    }
  }

  for (int j = 0; j < opts.k; ++j) {
    if (opts.norm_constrained) {
      std::vector<int> group(n);
      for (int c = 0; c < n; ++c) group[c] = j * bs + c;
      problem.ball_groups.push_back(std::move(group));
      problem.boxes.push_back({j * bs + n, -1.0, 1.0});
    }
    if (!opts.train_bias) {
      problem.boxes.push_back({j * bs + n, 0.0, 0.0});
    }
  }
  return problem;
}

TrainResult train_exact(const SampleSet& s, const TrainOptions& opts) {
  const std::vector<double> alphas = effective_alphas(opts);
  validate_options(s, opts, alphas);

  EnumerationPlan plan = plan_enumeration(s, opts);
  JointSolveInput in{s, opts, alphas};
  SharedBest shared;
  const std::int64_t searched = run_scan(in, plan, 0, shared);
  return finalize(in, plan, shared, searched);
}

TrainResult train_exact_unknown_coeffs(const SampleSet& s, const TrainOptions& opts) {
  if (opts.reliable) {
    throw ValidationError("reliable training with unknown coefficients is not defined");
  }
  if (opts.k < 1) throw ValidationError("unit count must be >= 1");
  if (opts.k > 20) throw BudgetExceededError("too many sign vectors");

  EnumerationPlan plan;
  bool have_plan = false;

  SharedBest shared;
  std::vector<double> best_alphas;
  TrainResult result;
  std::int64_t searched_total = 0;
  bool found = false;

  const std::uint64_t signs = std::uint64_t{1} << opts.k;
  for (std::uint64_t sv = 0; sv < signs; ++sv) {
    TrainOptions run = opts;
    run.alphas.assign(opts.k, 1.0);
    for (int j = 0; j < opts.k; ++j) {
      if ((sv >> (opts.k - 1 - j)) & 1) run.alphas[j] = -1.0;
    }
    validate_options(s, run, run.alphas);
    if (!have_plan) {
      plan = plan_enumeration(s, run);
      have_plan = true;
    }
    JointSolveInput in{s, run, run.alphas};
    const std::uint64_t offset = sv * plan.total;
    const double before = shared.best.value;
    const std::uint64_t before_idx = shared.best.index;
    searched_total += run_scan(in, plan, offset, shared);
    if (shared.best.beats(before, before_idx) || (!found && std::isfinite(shared.best.value))) {
      best_alphas = run.alphas;
      found = true;
      // Rebuild the result lazily at the end; remember the alphas that won.
    }
    if (opts.stop_below_error >= 0.0 && shared.best.value <= opts.stop_below_error) break;
  }
  if (!found) throw NonConvergedError("no sign vector produced a solution");

  TrainOptions win = opts;
  win.alphas = best_alphas;
  JointSolveInput in{s, win, win.alphas};
  result = finalize(in, plan, shared, searched_total);
  return result;
}

}  // namespace relu_exact
