#include "relu_exact/cells.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace relu_exact {

namespace {

// Feasibility of the homogeneous strict system {s_i <v, z_i> > 0} via the
// margin form {s_i <v, z_i> >= 1}. For an infeasible system every v leaves
// some margin <= 0, so the squared-hinge objective is >= 1; for a feasible
// one it reaches 0. The gap makes the classification robust.
class StrictSignLp {
 public:
  explicit StrictSignLp(int dim) : dim_(dim) {}

  // rows: signed rows s_i * z_i. witness in/out: warm start and certificate.
  bool feasible(const Eigen::MatrixXd& rows, int used, Eigen::VectorXd& witness) {
    if (used == 0) return true;
    Eigen::VectorXd v = witness.size() == dim_ ? witness : Eigen::VectorXd::Zero(dim_);
    const auto block = rows.topRows(used);
    const auto phi_of = [&](const Eigen::VectorXd& p) {
      double total = 0.0;
      const Eigen::VectorXd margins = block * p;
      for (int i = 0; i < used; ++i) {
        const double h = 1.0 - margins[i];
        if (h > 0.0) total += h * h;
      }
      return total;
    };
    double phi = phi_of(v);
    for (int iter = 0; iter < 200 && phi > 1e-18; ++iter) {
      Eigen::VectorXd margins = block * v;
      std::vector<int> active;
      for (int i = 0; i < used; ++i)
        if (margins[i] < 1.0) active.push_back(i);
      if (active.empty()) break;
      Eigen::MatrixXd M(static_cast<int>(active.size()), dim_);
      for (std::size_t s = 0; s < active.size(); ++s) M.row(s) = block.row(active[s]);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
      const Eigen::VectorXd target = cod.solve(Eigen::VectorXd::Ones(M.rows()));
      const Eigen::VectorXd dir = target - v;
      if (dir.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + v.lpNorm<Eigen::Infinity>())) break;
      // exact line search over the piecewise quadratic
      const Eigen::VectorXd dm = block * dir;
      std::vector<double> knots{0.0, 1.0};
      for (int i = 0; i < used; ++i) {
        if (dm[i] != 0.0) {
          const double s = (1.0 - margins[i]) / dm[i];
          if (s > 0.0 && s < 1.0) knots.push_back(s);
        }
      }
      std::sort(knots.begin(), knots.end());
      double best_s = 0.0, best_phi = phi;
      for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double lo = knots[seg], hi = knots[seg + 1];
        if (hi <= lo) continue;
        const double mid = 0.5 * (lo + hi);
        double q2 = 0.0, q1 = 0.0;
        for (int i = 0; i < used; ++i) {
          if (margins[i] + mid * dm[i] < 1.0) {
            q2 += dm[i] * dm[i];
            q1 += 2.0 * (margins[i] - 1.0) * dm[i];
          }
        }
        double cand = hi;
        if (q2 > 0.0) cand = std::clamp(-q1 / (2.0 * q2), lo, hi);
        for (double s : {cand, hi}) {
          const double value = phi_of(v + s * dir);
          if (value < best_phi) {
            best_phi = value;
            best_s = s;
          }
        }
      }
      if (best_s <= 0.0 || phi - best_phi <= 1e-18 * (1.0 + phi)) break;
      v += best_s * dir;
      phi = best_phi;
    }
    // An infeasible system keeps the objective >= 1 everywhere, so any
    // phi < 1 certifies feasibility. Ambiguity goes to feasible: a spurious
    // cell is harmless, a dropped one is not.
    if (phi < 0.5) {
      double worst = 1.0;
      const Eigen::VectorXd margins = block * v;
      for (int i = 0; i < used; ++i) worst = std::min(worst, margins[i]);
      if (worst > 0.0) witness = v / worst;
      return true;
    }
    return false;
  }

 private:
  int dim_;
};

struct DfsContext {
  const Eigen::MatrixXd& Z;
  const std::vector<std::uint8_t>& forced;
  std::size_t max_cells;
  std::size_t max_nodes;
  std::size_t nodes = 0;
  bool budget_exceeded = false;
  int rows;
  int words;
  std::vector<std::vector<std::uint64_t>> out;
  // dup_of[i]: first earlier row equal to +/- row i (exact), else -1.
  std::vector<int> dup_of;
  std::vector<int> dup_sign;
  std::vector<char> is_zero;
  Eigen::MatrixXd signed_rows;  // grows with depth
  std::vector<std::uint64_t> current;
  StrictSignLp lp;

  DfsContext(const Eigen::MatrixXd& z, const std::vector<std::uint8_t>& f,
             std::size_t mc, std::size_t mn)
      : Z(z), forced(f), max_cells(mc), max_nodes(mn),
        rows(static_cast<int>(z.rows())), words(mask_words(rows)),
        signed_rows(z.rows(), z.cols()), current(words, 0),
        lp(static_cast<int>(z.cols())) {}
};

void dfs(DfsContext& ctx, int depth, int used, Eigen::VectorXd witness) {
  if (ctx.budget_exceeded) return;
  if (++ctx.nodes > ctx.max_nodes) {
    ctx.budget_exceeded = true;
    return;
  }
  if (depth == ctx.rows) {
    if (ctx.out.size() >= ctx.max_cells) {
      ctx.budget_exceeded = true;
      return;
    }
    ctx.out.push_back(ctx.current);
    return;
  }

  const bool forced_off = !ctx.forced.empty() && ctx.forced[depth];
  if (ctx.is_zero[depth]) {
    dfs(ctx, depth + 1, used, std::move(witness));  // bit stays 0
    return;
  }
  if (ctx.dup_of[depth] >= 0) {
    const bool rep_bit = mask_test(ctx.current, ctx.dup_of[depth]);
    const bool bit = ctx.dup_sign[depth] > 0 ? rep_bit : !rep_bit;
    if (bit && forced_off) return;  // duplicate forced the wrong way
    if (bit) mask_set(ctx.current, depth);
    dfs(ctx, depth + 1, used, std::move(witness));
    if (bit) ctx.current[depth >> 6] &= ~(std::uint64_t{1} << (63 - (depth & 63)));
    return;
  }

  const double margin = witness.size() > 0 ? ctx.Z.row(depth).dot(witness) : 0.0;
  // Children in lexicographic order: inactive (0) first.
  for (int bit = 0; bit <= 1; ++bit) {
    if (bit == 1 && forced_off) continue;
    const double sign = bit == 1 ? 1.0 : -1.0;
    Eigen::VectorXd child_witness = witness;
    bool ok;
    if (sign * margin > 0.0) {
      // Witness already on this side; rescale to restore the unit margin.
      ok = true;
      if (sign * margin < 1.0) child_witness *= 1.0 / (sign * margin);
    } else {
      ctx.signed_rows.row(used) = sign * ctx.Z.row(depth);
      ok = ctx.lp.feasible(ctx.signed_rows, used + 1, child_witness);
    }
    if (!ok) continue;
    ctx.signed_rows.row(used) = sign * ctx.Z.row(depth);
    if (bit) mask_set(ctx.current, depth);
    dfs(ctx, depth + 1, used + 1, std::move(child_witness));
    if (bit) ctx.current[depth >> 6] &= ~(std::uint64_t{1} << (63 - (depth & 63)));
    if (ctx.budget_exceeded) return;
  }
}

CellEnumResult enumerate_by_dfs(const Eigen::MatrixXd& Z,
                                const std::vector<std::uint8_t>& forced,
                                std::size_t max_cells, std::size_t max_nodes) {
  DfsContext ctx(Z, forced, max_cells, max_nodes);
  ctx.dup_of.assign(ctx.rows, -1);
  ctx.dup_sign.assign(ctx.rows, 0);
  ctx.is_zero.assign(ctx.rows, 0);
  for (int i = 0; i < ctx.rows; ++i) {
    if (Z.row(i).isZero(0.0)) {
      ctx.is_zero[i] = 1;
      continue;
    }
    for (int r = 0; r < i; ++r) {
      if (ctx.is_zero[r] || ctx.dup_of[r] >= 0) continue;
      if (Z.row(i) == Z.row(r)) {
        ctx.dup_of[i] = r;
        ctx.dup_sign[i] = 1;
        break;
      }
      if (Z.row(i) == -Z.row(r)) {
        ctx.dup_of[i] = r;
        ctx.dup_sign[i] = -1;
        break;
      }
    }
  }
  dfs(ctx, 0, 0, Eigen::VectorXd());
  CellEnumResult result;
  result.budget_exceeded = ctx.budget_exceeded;
  result.rows = ctx.rows;
  result.cells = std::move(ctx.out);
  return result;
}

// d <= 2: the arrangement is a set of lines through the origin, so the
// full-dimensional cells are angular sectors.
CellEnumResult enumerate_by_sectors(const Eigen::MatrixXd& Z,
                                    const std::vector<std::uint8_t>& forced,
                                    std::size_t max_cells) {
  const int rows = static_cast<int>(Z.rows());
  const int d = static_cast<int>(Z.cols());
  const int words = mask_words(rows);
  std::vector<std::vector<std::uint64_t>> cells;

  const auto emit = [&](const Eigen::Vector2d& v) {
    std::vector<std::uint64_t> mask(words, 0);
    for (int i = 0; i < rows; ++i) {
      double dot = Z(i, 0) * v[0];
      if (d == 2) dot += Z(i, 1) * v[1];
      if (dot > 0.0) {
        if (!forced.empty() && forced[i]) return;
        mask_set(mask, i);
      }
    }
    cells.push_back(std::move(mask));
  };

  if (d == 1) {
    emit(Eigen::Vector2d(1.0, 0.0));
    emit(Eigen::Vector2d(-1.0, 0.0));
  } else {
    std::vector<double> angles;
    for (int i = 0; i < rows; ++i) {
      const Eigen::Vector2d z(Z(i, 0), Z(i, 1));
      if (z.isZero(0.0)) continue;
      const double theta = std::atan2(z[0], -z[1]);  // direction of the line
      angles.push_back(theta);
      angles.push_back(theta > 0.0 ? theta - std::numbers::pi : theta + std::numbers::pi);
    }
    if (angles.empty()) {
      emit(Eigen::Vector2d(1.0, 0.0));
    } else {
      std::sort(angles.begin(), angles.end());
      angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
      const std::size_t count = angles.size();
      for (std::size_t s = 0; s < count; ++s) {
        const double lo = angles[s];
        const double hi = s + 1 < count ? angles[s + 1]
                                        : angles[0] + 2.0 * std::numbers::pi;
        const double mid = 0.5 * (lo + hi);
        emit(Eigen::Vector2d(std::cos(mid), std::sin(mid)));
      }
    }
  }

  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  CellEnumResult result;
  result.rows = rows;
  if (cells.size() > max_cells) {
    result.budget_exceeded = true;
    cells.resize(max_cells);
  }
  result.cells = std::move(cells);
  return result;
}

}  // namespace

CellEnumResult enumerate_activation_cells(const Eigen::MatrixXd& Z,
                                          const std::vector<std::uint8_t>& forced_inactive,
                                          std::size_t max_cells,
                                          std::size_t max_nodes) {
  if (!forced_inactive.empty() &&
      static_cast<int>(forced_inactive.size()) != Z.rows()) {
    throw std::invalid_argument("forced_inactive size mismatch");
  }
  if (Z.cols() <= 2) {
    return enumerate_by_sectors(Z, forced_inactive, max_cells);
  }
  return enumerate_by_dfs(Z, forced_inactive, max_cells, max_nodes);
}

}  // namespace relu_exact
