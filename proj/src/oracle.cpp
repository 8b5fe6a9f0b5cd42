#include "relu_exact/oracle.hpp"

#include "relu_exact/random_util.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace relu_exact {

namespace {

struct GridSpec {
  int dims = 0;
  int points_per_dim = 0;
  double lo = 0.0;
  double step = 0.0;
  std::int64_t total = 0;
};

double loss_at_digits(const SampleSet& s, int k, const std::vector<double>& alphas,
                      const GridSpec& grid, const std::vector<int>& digits) {
  const int n = s.n();
  double total = 0.0;
  for (int i = 0; i < s.m(); ++i) {
    double out = 0.0;
    for (int j = 0; j < k; ++j) {
      double affine = 0.0;
      for (int c = 0; c < n; ++c) {
        affine += (grid.lo + grid.step * digits[j * (n + 1) + c]) * s.points(i, c);
      }
      affine += grid.lo + grid.step * digits[j * (n + 1) + n];
      if (affine > 0.0) out += alphas[j] * affine;
    }
    const double r = out - s.labels[i];
    total += r * r;
  }
  return total;
}

}  // namespace

GridSearchResult grid_search_train(const SampleSet& s, int k,
                                   const std::vector<double>& alphas, double lo,
                                   double hi, double step, int jobs) {
  s.validate();
  if (k < 1) throw ValidationError("grid search needs k >= 1");
  if (static_cast<int>(alphas.size()) != k) {
    throw ValidationError("alphas length does not match k");
  }
  if (step <= 0.0 || hi < lo) throw ValidationError("bad grid bounds");

  GridSpec grid;
  grid.dims = k * (s.n() + 1);
  grid.points_per_dim = static_cast<int>(std::llround((hi - lo) / step)) + 1;
  grid.lo = lo;
  grid.step = step;
  const double raw_total = std::pow(static_cast<double>(grid.points_per_dim), grid.dims);
  if (raw_total > 1e8) {
    throw BudgetExceededError("grid too large");
  }
  grid.total = static_cast<std::int64_t>(raw_total);

  if (jobs <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    jobs = hw > 0 ? static_cast<int>(hw) : 1;
  }
  jobs = std::min<std::int64_t>(jobs, std::max<std::int64_t>(1, grid.total / 1024));

  std::mutex mu;
  double best_error = std::numeric_limits<double>::infinity();
  std::int64_t best_index = std::numeric_limits<std::int64_t>::max();

  const auto scan = [&](std::int64_t begin, std::int64_t end) {
    std::vector<int> digits(grid.dims, 0);
    std::int64_t rest = begin;
    for (int dgt = grid.dims - 1; dgt >= 0; --dgt) {
      digits[dgt] = static_cast<int>(rest % grid.points_per_dim);
      rest /= grid.points_per_dim;
    }
    double local_error = std::numeric_limits<double>::infinity();
    std::int64_t local_index = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t idx = begin; idx < end; ++idx) {
      const double err = loss_at_digits(s, k, alphas, grid, digits);
      if (err < local_error) {
        local_error = err;
        local_index = idx;
      }
      for (int dgt = grid.dims - 1; dgt >= 0; --dgt) {
        if (++digits[dgt] < grid.points_per_dim) break;
        digits[dgt] = 0;
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    if (local_error < best_error ||
        (local_error == best_error && local_index < best_index)) {
      best_error = local_error;
      best_index = local_index;
    }
  };

  if (jobs == 1) {
    scan(0, grid.total);
  } else {
    std::vector<std::thread> workers;
    const std::int64_t span = (grid.total + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t) {
      const std::int64_t begin = t * span;
      const std::int64_t end = std::min<std::int64_t>(grid.total, begin + span);
      if (begin >= end) break;
      workers.emplace_back([&, begin, end] { scan(begin, end); });
    }
    for (auto& w : workers) w.join();
  }

  // Rebuild the winning net from its flat index.
  std::vector<int> digits(grid.dims, 0);
  std::int64_t rest = best_index;
  for (int dgt = grid.dims - 1; dgt >= 0; --dgt) {
    digits[dgt] = static_cast<int>(rest % grid.points_per_dim);
    rest /= grid.points_per_dim;
  }
  Eigen::MatrixXd weights(k, s.n());
  Eigen::VectorXd biases(k);
  Eigen::VectorXd av(k);
  for (int j = 0; j < k; ++j) {
    for (int c = 0; c < s.n(); ++c) {
      weights(j, c) = grid.lo + grid.step * digits[j * (s.n() + 1) + c];
    }
    biases[j] = grid.lo + grid.step * digits[j * (s.n() + 1) + s.n()];
    av[j] = alphas[j];
  }
  GridSearchResult result;
  result.net = make_relu_net(std::move(av), std::move(weights), std::move(biases));
  result.error = best_error;
  result.nets_evaluated = grid.total;
  return result;
}

RandomProbeResult random_probe(const SampleSet& s, int k,
                               const std::vector<double>& alphas, int trials,
                               bool norm_constrained, std::uint64_t seed) {
  s.validate();
  if (k < 0) throw ValidationError("k must be >= 0");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (static_cast<int>(alphas.size()) != k) {
    throw ValidationError("alphas length does not match k");
  }

  RandomProbeResult result;
  result.seed = seed;
  if (k == 0) {
    result.best_net = make_relu_net(Eigen::VectorXd(0), Eigen::MatrixXd(0, s.n()),
                                    Eigen::VectorXd(0));
    result.min_error = squared_loss(result.best_net, s);
    return result;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  std::uniform_real_distribution<double> bias_unif(-1.0, 1.0);

  double best = std::numeric_limits<double>::infinity();
  ReluNet best_net;
  Eigen::VectorXd av(k);
  for (int j = 0; j < k; ++j) av[j] = alphas[j];
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd weights(k, s.n());
    Eigen::VectorXd biases(k);
    for (int j = 0; j < k; ++j) {
      if (norm_constrained) {
        weights.row(j) = ball_uniform(rng, s.n()).transpose();
        biases[j] = bias_unif(rng);
      } else {
        for (int c = 0; c < s.n(); ++c) weights(j, c) = box(rng);
        biases[j] = box(rng);
      }
    }
    ReluNet net = make_relu_net(av, std::move(weights), std::move(biases));
    const double err = squared_loss(net, s);
    if (err < best) {
      best = err;
      best_net = std::move(net);
    }
  }
  result.min_error = best;
  result.best_net = std::move(best_net);
  return result;
}

}  // namespace relu_exact
