#include "relu_exact/learners.hpp"

#include <cmath>

namespace relu_exact {

void LearnerConfig::validate() const {
  if (k < 1) throw ValidationError("learner needs k >= 1");
  if (epsilon <= 0.0) throw ValidationError("epsilon must be > 0");
  if (delta <= 0.0 || delta >= 1.0) {
    throw ValidationError("delta must be in (0,1)");
  }
  if (constant_scale <= 0.0) throw ValidationError("constant_scale must be > 0");
}

std::int64_t sample_count_agnostic(const LearnerConfig& cfg) {
  cfg.validate();
  const double k4 = std::pow(static_cast<double>(cfg.k), 4.0);
  const double raw = cfg.constant_scale * 1e10 * k4 *
                     (1.0 + std::log(1.0 / cfg.delta)) /
                     (cfg.epsilon * cfg.epsilon);
  return static_cast<std::int64_t>(std::ceil(raw));
}

std::int64_t sample_count_reliable(const LearnerConfig& cfg) {
  cfg.validate();
  const double k6 = std::pow(static_cast<double>(cfg.k), 6.0);
  const double raw = cfg.constant_scale * 1e10 * k6 * std::log(2.0 / cfg.delta) /
                     std::pow(cfg.epsilon, 4.0);
  return static_cast<std::int64_t>(std::ceil(raw));
}

double reliable_bias_shift(int k, double epsilon) {
  return epsilon / (12.0 * k * k);
}

double rademacher_bound(int k, std::int64_t m) {
  if (m < 1) throw ValidationError("rademacher_bound needs m >= 1");
  return 2.0 * k / std::sqrt(static_cast<double>(m));
}

double generalization_bound(int k, std::int64_t m, double delta, double lipschitz,
                            double bound) {
  if (m < 1) throw ValidationError("generalization_bound needs m >= 1");
  if (delta <= 0.0 || delta >= 1.0) {
    throw ValidationError("delta must be in (0,1)");
  }
  return 4.0 * lipschitz * rademacher_bound(k, m) +
         2.0 * bound * std::sqrt(std::log(1.0 / delta) / static_cast<double>(m));
}

namespace {

SampleSet draw_samples(const SampleSource& source, std::int64_t count) {
  if (count < 1) throw ValidationError("sample count must be >= 1");
  Eigen::MatrixXd points;
  Eigen::VectorXd labels(count);
  for (std::int64_t i = 0; i < count; ++i) {
    auto [x, y] = source();
    if (i == 0) points.resize(count, x.size());
    if (x.size() != points.cols()) {
      throw ValidationError("sample source changed dimension mid-stream");
    }
    points.row(i) = x.transpose();
    labels[i] = y;
  }
  return make_sample_set(std::move(points), std::move(labels), /*unit_ball=*/true);
}

TrainOptions trainer_options(const LearnerConfig& cfg, bool reliable) {
  TrainOptions opts;
  opts.k = cfg.k;
  opts.alphas.assign(cfg.k, 1.0);
  opts.norm_constrained = true;
  opts.reliable = reliable;
  opts.solver = cfg.solver;
  if (opts.solver.beta <= 0.0) opts.solver.beta = cfg.epsilon / 100.0;
  opts.parallelism = cfg.parallelism;
  opts.max_joint_patterns = cfg.max_joint_patterns;
  return opts;
}

}  // namespace

LearnOutcome learn_agnostic(const SampleSource& source, const LearnerConfig& cfg) {
  cfg.validate();
  const std::int64_t count = sample_count_agnostic(cfg);
  SampleSet train = draw_samples(source, count);
  TrainResult fit = train_exact(train, trainer_options(cfg, /*reliable=*/false));
  LearnOutcome out;
  out.net = fit.net;
  out.net_preshift = std::move(fit.net);
  out.samples_used = count;
  out.training_loss = fit.error;
  out.training_set = std::move(train);
  return out;
}

LearnOutcome learn_reliable(const SampleSource& source, const LearnerConfig& cfg) {
  cfg.validate();
  const std::int64_t count = sample_count_reliable(cfg);
  SampleSet train = draw_samples(source, count);
  TrainResult fit = train_exact(train, trainer_options(cfg, /*reliable=*/true));
  const double gamma = reliable_bias_shift(cfg.k, cfg.epsilon);
  ReluNet shifted = fit.net;
  for (int j = 0; j < shifted.k(); ++j) {
    shifted.biases[j] = std::max(-1.0, shifted.biases[j] - gamma);
  }
  LearnOutcome out;
  out.net = std::move(shifted);
  out.net_preshift = std::move(fit.net);
  out.samples_used = count;
  out.training_loss = fit.error;
  out.training_set = std::move(train);
  return out;
}

}  // namespace relu_exact
