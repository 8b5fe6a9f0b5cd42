#pragma once

#include "relu_exact/learners.hpp"
#include "relu_exact/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace relu_exact {

// --- synthetic distributions over the unit ball -----------------------------

struct SyntheticSpec {
  enum class Kind { kRealizable, kNoisy, kMixture, kZero };
  Kind kind = Kind::kRealizable;
  int n = 1;
  int k = 1;
  double sigma = 0.0;         // label noise (noisy)
  double outlier_prob = 0.0;  // mixture
  double outlier_value = 1.0;
  std::uint64_t seed = 0;
  std::optional<ReluNet> ground_truth;  // drawn from the seed when absent
};

// Draws a ground-truth net in the normalized class; negative_bias skews
// biases negative so a zero-output region exists (reliable experiments).
ReluNet random_normalized_net(std::mt19937_64& rng, int n, int k,
                              bool negative_bias = false);

// x uniform on the unit ball; labels per the spec kind. The returned
// source owns its RNG state.
SampleSource make_synthetic_source(const SyntheticSpec& spec);

// Parses "synthetic:KIND[:key=value...]" with keys n, k, sigma, prob,
// value, seed; e.g. "synthetic:realizable:n=2:seed=7".
SyntheticSpec parse_synthetic_spec(const std::string& text);

// --- suite -------------------------------------------------------------------

struct SuiteConfig {
  std::uint64_t seed = 1;
  int jobs = 0;  // 0: RELU_EXACT_JOBS env or hardware
  std::vector<std::string> checks;
};

struct CheckResult {
  std::string id;
  bool pass = false;
  std::string details;  // JSON object text, deterministic for a fixed seed
};

struct SuiteReport {
  std::uint64_t seed = 1;
  std::vector<CheckResult> checks;  // sorted by id
  bool all_pass = true;
};

// All check ids, in acceptance-criterion order.
std::vector<std::string> default_check_ids();

SuiteReport run_suite(const SuiteConfig& config);

std::string report_to_json(const SuiteReport& report);
std::string report_to_text(const SuiteReport& report);

SuiteConfig config_from_json(const std::string& text);
// Line-based TOML subset: `key = value` with integers, strings and string
// arrays.
SuiteConfig config_from_toml(const std::string& text);
SuiteConfig config_from_file(const std::string& path);

int resolve_jobs_from_env(int requested);

}  // namespace relu_exact
