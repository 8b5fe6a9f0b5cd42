#include "relu_exact/harness.hpp"

#include "relu_exact/random_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

namespace relu_exact {

using nlohmann::json;

ReluNet random_normalized_net(std::mt19937_64& rng, int n, int k,
                              bool negative_bias) {
  std::uniform_real_distribution<double> bias_range(negative_bias ? -0.8 : -1.0,
                                                    negative_bias ? -0.1 : 1.0);
  std::uniform_real_distribution<double> radius(0.2, 1.0);
  Eigen::MatrixXd weights(k, n);
  Eigen::VectorXd biases(k);
  Eigen::VectorXd alphas = Eigen::VectorXd::Ones(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd dir = ball_uniform(rng, n);
    const double norm = dir.norm();
    if (norm > 0.0) dir *= radius(rng) / norm;
    weights.row(j) = dir.transpose();
    biases[j] = bias_range(rng);
  }
  return make_relu_net(std::move(alphas), std::move(weights), std::move(biases),
                       /*normalized=*/true);
}

SampleSource make_synthetic_source(const SyntheticSpec& spec) {
  if (spec.n < 1) throw ValidationError("synthetic source needs n >= 1");
  auto rng = std::make_shared<std::mt19937_64>(spec.seed);
  std::optional<ReluNet> truth = spec.ground_truth;
  if (!truth && spec.kind != SyntheticSpec::Kind::kZero) {
    truth = random_normalized_net(*rng, spec.n, spec.k);
  }
  const SyntheticSpec copy = spec;
  return [rng, truth, copy]() -> std::pair<Eigen::VectorXd, double> {
    Eigen::VectorXd x = ball_uniform(*rng, copy.n);
    double y = 0.0;
    switch (copy.kind) {
      case SyntheticSpec::Kind::kZero:
        break;
      case SyntheticSpec::Kind::kRealizable:
        y = eval_net(*truth, x);
        break;
      case SyntheticSpec::Kind::kNoisy: {
        std::normal_distribution<double> noise(0.0, copy.sigma);
        y = eval_net(*truth, x) + noise(*rng);
        break;
      }
      case SyntheticSpec::Kind::kMixture: {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        y = eval_net(*truth, x);
        if (unif(*rng) < copy.outlier_prob) y = copy.outlier_value;
        break;
      }
    }
    return {std::move(x), y};
  };
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  const std::string prefix = "synthetic:";
  if (text.rfind(prefix, 0) != 0) {
    throw ValidationError("synthetic spec must start with 'synthetic:'");
  }
  std::vector<std::string> parts;
  std::stringstream stream(text.substr(prefix.size()));
  std::string part;
  while (std::getline(stream, part, ':')) parts.push_back(part);
  if (parts.empty()) throw ValidationError("synthetic spec needs a kind");

  SyntheticSpec spec;
  if (parts[0] == "realizable") {
    spec.kind = SyntheticSpec::Kind::kRealizable;
  } else if (parts[0] == "noisy") {
    spec.kind = SyntheticSpec::Kind::kNoisy;
  } else if (parts[0] == "mixture") {
    spec.kind = SyntheticSpec::Kind::kMixture;
  } else if (parts[0] == "zero") {
    spec.kind = SyntheticSpec::Kind::kZero;
  } else {
    throw ValidationError("unknown synthetic kind: " + parts[0]);
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw ValidationError("synthetic option must be key=value: " + parts[i]);
    }
    const std::string key = parts[i].substr(0, eq);
    const std::string value = parts[i].substr(eq + 1);
    if (key == "n") {
      spec.n = std::stoi(value);
    } else if (key == "k") {
      spec.k = std::stoi(value);
    } else if (key == "sigma") {
      spec.sigma = std::stod(value);
    } else if (key == "prob") {
      spec.outlier_prob = std::stod(value);
    } else if (key == "value") {
      spec.outlier_value = std::stod(value);
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else {
      throw ValidationError("unknown synthetic option: " + key);
    }
  }
  return spec;
}

// --- config / report ----------------------------------------------------------

int resolve_jobs_from_env(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RELU_EXACT_JOBS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

SuiteConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  SuiteConfig config;
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) config.jobs = j.at("jobs").get<int>();
  if (j.contains("checks")) {
    config.checks = j.at("checks").get<std::vector<std::string>>();
  }
  return config;
}

namespace {

std::string strip(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

std::string parse_toml_string(const std::string& raw) {
  const std::string t = strip(raw);
  if (t.size() < 2 || t.front() != '"' || t.back() != '"') {
    throw ValidationError("expected a quoted string: " + raw);
  }
  return t.substr(1, t.size() - 2);
}

}  // namespace

SuiteConfig config_from_toml(const std::string& text) {
  SuiteConfig config;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line is not key = value: " + line);
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "jobs") {
      config.jobs = std::stoi(value);
    } else if (key == "checks") {
      if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
        throw ValidationError("checks must be an array");
      }
      std::string inner = value.substr(1, value.size() - 2);
      std::stringstream items(inner);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = strip(item);
        if (!item.empty()) config.checks.push_back(parse_toml_string(item));
      }
    } else {
      throw ValidationError("unknown config key: " + key);
    }
  }
  return config;
}

SuiteConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return config_from_json(text);
  }
  return config_from_toml(text);
}

std::string report_to_json(const SuiteReport& report) {
  json j;
  j["seed"] = report.seed;
  json checks = json::array();
  for (const CheckResult& check : report.checks) {
    json c;
    c["id"] = check.id;
    c["pass"] = check.pass;
    c["details"] = json::parse(check.details.empty() ? "{}" : check.details);
    checks.push_back(std::move(c));
  }
  j["checks"] = std::move(checks);
  j["all_pass"] = report.all_pass;
  return j.dump(2);
}

std::string report_to_text(const SuiteReport& report) {
  std::ostringstream out;
  for (const CheckResult& check : report.checks) {
    out << (check.pass ? "[PASS] " : "[FAIL] ") << check.id << "\n";
  }
  out << (report.all_pass ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
  return out.str();
}

}  // namespace relu_exact
