#include "relu_exact/exact_trainer.hpp"
#include "relu_exact/harness.hpp"
#include "relu_exact/learners.hpp"
#include "relu_exact/oracle.hpp"
#include "relu_exact/realizable.hpp"
#include "relu_exact/reductions.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace relu_exact;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

// Accepts a bare SampleSet (JSON or CSV) or a reduction-instance JSON.
SampleSet load_samples(const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = json::parse(text);
    if (j.contains("kind")) {
      return instance_from_json(text).samples;
    }
    return sample_set_from_json(text);
  }
  return sample_set_from_csv(text);
}

std::vector<double> parse_alphas(const std::string& text, int k) {
  std::vector<double> alphas;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ',')) {
    if (part == "+1" || part == "1") {
      alphas.push_back(1.0);
    } else if (part == "-1") {
      alphas.push_back(-1.0);
    } else {
      throw ValidationError("alphas must be a comma list of +1/-1");
    }
  }
  if (static_cast<int>(alphas.size()) != k) {
    throw ValidationError("alphas length does not match --k");
  }
  return alphas;
}

json train_result_to_json(const TrainResult& result) {
  json j;
  j["net"] = json::parse(relu_net_to_json(result.net));
  j["error"] = result.error;
  json bits = json::array();
  for (int u = 0; u < result.pattern.units; ++u) {
    json row = json::array();
    for (int i = 0; i < result.pattern.samples; ++i) {
      row.push_back(result.pattern.bit(u, i));
    }
    bits.push_back(std::move(row));
  }
  j["pattern"] = std::move(bits);
  j["patterns_searched"] = result.patterns_searched;
  j["patterns_infeasible"] = result.patterns_infeasible;
  j["cells_per_unit"] = result.cells_per_unit;
  return j;
}

int run_train(const std::string& samples_path, int k, const std::string& alphas_text,
              bool norm_constrained, bool reliable, bool no_bias, double beta,
              int jobs, double stop_below, const std::string& out_path) {
  const SampleSet samples = load_samples(samples_path);
  TrainOptions opts;
  opts.k = k;
  opts.norm_constrained = norm_constrained;
  opts.reliable = reliable;
  opts.train_bias = !no_bias;
  opts.solver.beta = beta;
  opts.parallelism = resolve_jobs_from_env(jobs);
  opts.stop_below_error = stop_below;
  opts.max_joint_patterns = std::uint64_t{1} << 31;

  TrainResult result;
  if (alphas_text == "unknown") {
    result = train_exact_unknown_coeffs(samples, opts);
  } else {
    opts.alphas = parse_alphas(alphas_text, k);
    result = train_exact(samples, opts);
  }
  std::cout << train_result_to_json(result).dump(2) << "\n";
  if (!out_path.empty()) write_file(out_path, relu_net_to_json(result.net));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Globally optimal training of depth-2 sum-of-ReLUs networks"};
  app.require_subcommand(1);

  int global_jobs = 0;
  std::uint64_t global_seed = 1;
  std::string format = "text";
  app.add_option("--jobs", global_jobs, "worker count (default: RELU_EXACT_JOBS or hardware)");
  app.add_option("--seed", global_seed, "RNG seed");
  app.add_option("--format", format, "output format: text|json")
      ->check(CLI::IsMember({"text", "json"}));

  // train
  auto* train = app.add_subcommand("train", "exact global training");
  std::string train_samples, train_alphas = "+1", train_out;
  int train_k = 1;
  bool train_norm = false, train_reliable = false, train_no_bias = false;
  double train_beta = 1e-8, train_stop = -1.0;
  train->add_option("--samples", train_samples, "sample set file (JSON/CSV)")->required();
  train->add_option("--k", train_k, "unit count")->required();
  train->add_option("--alphas", train_alphas, "comma list of +1/-1, or 'unknown'");
  train->add_flag("--norm-constrained", train_norm, "restrict to ||w||<=1, b in [-1,1]");
  train->add_flag("--reliable", train_reliable, "force zero output on y=0 samples");
  train->add_flag("--no-bias", train_no_bias, "pin all biases at zero");
  train->add_option("--beta", train_beta, "additive accuracy");
  train->add_option("--stop-below", train_stop, "stop when a pattern reaches this error");
  train->add_option("--out", train_out, "write the trained net JSON here");

  // realizable
  auto* realizable_cmd = app.add_subcommand("realizable", "single-ReLU exact-fit check");
  std::string realizable_samples;
  bool realizable_no_bias = false;
  realizable_cmd->add_option("--samples", realizable_samples, "sample set file")->required();
  realizable_cmd->add_flag("--no-bias", realizable_no_bias, "fit without a bias");

  // learn
  auto* learn = app.add_subcommand("learn", "agnostic / reliable proper learning");
  std::string learn_source, learn_out;
  int learn_k = 1;
  double learn_eps = 0.1, learn_delta = 0.1, learn_scale = 1.0;
  bool learn_reliable_flag = false;
  learn->add_option("--source", learn_source, "synthetic:SPEC or sample file")->required();
  learn->add_option("--k", learn_k, "unit count")->required();
  learn->add_option("--epsilon", learn_eps, "target excess error")->required();
  learn->add_option("--delta", learn_delta, "failure probability")->required();
  learn->add_flag("--reliable", learn_reliable_flag, "reliable learner");
  learn->add_option("--constant-scale", learn_scale, "scale on the sample-count constant");
  learn->add_option("--out", learn_out, "write the learned net JSON here");

  // gen
  auto* gen = app.add_subcommand("gen", "reduction instance generators");
  gen->require_subcommand(1);
  std::string gen_in, gen_out, gen_samples_out;
  bool gen_with_bias = false;
  for (const char* name : {"setcover", "3sat", "mmcs"}) {
    auto* sub = gen->add_subcommand(name);
    sub->add_option("--in", gen_in, "source instance JSON")->required();
    sub->add_flag("--with-bias", gen_with_bias, "bias-gadget variant");
    sub->add_option("--out", gen_out, "instance JSON output")->required();
    sub->add_option("--samples-out", gen_samples_out, "bare SampleSet JSON output");
  }

  // verify
  auto* verify = app.add_subcommand("verify", "witness-loss and bound checks");
  std::string verify_instance, verify_net;
  verify->add_option("--instance", verify_instance, "instance JSON")->required();
  verify->add_option("--net", verify_net, "net JSON")->required();

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "independent brute-force optimizers");
  oracle_cmd->require_subcommand(1);
  auto* grid = oracle_cmd->add_subcommand("grid", "exhaustive grid search");
  std::string oracle_samples, oracle_alphas = "+1";
  int oracle_k = 1, probe_trials = 1000;
  double grid_lo = -2.0, grid_hi = 2.0, grid_step = 0.1;
  bool probe_norm = false;
  grid->add_option("--samples", oracle_samples)->required();
  grid->add_option("--k", oracle_k)->required();
  grid->add_option("--alphas", oracle_alphas);
  grid->add_option("--lo", grid_lo);
  grid->add_option("--hi", grid_hi);
  grid->add_option("--step", grid_step);
  auto* probe = oracle_cmd->add_subcommand("probe", "random candidate probing");
  probe->add_option("--samples", oracle_samples)->required();
  probe->add_option("--k", oracle_k)->required();
  probe->add_option("--alphas", oracle_alphas);
  probe->add_option("--trials", probe_trials);
  probe->add_flag("--norm-constrained", probe_norm);

  // suite
  auto* suite = app.add_subcommand("suite", "acceptance suite runner");
  std::string suite_config, suite_out;
  bool suite_all = false;
  suite->add_option("--config", suite_config, "TOML or JSON config");
  suite->add_flag("--all", suite_all, "run every default check");
  suite->add_option("--out", suite_out, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return run_train(train_samples, train_k, train_alphas, train_norm,
                       train_reliable, train_no_bias, train_beta, global_jobs,
                       train_stop, train_out);
    }
    if (realizable_cmd->parsed()) {
      const SampleSet samples = load_samples(realizable_samples);
      const RealizableResult fit =
          check_realizable_single(samples, !realizable_no_bias);
      if (fit.status == RealizableStatus::kNotRealizable) {
        std::cout << "NOT REALIZABLE\n";
        return 1;
      }
      json j;
      j["w"] = std::vector<double>(fit.w.data(), fit.w.data() + fit.w.size());
      j["b"] = fit.b;
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (learn->parsed()) {
      LearnerConfig cfg;
      cfg.k = learn_k;
      cfg.epsilon = learn_eps;
      cfg.delta = learn_delta;
      cfg.constant_scale = learn_scale;
      cfg.parallelism = resolve_jobs_from_env(global_jobs);
      SampleSource source;
      if (learn_source.rfind("synthetic:", 0) == 0) {
        SyntheticSpec spec = parse_synthetic_spec(learn_source);
        if (spec.seed == 0) spec.seed = global_seed;
        spec.k = learn_k;
        source = make_synthetic_source(spec);
      } else {
        auto samples = std::make_shared<SampleSet>(load_samples(learn_source));
        auto cursor = std::make_shared<int>(0);
        source = [samples, cursor]() -> std::pair<Eigen::VectorXd, double> {
          const int i = *cursor % samples->m();
          ++*cursor;
          return {samples->points.row(i).transpose(), samples->labels[i]};
        };
      }
      const LearnOutcome outcome = learn_reliable_flag ? learn_reliable(source, cfg)
                                                       : learn_agnostic(source, cfg);
      json j;
      j["samples_used"] = outcome.samples_used;
      j["training_loss"] = outcome.training_loss;
      j["rademacher_bound"] = rademacher_bound(learn_k, outcome.samples_used);
      j["generalization_bound"] =
          generalization_bound(learn_k, outcome.samples_used, learn_delta,
                               4.0 * learn_k, 4.0 * learn_k * learn_k);
      j["net"] = json::parse(relu_net_to_json(outcome.net));
      std::cout << j.dump(2) << "\n";
      if (!learn_out.empty()) write_file(learn_out, relu_net_to_json(outcome.net));
      return 0;
    }
    if (gen->parsed()) {
      ReductionInstance inst;
      const std::string sub = gen->get_subcommands().front()->get_name();
      const std::string text = read_file(gen_in);
      if (sub == "setcover") {
        inst = gen_setcover(set_cover_from_json(text), gen_with_bias);
      } else if (sub == "3sat") {
        inst = gen_3sat(cnf_from_json(text), gen_with_bias);
      } else {
        inst = gen_mmcs(circuit_from_json(text), gen_with_bias);
      }
      write_file(gen_out, instance_to_json(inst));
      if (!gen_samples_out.empty()) {
        write_file(gen_samples_out, sample_set_to_json(inst.samples));
      }
      std::cout << "wrote " << gen_out << " (m=" << inst.samples.m()
                << ", n=" << inst.samples.n() << ", eps=" << inst.epsilon << ")\n";
      return 0;
    }
    if (verify->parsed()) {
      const ReductionInstance inst = instance_from_json(read_file(verify_instance));
      const ReluNet net = relu_net_from_json(read_file(verify_net));
      const double loss = squared_loss(net, inst.samples);
      json j;
      j["loss"] = loss;
      switch (inst.kind) {
        case ReductionKind::kSetCover: {
          const auto& sc = std::get<SetCoverInstance>(inst.source);
          const int optimum = brute_force_setcover(sc);
          j["predicted_optimum"] = inst.predicted.unit_error * optimum;
          j["cover_optimum"] = optimum;
          break;
        }
        case ReductionKind::kThreeSat: {
          const auto& f = std::get<CnfFormula>(inst.source);
          const bool satisfiable = brute_force_sat(f).has_value();
          j["satisfiable"] = satisfiable;
          j["predicted_optimum"] = satisfiable ? 0.0 : -1.0;
          break;
        }
        case ReductionKind::kMmcs: {
          const auto& c = std::get<MonotoneCircuit>(inst.source);
          const int optimum = brute_force_mmcs(c);
          j["predicted_optimum"] = inst.predicted.unit_error * optimum;
          j["mmcs_optimum"] = optimum;
          const auto report = height_bound_check(c, net, loss, inst.with_bias);
          j["height_bound_violations"] = static_cast<int>(report.size());
          break;
        }
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (oracle_cmd->parsed()) {
      const SampleSet samples = load_samples(oracle_samples);
      const std::vector<double> alphas = parse_alphas(oracle_alphas, oracle_k);
      json j;
      if (grid->parsed()) {
        const GridSearchResult result =
            grid_search_train(samples, oracle_k, alphas, grid_lo, grid_hi, grid_step,
                              resolve_jobs_from_env(global_jobs));
        j["error"] = result.error;
        j["nets_evaluated"] = result.nets_evaluated;
        j["net"] = json::parse(relu_net_to_json(result.net));
      } else {
        const RandomProbeResult result = random_probe(samples, oracle_k, alphas,
                                                      probe_trials, probe_norm,
                                                      global_seed);
        j["min_error"] = result.min_error;
        j["seed"] = result.seed;
        j["net"] = json::parse(relu_net_to_json(result.best_net));
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (suite->parsed()) {
      SuiteConfig config;
      if (!suite_config.empty()) {
        config = config_from_file(suite_config);
      }
      if (suite_all || (suite_config.empty() && config.checks.empty())) {
        config.checks = default_check_ids();
      }
      if (config.jobs == 0) config.jobs = global_jobs;
      if (app.count("--seed")) config.seed = global_seed;
      const SuiteReport report = run_suite(config);
      const std::string rendered =
          format == "json" ? report_to_json(report) : report_to_text(report);
      std::cout << rendered;
      if (!suite_out.empty()) write_file(suite_out, report_to_json(report));
      return report.all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
