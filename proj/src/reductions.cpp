#include "relu_exact/reductions.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace relu_exact {

namespace {

constexpr std::uint64_t kBruteForceGuard = std::uint64_t{1} << 20;

// Evaluates every wire given input-wire values (other entries ignored).
std::vector<bool> propagate_wires(const MonotoneCircuit& c,
                                  const std::vector<bool>& input_values) {
  const std::vector<int> heights = c.wire_heights();
  std::vector<bool> value(c.num_wires, false);
  for (int w : c.input_wires) value[w] = input_values[w];
  std::vector<int> order(c.gates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return heights[c.gates[a].output] < heights[c.gates[b].output];
  });
  for (int g : order) {
    const Gate& gate = c.gates[g];
    bool v = gate.type == Gate::Type::kAnd;
    for (int in : gate.inputs) {
      if (gate.type == Gate::Type::kAnd) {
        v = v && value[in];
      } else {
        v = v || value[in];
      }
    }
    value[gate.output] = v;
  }
  return value;
}

}  // namespace

// --- validation -------------------------------------------------------------

void SetCoverInstance::validate() const {
  if (universe_size < 1) throw ValidationError("universe must be nonempty");
  if (subsets.empty()) throw ValidationError("subset family must be nonempty");
  if (k < 1 || k > static_cast<int>(subsets.size())) {
    throw ValidationError("target k must be in [1, M]");
  }
  for (const auto& subset : subsets) {
    for (int e : subset) {
      if (e < 1 || e > universe_size) {
        throw ValidationError("subset element outside universe");
      }
    }
  }
}

void CnfFormula::validate() const {
  if (num_vars < 1) throw ValidationError("formula needs at least one variable");
  for (const auto& clause : clauses) {
    for (int lit : clause) {
      if (lit == 0 || std::abs(lit) > num_vars) {
        throw ValidationError("literal out of range");
      }
    }
  }
}

void MonotoneCircuit::validate() const {
  if (num_wires < 1) throw ValidationError("circuit needs wires");
  std::vector<int> driver(num_wires, -1);
  for (int w : input_wires) {
    if (w < 0 || w >= num_wires) throw ValidationError("input wire id out of range");
    if (driver[w] != -1) throw ValidationError("duplicate input wire");
    driver[w] = -2;
  }
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const Gate& gate = gates[g];
    if (gate.inputs.empty()) throw ValidationError("gate with no inputs");
    if (gate.output < 0 || gate.output >= num_wires) {
      throw ValidationError("gate output out of range");
    }
    if (driver[gate.output] != -1) {
      throw ValidationError("wire driven twice or gate drives an input wire");
    }
    driver[gate.output] = static_cast<int>(g);
    for (int in : gate.inputs) {
      if (in < 0 || in >= num_wires) throw ValidationError("gate input out of range");
    }
  }
  for (int w = 0; w < num_wires; ++w) {
    if (driver[w] == -1) throw ValidationError("undriven wire");
  }
  if (output_wire < 0 || output_wire >= num_wires) {
    throw ValidationError("output wire out of range");
  }
  wire_heights();  // throws on cycles
}

std::vector<int> MonotoneCircuit::wire_heights() const {
  std::vector<int> height(num_wires, -1);
  for (int w : input_wires) height[w] = 0;
  bool progress = true;
  int resolved = static_cast<int>(input_wires.size());
  while (progress) {
    progress = false;
    for (const Gate& gate : gates) {
      if (height[gate.output] != -1) continue;
      int h = 0;
      bool ready = true;
      for (int in : gate.inputs) {
        if (height[in] == -1) {
          ready = false;
          break;
        }
        h = std::max(h, height[in]);
      }
      if (ready) {
        height[gate.output] = h + 1;
        ++resolved;
        progress = true;
      }
    }
  }
  if (resolved != num_wires) throw ValidationError("circuit has a cycle");
  return height;
}

int MonotoneCircuit::depth() const { return wire_heights()[output_wire]; }

// --- generators -------------------------------------------------------------

ReductionInstance gen_setcover(const SetCoverInstance& sc, bool with_bias) {
  sc.validate();
  const int N = sc.universe_size;
  const int M = static_cast<int>(sc.subsets.size());
  const int n = M + 2;
  const int m = N + M + sc.k + 2;
  const double eps = 0.01 / (static_cast<double>(m) * m);
  const int w1 = M;
  const int weps = M + 1;

  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd labels = Eigen::VectorXd::Zero(m);
  int row = 0;
  for (int e = 1; e <= N; ++e) {
    points(row, w1) = 1.0;
    for (int j = 0; j < M; ++j) {
      if (std::find(sc.subsets[j].begin(), sc.subsets[j].end(), e) !=
          sc.subsets[j].end()) {
        points(row, j) = 1.0;
      }
    }
    labels[row] = 0.0;
    ++row;
  }
  for (int j = 0; j < M; ++j) {
    points(row, j) = 1.0;
    points(row, weps) = 1.0;
    labels[row] = eps;
    ++row;
  }
  points(row, w1) = 1.0;
  labels[row] = 1.0;
  ++row;
  for (int copy = 0; copy < sc.k + 1; ++copy) {
    points(row, weps) = 1.0;
    labels[row] = eps;
    ++row;
  }

  ReductionInstance inst;
  inst.kind = ReductionKind::kSetCover;
  inst.samples = make_sample_set(std::move(points), std::move(labels));
  inst.epsilon = eps;
  inst.with_bias = with_bias;
  for (int j = 0; j < M; ++j) {
    inst.variable_index_map["S" + std::to_string(j + 1)] = j;
  }
  inst.variable_index_map["w1"] = w1;
  inst.variable_index_map["w_eps"] = weps;
  inst.predicted = {ReductionKind::kSetCover, eps * eps};
  inst.source = sc;
  return inst;
}

ReductionInstance gen_3sat(const CnfFormula& f, bool with_bias) {
  f.validate();
  const int N = f.num_vars;
  const int M = static_cast<int>(f.clauses.size());
  const int n = N + 1 + (with_bias ? 1 : 0);
  const int m = 2 * N + M + 1 + (with_bias ? 5 : 0);
  const int v_coord = N;
  const int dummy_coord = N + 1;

  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd labels = Eigen::VectorXd::Zero(m);
  int row = 0;
  points(row, v_coord) = 1.0;
  labels[row] = 4.0;
  ++row;
  for (int i = 0; i < N; ++i) {
    points(row, i) = 1.0;
    labels[row] = 1.0;
    ++row;
    points(row, i) = -1.0;
    labels[row] = 1.0;
    ++row;
  }
  for (const auto& clause : f.clauses) {
    points(row, v_coord) = -1.0;
    for (int lit : clause) {
      const int var = std::abs(lit) - 1;
      points(row, var) += lit > 0 ? -1.0 : 1.0;
    }
    labels[row] = 0.0;
    ++row;
  }
  if (with_bias) {
    labels[row] = 0.0;  // all-zero sample
    ++row;
    points(row, dummy_coord) = 1.0;
    labels[row] = 1.0;
    ++row;
    points(row, dummy_coord) = -1.0;
    labels[row] = 1.0;
    ++row;
    points(row, dummy_coord) = 2.0;
    labels[row] = 2.0;
    ++row;
    points(row, dummy_coord) = -2.0;
    labels[row] = 2.0;
    ++row;
  }

  ReductionInstance inst;
  inst.kind = ReductionKind::kThreeSat;
  inst.samples = make_sample_set(std::move(points), std::move(labels));
  inst.epsilon = 0.0;
  inst.with_bias = with_bias;
  for (int i = 0; i < N; ++i) {
    inst.variable_index_map["x" + std::to_string(i + 1)] = i;
  }
  inst.variable_index_map["v"] = v_coord;
  if (with_bias) inst.variable_index_map["v_dummy"] = dummy_coord;
  inst.predicted = {ReductionKind::kThreeSat, 0.0};
  inst.source = f;
  return inst;
}

ReductionInstance gen_mmcs(const MonotoneCircuit& c, bool with_bias) {
  c.validate();
  const int W = c.num_wires;
  const int depth = c.depth();
  const double eps = 1.0 / std::pow(10.0 * W, depth + 1);
  const int n = W + 1 + (with_bias ? 1 : 0);
  const int weps = W;
  const int dummy_coord = W + 1;

  int m = 1 + static_cast<int>(c.input_wires.size()) + 1;
  for (const Gate& gate : c.gates) {
    m += gate.type == Gate::Type::kOr ? 1 : static_cast<int>(gate.inputs.size());
  }
  if (with_bias) m += 3;

  Eigen::MatrixXd points = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd labels = Eigen::VectorXd::Zero(m);
  int row = 0;
  points(row, weps) = 1.0;
  labels[row] = eps;
  ++row;
  for (int i : c.input_wires) {
    points(row, weps) = 1.0;
    points(row, i) = -1.0;
    labels[row] = eps;
    ++row;
  }
  points(row, c.output_wire) = 1.0;
  labels[row] = 1.0;
  ++row;
  for (const Gate& gate : c.gates) {
    if (gate.type != Gate::Type::kOr) continue;
    points(row, gate.output) = 1.0;
    for (int in : gate.inputs) points(row, in) -= 1.0;
    labels[row] = 0.0;
    ++row;
  }
  for (const Gate& gate : c.gates) {
    if (gate.type != Gate::Type::kAnd) continue;
    for (int in : gate.inputs) {
      points(row, gate.output) = 1.0;
      points(row, in) -= 1.0;
      labels[row] = 0.0;
      ++row;
    }
  }
  if (with_bias) {
    labels[row] = 0.0;  // all-zero sample
    ++row;
    points(row, dummy_coord) = 1.0;
    labels[row] = 1.0;
    ++row;
    points(row, dummy_coord) = 2.0;
    labels[row] = 2.0;
    ++row;
  }

  ReductionInstance inst;
  inst.kind = ReductionKind::kMmcs;
  inst.samples = make_sample_set(std::move(points), std::move(labels));
  inst.epsilon = eps;
  inst.with_bias = with_bias;
  for (int w = 0; w < W; ++w) {
    inst.variable_index_map["wire" + std::to_string(w)] = w;
  }
  inst.variable_index_map["w_eps"] = weps;
  if (with_bias) inst.variable_index_map["v_dummy"] = dummy_coord;
  inst.predicted = {ReductionKind::kMmcs, eps * eps};
  inst.source = c;
  return inst;
}

// --- witnesses --------------------------------------------------------------

ReluNet setcover_witness(const SetCoverInstance& sc, const std::vector<int>& cover) {
  sc.validate();
  const int N = sc.universe_size;
  const int M = static_cast<int>(sc.subsets.size());
  std::vector<char> covered(N + 1, 0);
  for (int idx : cover) {
    if (idx < 0 || idx >= M) throw ValidationError("cover index out of range");
    for (int e : sc.subsets[idx]) covered[e] = 1;
  }
  for (int e = 1; e <= N; ++e) {
    if (!covered[e]) throw ValidationError("witness does not cover the universe");
  }
  const int m = N + M + sc.k + 2;
  const double eps = 0.01 / (static_cast<double>(m) * m);

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(1, M + 2);
  for (int idx : cover) weights(0, idx) = -1.0;
  weights(0, M) = 1.0;
  weights(0, M + 1) = eps;
  Eigen::VectorXd alphas(1), biases(1);
  alphas[0] = 1.0;
  biases[0] = 0.0;
  return make_relu_net(std::move(alphas), std::move(weights), std::move(biases));
}

ReluNet threesat_witness(const CnfFormula& f, const std::vector<bool>& assignment,
                         bool with_bias) {
  f.validate();
  if (static_cast<int>(assignment.size()) != f.num_vars) {
    throw ValidationError("assignment length does not match variable count");
  }
  for (const auto& clause : f.clauses) {
    bool satisfied = false;
    for (int lit : clause) {
      const bool value = assignment[std::abs(lit) - 1];
      if ((lit > 0 && value) || (lit < 0 && !value)) satisfied = true;
    }
    if (!satisfied) throw ValidationError("assignment does not satisfy the formula");
  }
  const int N = f.num_vars;
  const int n = N + 1 + (with_bias ? 1 : 0);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(2, n);
  for (int i = 0; i < N; ++i) {
    weights(0, i) = assignment[i] ? 1.0 : -1.0;
    weights(1, i) = -weights(0, i);
  }
  weights(0, N) = 1.0;
  weights(1, N) = 3.0;
  if (with_bias) {
    weights(0, N + 1) = 1.0;
    weights(1, N + 1) = -1.0;
  }
  Eigen::VectorXd alphas(2), biases(2);
  alphas << 1.0, 1.0;
  biases << 0.0, 0.0;
  return make_relu_net(std::move(alphas), std::move(weights), std::move(biases));
}

ReluNet mmcs_witness(const MonotoneCircuit& c, const std::vector<int>& true_inputs,
                     bool with_bias) {
  c.validate();
  std::vector<bool> input_values(c.num_wires, false);
  for (int w : true_inputs) {
    if (std::find(c.input_wires.begin(), c.input_wires.end(), w) ==
        c.input_wires.end()) {
      throw ValidationError("true input is not an input wire");
    }
    input_values[w] = true;
  }
  const std::vector<bool> value = propagate_wires(c, input_values);
  if (!value[c.output_wire]) {
    throw ValidationError("input set does not satisfy the circuit");
  }

  const int depth = c.depth();
  const double eps = 1.0 / std::pow(10.0 * c.num_wires, depth + 1);
  const int n = c.num_wires + 1 + (with_bias ? 1 : 0);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(1, n);
  for (int w = 0; w < c.num_wires; ++w) weights(0, w) = value[w] ? 1.0 : 0.0;
  weights(0, c.num_wires) = eps;
  if (with_bias) weights(0, c.num_wires + 1) = 1.0;
  Eigen::VectorXd alphas(1), biases(1);
  alphas[0] = 1.0;
  biases[0] = 0.0;
  return make_relu_net(std::move(alphas), std::move(weights), std::move(biases));
}

// --- exhaustive oracles -------------------------------------------------------

int brute_force_setcover(const SetCoverInstance& sc) {
  sc.validate();
  const int M = static_cast<int>(sc.subsets.size());
  if ((std::uint64_t{1} << M) > kBruteForceGuard) {
    throw BudgetExceededError("set cover brute force guard exceeded");
  }
  std::vector<std::uint64_t> masks(M, 0);
  for (int j = 0; j < M; ++j) {
    for (int e : sc.subsets[j]) masks[j] |= std::uint64_t{1} << (e - 1);
  }
  const std::uint64_t want =
      sc.universe_size == 64 ? ~std::uint64_t{0}
                             : (std::uint64_t{1} << sc.universe_size) - 1;
  int best = -1;
  for (std::uint64_t pick = 0; pick < (std::uint64_t{1} << M); ++pick) {
    std::uint64_t got = 0;
    for (int j = 0; j < M; ++j) {
      if ((pick >> j) & 1) got |= masks[j];
    }
    if (got == want) {
      const int size = std::popcount(pick);
      if (best < 0 || size < best) best = size;
    }
  }
  if (best < 0) throw ValidationError("family cannot cover the universe");
  return best;
}

std::optional<std::vector<bool>> brute_force_sat(const CnfFormula& f) {
  f.validate();
  if ((std::uint64_t{1} << f.num_vars) > kBruteForceGuard) {
    throw BudgetExceededError("SAT brute force guard exceeded");
  }
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << f.num_vars); ++bits) {
    std::vector<bool> assignment(f.num_vars);
    for (int i = 0; i < f.num_vars; ++i) assignment[i] = (bits >> i) & 1;
    bool all = true;
    for (const auto& clause : f.clauses) {
      bool sat = false;
      for (int lit : clause) {
        const bool value = assignment[std::abs(lit) - 1];
        if ((lit > 0 && value) || (lit < 0 && !value)) sat = true;
      }
      if (!sat) {
        all = false;
        break;
      }
    }
    if (all) return assignment;
  }
  return std::nullopt;
}

bool eval_circuit(const MonotoneCircuit& c, const std::vector<bool>& input_values) {
  if (static_cast<int>(input_values.size()) != c.num_wires) {
    throw ValidationError("input_values must have one entry per wire");
  }
  return propagate_wires(c, input_values)[c.output_wire];
}

int brute_force_mmcs(const MonotoneCircuit& c) {
  c.validate();
  const int inputs = static_cast<int>(c.input_wires.size());
  if ((std::uint64_t{1} << inputs) > kBruteForceGuard) {
    throw BudgetExceededError("MMCS brute force guard exceeded");
  }
  int best = -1;
  for (std::uint64_t pick = 0; pick < (std::uint64_t{1} << inputs); ++pick) {
    std::vector<bool> values(c.num_wires, false);
    for (int i = 0; i < inputs; ++i) {
      if ((pick >> i) & 1) values[c.input_wires[i]] = true;
    }
    if (eval_circuit(c, values)) {
      const int size = std::popcount(pick);
      if (best < 0 || size < best) best = size;
    }
  }
  if (best < 0) throw ValidationError("circuit unsatisfiable even with all inputs");
  return best;
}

// --- diagnostics --------------------------------------------------------------

std::vector<HeightBoundViolation> height_bound_check(const MonotoneCircuit& c,
                                                     const ReluNet& net,
                                                     double delta, bool with_bias) {
  c.validate();
  const int expected_n = c.num_wires + 1 + (with_bias ? 1 : 0);
  if (net.k() != 1 || net.n() != expected_n) {
    throw ValidationError("net does not match the instance layout");
  }
  const double weps = net.weights(0, c.num_wires);
  std::vector<bool> phi(c.num_wires, false);
  for (int w : c.input_wires) phi[w] = net.weights(0, w) >= weps;
  const std::vector<bool> values = propagate_wires(c, phi);
  const std::vector<int> heights = c.wire_heights();

  const int depth = c.depth();
  const double eps = 1.0 / std::pow(10.0 * c.num_wires, depth + 1);
  const double root = std::sqrt(std::max(0.0, delta)) * (with_bias ? 3.0 : 1.0);
  std::vector<HeightBoundViolation> report;
  for (int w = 0; w < c.num_wires; ++w) {
    if (values[w]) continue;
    const double bound = std::pow(2.0 * c.num_wires, heights[w]) * (eps + root);
    if (net.weights(0, w) > bound) {
      report.push_back({w, heights[w], net.weights(0, w), bound});
    }
  }
  return report;
}

// --- serialization -------------------------------------------------------------

using nlohmann::json;

namespace {

json circuit_to_json_obj(const MonotoneCircuit& c) {
  json j;
  j["num_wires"] = c.num_wires;
  j["input_wires"] = c.input_wires;
  j["output_wire"] = c.output_wire;
  json gates = json::array();
  for (const Gate& gate : c.gates) {
    json g;
    g["type"] = gate.type == Gate::Type::kOr ? "or" : "and";
    g["inputs"] = gate.inputs;
    g["output"] = gate.output;
    gates.push_back(std::move(g));
  }
  j["gates"] = std::move(gates);
  return j;
}

MonotoneCircuit circuit_from_json_obj(const json& j) {
  MonotoneCircuit c;
  c.num_wires = j.at("num_wires").get<int>();
  c.input_wires = j.at("input_wires").get<std::vector<int>>();
  c.output_wire = j.at("output_wire").get<int>();
  for (const auto& g : j.at("gates")) {
    Gate gate;
    const std::string type = g.at("type").get<std::string>();
    if (type == "or") {
      gate.type = Gate::Type::kOr;
    } else if (type == "and") {
      gate.type = Gate::Type::kAnd;
    } else {
      throw ValidationError("gate type must be 'or' or 'and'");
    }
    gate.inputs = g.at("inputs").get<std::vector<int>>();
    gate.output = g.at("output").get<int>();
    c.gates.push_back(std::move(gate));
  }
  c.validate();
  return c;
}

json set_cover_to_json_obj(const SetCoverInstance& sc) {
  json j;
  j["universe_size"] = sc.universe_size;
  j["subsets"] = sc.subsets;
  j["k"] = sc.k;
  return j;
}

SetCoverInstance set_cover_from_json_obj(const json& j) {
  SetCoverInstance sc;
  sc.universe_size = j.at("universe_size").get<int>();
  sc.subsets = j.at("subsets").get<std::vector<std::vector<int>>>();
  sc.k = j.at("k").get<int>();
  sc.validate();
  return sc;
}

json cnf_to_json_obj(const CnfFormula& f) {
  json j;
  j["num_vars"] = f.num_vars;
  json clauses = json::array();
  for (const auto& clause : f.clauses) {
    clauses.push_back(std::vector<int>{clause[0], clause[1], clause[2]});
  }
  j["clauses"] = std::move(clauses);
  return j;
}

CnfFormula cnf_from_json_obj(const json& j) {
  CnfFormula f;
  f.num_vars = j.at("num_vars").get<int>();
  for (const auto& clause : j.at("clauses")) {
    if (clause.size() != 3) throw ValidationError("clauses must have 3 literals");
    f.clauses.push_back({clause.at(0).get<int>(), clause.at(1).get<int>(),
                         clause.at(2).get<int>()});
  }
  f.validate();
  return f;
}

std::string kind_name(ReductionKind kind) {
  switch (kind) {
    case ReductionKind::kSetCover: return "setcover";
    case ReductionKind::kThreeSat: return "3sat";
    case ReductionKind::kMmcs: return "mmcs";
  }
  return "unknown";
}

}  // namespace

std::string set_cover_to_json(const SetCoverInstance& sc) {
  return set_cover_to_json_obj(sc).dump();
}
SetCoverInstance set_cover_from_json(const std::string& text) {
  return set_cover_from_json_obj(json::parse(text));
}
std::string cnf_to_json(const CnfFormula& f) { return cnf_to_json_obj(f).dump(); }
CnfFormula cnf_from_json(const std::string& text) {
  return cnf_from_json_obj(json::parse(text));
}
std::string circuit_to_json(const MonotoneCircuit& c) {
  return circuit_to_json_obj(c).dump();
}
MonotoneCircuit circuit_from_json(const std::string& text) {
  return circuit_from_json_obj(json::parse(text));
}

std::string instance_to_json(const ReductionInstance& inst) {
  json j;
  j["kind"] = kind_name(inst.kind);
  j["with_bias"] = inst.with_bias;
  j["epsilon"] = inst.epsilon;
  j["variable_index_map"] = inst.variable_index_map;
  j["predicted"] = {{"kind", kind_name(inst.predicted.kind)},
                    {"unit_error", inst.predicted.unit_error}};
  switch (inst.kind) {
    case ReductionKind::kSetCover:
      j["source"] = set_cover_to_json_obj(std::get<SetCoverInstance>(inst.source));
      break;
    case ReductionKind::kThreeSat:
      j["source"] = cnf_to_json_obj(std::get<CnfFormula>(inst.source));
      break;
    case ReductionKind::kMmcs:
      j["source"] = circuit_to_json_obj(std::get<MonotoneCircuit>(inst.source));
      break;
  }
  j["samples"] = json::parse(sample_set_to_json(inst.samples));
  return j.dump();
}

ReductionInstance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  const bool with_bias = j.at("with_bias").get<bool>();
  ReductionInstance inst;
  if (kind == "setcover") {
    inst = gen_setcover(set_cover_from_json_obj(j.at("source")), with_bias);
  } else if (kind == "3sat") {
    inst = gen_3sat(cnf_from_json_obj(j.at("source")), with_bias);
  } else if (kind == "mmcs") {
    inst = gen_mmcs(circuit_from_json_obj(j.at("source")), with_bias);
  } else {
    throw ValidationError("unknown reduction kind: " + kind);
  }
  return inst;
}

}  // namespace relu_exact
