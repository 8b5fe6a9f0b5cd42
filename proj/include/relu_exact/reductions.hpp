#pragma once

#include "relu_exact/model.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace relu_exact {

struct SetCoverInstance {
  int universe_size = 0;                  // elements 1..N
  std::vector<std::vector<int>> subsets;  // each a subset of 1..N
  int k = 1;                              // target cover size

  void validate() const;
};

struct CnfFormula {
  int num_vars = 0;
  std::vector<std::array<int, 3>> clauses;  // signed 1-based literals

  void validate() const;
};

struct Gate {
  enum class Type { kOr, kAnd };
  Type type = Type::kOr;
  std::vector<int> inputs;
  int output = 0;
};

struct MonotoneCircuit {
  int num_wires = 0;  // |C|; wires are ids 0..num_wires-1
  std::vector<int> input_wires;
  int output_wire = 0;
  std::vector<Gate> gates;

  void validate() const;
  // 0 for inputs, 1 + max input height for gate outputs.
  std::vector<int> wire_heights() const;
  int depth() const;
};

enum class ReductionKind { kSetCover, kThreeSat, kMmcs };

struct PredictedOptimum {
  ReductionKind kind = ReductionKind::kSetCover;
  // Set cover: unit_error * (minimum cover size). MMCS: unit_error *
  // opt_MMCS. 3SAT: 0 iff satisfiable, positive otherwise (unit_error 0).
  double unit_error = 0.0;
};

struct ReductionInstance {
  ReductionKind kind = ReductionKind::kSetCover;
  SampleSet samples;
  double epsilon = 0.0;
  bool with_bias = false;
  std::map<std::string, int> variable_index_map;
  PredictedOptimum predicted;
  std::variant<SetCoverInstance, CnfFormula, MonotoneCircuit> source;
};

// --- generators -----------------------------------------------------------

// Single-ReLU instance in dimension M+2 with eps = 0.01/m^2 over the total
// sample count m = N+M+k+2. The bias-enabled variant uses the same samples;
// the flag records the intended training mode.
ReductionInstance gen_setcover(const SetCoverInstance& sc, bool with_bias);

// Two-ReLU instance (alphas +1,+1); realizable exactly when the formula is
// satisfiable. with_bias appends the dummy coordinate and five samples that
// pin both biases at zero.
ReductionInstance gen_3sat(const CnfFormula& f, bool with_bias);

// Single-ReLU instance over wire variables with eps = 1/(10|C|)^(depth+1);
// optimal squared error is opt_MMCS * eps^2. with_bias appends one dummy
// coordinate and three samples pinning the bias.
ReductionInstance gen_mmcs(const MonotoneCircuit& c, bool with_bias);

// --- witnesses ------------------------------------------------------------

// cover: indices into sc.subsets whose union is the universe.
ReluNet setcover_witness(const SetCoverInstance& sc, const std::vector<int>& cover);

ReluNet threesat_witness(const CnfFormula& f, const std::vector<bool>& assignment,
                         bool with_bias = false);

// true_inputs: input wire ids evaluated TRUE; must satisfy the circuit.
ReluNet mmcs_witness(const MonotoneCircuit& c, const std::vector<int>& true_inputs,
                     bool with_bias = false);

// --- exhaustive oracles ----------------------------------------------------

int brute_force_setcover(const SetCoverInstance& sc);
std::optional<std::vector<bool>> brute_force_sat(const CnfFormula& f);
int brute_force_mmcs(const MonotoneCircuit& c);
bool eval_circuit(const MonotoneCircuit& c, const std::vector<bool>& input_values);

// --- diagnostics ------------------------------------------------------------

struct HeightBoundViolation {
  int wire = 0;
  int height = 0;
  double weight = 0.0;
  double bound = 0.0;
};

// Evaluates the circuit under phi (input true iff w_i >= w_eps) and reports
// every FALSE wire whose weight exceeds (2|C|)^h * (eps + sqrt(delta));
// bias-gadget instances use the 3*sqrt(delta) form.
std::vector<HeightBoundViolation> height_bound_check(const MonotoneCircuit& c,
                                                     const ReluNet& net,
                                                     double delta,
                                                     bool with_bias = false);

// --- serialization ----------------------------------------------------------

std::string set_cover_to_json(const SetCoverInstance& sc);
SetCoverInstance set_cover_from_json(const std::string& text);
std::string cnf_to_json(const CnfFormula& f);
CnfFormula cnf_from_json(const std::string& text);
std::string circuit_to_json(const MonotoneCircuit& c);
MonotoneCircuit circuit_from_json(const std::string& text);
std::string instance_to_json(const ReductionInstance& inst);
ReductionInstance instance_from_json(const std::string& text);

}  // namespace relu_exact
