#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qcm/algebra.hpp"
#include "qcm/dag.hpp"
#include "qcm/quantum.hpp"
#include "qcm/tensor.hpp"

namespace qcm {

struct WireRef {
  std::string name;
  int dim = 1;
  bool is_node = false;  // broken-node wire (in/out segment inferred by position)
};

// Unitary gate. The matrix's row index is big-endian over the out refs in the
// order given, the column index likewise over the in refs.
struct Gate {
  Matrix unitary;
  std::vector<WireRef> in;
  std::vector<WireRef> out;
  void validate() const;  // unitarity, dimensions
};

// Unitary circuit with broken wires (nodes), initial product states on input
// wires, and traced outputs.
struct BrokenCircuit {
  std::vector<Gate> gates;
  std::set<std::string> broken;             // node names
  std::map<std::string, Matrix> inputs;     // input wire name -> density matrix
  std::set<std::string> traced;             // output wire names discarded

  void validate() const;                    // plumbing rules
  std::vector<int> gate_order() const;      // topological order of gates
};

enum class ContractMode { NodesOnly, NodesLambdasFs };

// Link-trace contraction of the gate operators over unbroken internal wires.
// NodesOnly also feeds the input states and traces the discarded outputs;
// NodesLambdasFs keeps inputs and traced outputs as additional nodes.
ProcessOperator contract(const BrokenCircuit& c, ContractMode mode = ContractMode::NodesOnly);

// Channel operator of the gate reduced to a subset of its outputs: lives on
// the kept outputs' carrier wires and the duals of all inputs.
LabeledOperator reduced_cj(const Gate& g, const std::set<std::string>& keep_outputs);
// Full channel operator of the gate.
LabeledOperator full_cj(const Gate& g);

// True iff no input in `a` can influence the outputs in `d`:
// Tr_{other outputs}[rho_U] acts trivially on the duals of `a`.
bool no_influence(const Gate& g, const std::set<std::string>& a, const std::set<std::string>& d,
                  double eps = tol::num);

// A single unitary with product-state inputs: nodes R (in and out of U),
// inputs P (lambda wires) and sinks S (F wires).
struct UnitaryProcessWithInputs {
  Gate u;                                   // node names appear on both sides
  std::map<std::string, Matrix> lambda_states;
  std::map<std::string, std::string> lambda_of;  // node -> its private noise wire
  NodeSet node_names() const;
  NodeSet lambda_names() const;
  NodeSet sink_names() const;
  // rho_U multiplied by the input states, as an operator over all node wires.
  ProcessOperator full_process() const;
  // marginal over the R nodes with no interventions at lambdas and sinks
  ProcessOperator marginal_nodes() const;
};

// Composes the circuit's gates over internal wires only, recovering the global
// unitary from lambda/node-out wires to node-in/traced wires.
UnitaryProcessWithInputs unitary_process_from_circuit(const BrokenCircuit& c);

// Directed graph of direct-cause relations between the nodes, lambdas and
// sinks of a unitary process with inputs.
Digraph causal_structure(const UnitaryProcessWithInputs& u, double eps = tol::num);

struct FactorizationReport {
  bool preconditions = true;
  bool commutation = true;
  bool product = true;
  double worst_precondition = 0;
  double worst_commutator = 0;
  double product_error = 0;
  std::vector<LabeledOperator> marginals;
  bool holds() const { return preconditions && commutation && product; }
};

// Checks the factorization of a unitary channel from declared no-influence
// sets: outputs grouped into blocks b_i with assigned input sets s_i.
FactorizationReport verify_factorization(const Gate& g,
                                         const std::vector<std::set<std::string>>& output_groups,
                                         const std::vector<std::set<std::string>>& influence_sets);

struct CompatibilityReport {
  bool marginal_recovered = false;
  bool no_influence_ok = false;
  double marginal_error = 0;
  std::vector<std::string> violated;  // "src->dst" no-influence failures
  bool ok() const { return marginal_recovered && no_influence_ok; }
};

// Checks that u realizes sigma as its node marginal and satisfies the
// no-influence conditions dictated by the DAG.
CompatibilityReport check_compatibility(const ProcessOperator& sigma, const Dag& g,
                                        const UnitaryProcessWithInputs& u);

struct DilationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds a staircase circuit realizing a Markov process operator: one gate per
// node with a fresh noise input, per-gate discarded outputs, constructed from
// the block decompositions of the node channels. The contraction of the result
// is verified against sigma before returning.
BrokenCircuit dilate_markov(const ProcessOperator& sigma, const Dag& g,
                            double eps = tol::dilate);

// Random controlled-copy staircase over qudit nodes where every noise input is
// a direct cause of exactly one node (the carry transports node history in the
// computational basis). edge_density in [0,100] controls how often a node
// actually depends on its predecessor. Used by the marginalization fuzz tests.
BrokenCircuit random_staircase_circuit(const std::vector<int>& node_dims, int edge_density,
                                       Rng& rng);

}  // namespace qcm
