#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcm/dag.hpp"
#include "qcm/rng.hpp"
#include "qcm/splitnode.hpp"
#include "qcm/tensor.hpp"

namespace qcm {

struct QNode {
  std::string name;
  int dim = 1;
  friend bool operator<(const QNode& a, const QNode& b) { return a.name < b.name; }
};

// Process operator over quantum nodes: PSD operator on all in/out wires that
// returns unit probability against every tuple of local channels.
struct ProcessOperator {
  std::vector<QNode> nodes;  // sorted
  LabeledOperator op;

  static ProcessOperator over(std::vector<QNode> nodes, LabeledOperator op);
  int dim_of(const std::string& node) const;
  NodeSet node_names() const;
  long total_dim() const { return op.dim(); }
  // sigma / Tr[sigma * prod links] so that the result has unit trace.
  LabeledOperator normalized() const;
};

// Quantum instrument at one node: outcome -> intervention operator on the
// node's wires; the outcome sum must represent a trace preserving map.
struct Instrument {
  std::string node;
  int dim = 1;
  std::vector<LabeledOperator> outcomes;
  void validate() const;
};

Instrument projective_instrument(const std::string& node, const Matrix& basis);  // measure & reprepare
Instrument identity_instrument(const std::string& node, int dim);

struct ValidityReport {
  bool psd = false;
  bool nontrivial = false;       // unit probability on the all-links tuple
  bool trace_rule = false;       // Tr over in-wires = identity on out-wires
  bool affine_basis = true;      // full check over the affine channel basis
  double psd_violation = 0;
  double trace_rule_violation = 0;
  double affine_violation = 0;
  bool ok() const { return psd && nontrivial && trace_rule && affine_basis; }
};

// full=true additionally runs the exact multi-affine channel-basis check
// (exponential in node count; intended for desk-scale operators).
ValidityReport validate(const ProcessOperator& sigma, bool full = true);

// Affine basis of intervention operators for trace-preserving channels at a
// node of dimension d: the identity link plus Hermitian perturbations with
// vanishing partial trace over the node's out wire.
std::vector<LabeledOperator> channel_basis(const std::string& node, int dim);

Dist outcome_probabilities(const ProcessOperator& sigma,
                           const std::map<std::string, Instrument>& instruments);

// Marginal process over `keep`; dropped nodes are contracted with the supplied
// intervention operator or with the identity link.
ProcessOperator marginal_process(const ProcessOperator& sigma, const NodeSet& keep,
                                 const std::map<std::string, LabeledOperator>& interventions = {});

// Trace over the in-wires of s; the result lives on the remaining wires plus
// the out-wires of s.
LabeledOperator do_conditional(const ProcessOperator& sigma, const NodeSet& s);

struct Qcm {
  Dag graph;
  std::map<std::string, int> dims;
  std::map<std::string, LabeledOperator> channels;  // node -> channel operator

  void validate() const;  // channel shapes, pairwise commutation
};

ProcessOperator process_from_model(const Qcm& m);

struct MarkovReport {
  bool markov = false;
  bool triviality = false;        // extracted channels act trivially off Pa-outs
  bool commutation = false;
  bool product = false;
  double worst_triviality = 0;
  double worst_commutator = 0;
  double product_error = 0;
  std::map<std::string, LabeledOperator> channels;
};

MarkovReport check_markov(const ProcessOperator& sigma, const Dag& g, double eps = tol::num);

// Diagonal inductions between classical process maps and process operators.
ProcessOperator embed_classical(const Cpm& k);
Cpm extract_classical(const ProcessOperator& sigma, double eps = tol::num);

// Random model generation. Channels into multi-child parents depend on those
// parents' outputs only through the computational basis so that the channel
// operators commute by construction.
Qcm random_qcm(const Dag& g, const std::map<std::string, int>& dims, Rng& rng);
// Random local trace-preserving intervention operators at the given nodes.
std::map<std::string, LabeledOperator> random_interventions(const ProcessOperator& sigma,
                                                            const NodeSet& nodes, Rng& rng);

Ccm random_ccm(const Dag& g, const std::map<std::string, int>& cards, Rng& rng);

}  // namespace qcm
