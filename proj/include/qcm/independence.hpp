#pragma once

#include <optional>

#include "qcm/circuits.hpp"
#include "qcm/dag.hpp"
#include "qcm/quantum.hpp"
#include "qcm/tensor.hpp"

namespace qcm {

enum class IndMode { Plain, Do, Broken };

struct IndependenceResult {
  bool independent = false;
  double qcmi_bits = 0;
  double star_residual = 0;  // worst relative residual of the star identity
};

// Strong relative independence via conditional mutual information on the
// normalized do-conditional operator, cross-checked on sampled local
// interventions against the star-product identity. The process operator must
// cover exactly y u z u w u x (contract other nodes first).
IndependenceResult quantum_independence(const ProcessOperator& sigma, IndMode mode,
                                        const NodeSet& y, const NodeSet& z, const NodeSet& w,
                                        const NodeSet& x = {}, int star_samples = 3,
                                        std::uint64_t seed = tol::default_seed);

// Rule antecedents: d-separation on the corresponding mutilated graph.
bool graphical_antecedent(const Dag& g, int rule, const NodeSet& x, const NodeSet& y,
                          const NodeSet& z, const NodeSet& w);

// Witness route for independence from settings: for every member of the
// spanning intervention family at z, least-squares solve for the second factor
// against the supplied eta and check the residual.
bool settings_independence_witness(const ProcessOperator& sigma_yzwx, const NodeSet& y,
                                   const NodeSet& z, const NodeSet& w, const NodeSet& x,
                                   const LabeledOperator& eta, double* residual = nullptr);

// DAG route: builds eta and each xi from the Markov channels along an SR
// partition of the rule-3 mutilation and verifies the product identity.
struct SettingsDagResult {
  bool holds = false;
  bool antecedent = false;
  double worst_residual = 0;
};
SettingsDagResult settings_independence_dag(const Qcm& m, const NodeSet& y, const NodeSet& z,
                                            const NodeSet& w, const NodeSet& x,
                                            const std::map<std::string, LabeledOperator>& tau_r);

struct TheoremReport {
  bool antecedent = false;
  bool holds = true;   // semantic condition on every sample
  int samples = 0;
  double max_qcmi = 0;
  double max_residual = 0;
};

// Samples random local interventions on the remaining nodes and asserts the
// relevant semantic condition of the chosen rule.
TheoremReport theorem_verify(const Qcm& m, int rule, const NodeSet& x, const NodeSet& y,
                             const NodeSet& z, const NodeSet& w, int n_samples,
                             std::uint64_t seed = tol::default_seed);

// Extension moving the conditioning information to an external locus: inputs
// of w-nodes are routed out, entangled halves feed the outputs of w, x (and
// optionally z). The factors of the E space are listed in `e_wires` order.
struct ELocusExtension {
  ProcessOperator base;
  NodeSet w, x, z;
  bool include_z_out = false;
  std::vector<Wire> e_wires;  // ordering of the E factors
  long e_dim = 1;
  double weight = 1;  // 1 / prod of entangled-pair dims
};

ELocusExtension e_locus_extend(const ProcessOperator& sigma, const NodeSet& w, const NodeSet& x,
                               bool include_z_out = false, const NodeSet& z = {});

enum class QosStatement { QOS1, QOS2, QOS3 };

// Operational statements: outcome independences conditioned on a von Neumann
// measurement (given basis columns over the E space) at the external locus.
bool qos_check(const ProcessOperator& sigma, QosStatement statement, const NodeSet& y,
               const NodeSet& z, const NodeSet& w, const NodeSet& x, const Matrix& e_basis);

// Informationally complete measure-and-reprepare instrument.
Instrument tomographic_instrument(const std::string& node, int dim);

struct SoundnessReport {
  bool separated = false;
  bool sound = true;            // independence held on every sample
  double max_qcmi = 0;
  bool counterexample_found = false;  // completeness search (when not separated)
  double counterexample_cmi = 0;
  int counterexample_seed_index = -1;
};

// Soundness sweep when d-separated; randomized completeness search over
// classical-embedded Markov models otherwise.
SoundnessReport d_sep_soundness(const Qcm& m, const NodeSet& y, const NodeSet& z, const NodeSet& w,
                                int n_samples, int search_budget = 500,
                                std::uint64_t seed = tol::default_seed);

}  // namespace qcm
