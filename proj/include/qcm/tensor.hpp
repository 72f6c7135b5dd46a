#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcm/tol.hpp"

namespace qcm {

using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

struct SignatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Port { In, Out };

inline const char* to_string(Port p) { return p == Port::In ? "in" : "out"; }

// One tensor factor: a named wire. A quantum node A of dimension d contributes
// two wires, (A, in, d) carrying H_A and (A, out, d) carrying the dual space.
struct Wire {
  std::string node;
  Port port = Port::In;
  int dim = 1;

  friend bool operator<(const Wire& a, const Wire& b) {
    if (a.node != b.node) return a.node < b.node;
    return static_cast<int>(a.port) < static_cast<int>(b.port);
  }
  friend bool operator==(const Wire& a, const Wire& b) {
    return a.node == b.node && a.port == b.port && a.dim == b.dim;
  }
  std::string label() const { return node + ":" + to_string(port); }
};

// Ordered list of wires in canonical form: sorted by (node, port) with in < out,
// no duplicate (node, port) pairs. The composite index over the factors is
// big-endian in this order.
class SpaceSig {
 public:
  SpaceSig() = default;
  explicit SpaceSig(std::vector<Wire> wires);

  static SpaceSig merge(const SpaceSig& a, const SpaceSig& b);  // union, dims must agree

  const std::vector<Wire>& wires() const { return wires_; }
  int size() const { return static_cast<int>(wires_.size()); }
  long total_dim() const;
  bool empty() const { return wires_.empty(); }

  std::optional<int> find(const std::string& node, Port port) const;
  bool contains(const Wire& w) const;
  bool contains_all(const SpaceSig& other) const;

  friend bool operator==(const SpaceSig& a, const SpaceSig& b) { return a.wires_ == b.wires_; }

 private:
  std::vector<Wire> wires_;
};

// Decomposes/recomposes big-endian composite indices over a dimension list.
struct IndexCoder {
  explicit IndexCoder(const std::vector<int>& dims);
  long encode(const std::vector<int>& digits) const;
  void decode(long index, std::vector<int>& digits) const;
  long total = 1;
  std::vector<long> strides;
  std::vector<int> dims;
};

std::vector<int> wire_dims(const SpaceSig& sig);

// A complex square matrix bound to a canonical wire signature. The universal
// carrier for states, channel operators, process operators and interventions.
struct LabeledOperator {
  SpaceSig sig;
  Matrix mat;

  LabeledOperator() : mat(Matrix::Ones(1, 1)) {}
  LabeledOperator(SpaceSig s, Matrix m);

  // Builds from factors listed in arbitrary order; permutes into canonical order.
  static LabeledOperator from_factors(const std::vector<Wire>& factors, const Matrix& m);
  static LabeledOperator scalar(Scalar v);
  static LabeledOperator identity(const SpaceSig& sig);

  long dim() const { return mat.rows(); }
  Scalar trace() const { return mat.trace(); }
  double norm() const { return mat.norm(); }

  bool is_hermitian(double eps = tol::herm) const;
  bool is_psd(double eps = tol::herm) const;
};

// --- tensor-space algebra -------------------------------------------------

// Pads `a` with identity on wires of `target` it does not carry and permutes
// to target's canonical order.
LabeledOperator align(const LabeledOperator& a, const SpaceSig& target);

// Kronecker product over disjoint signatures, canonically ordered.
LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b);

// Product after aligning both operands onto the merged signature.
LabeledOperator multiply(const LabeledOperator& a, const LabeledOperator& b);

LabeledOperator add(const LabeledOperator& a, const LabeledOperator& b);
LabeledOperator scale(const LabeledOperator& a, Scalar s);

double commutator_norm(const LabeledOperator& a, const LabeledOperator& b);

LabeledOperator partial_trace(const LabeledOperator& a, const std::vector<Wire>& wires);
LabeledOperator partial_trace_nodes(const LabeledOperator& a, const std::set<std::string>& nodes);

// Contracts `op` (whose wires must all appear in acc) against acc:
//   R[x,x'] = sum_{n,n'} acc[(x,n),(x',n')] * op[n',n].
// This is Tr_op-wires[acc * op] and implements the outcome/marginal trace rule.
LabeledOperator contract_with(const LabeledOperator& acc, const LabeledOperator& op);

// Link operator for node `node`: the operator on {node:in, node:out} that
// represents "no intervention" (identity channel in transpose convention).
LabeledOperator identity_link(const std::string& node, int dim);

// Link trace over named nodes: Tr_nodes[a * prod identity_link]. Each node must
// contribute both its in and out wire to a.sig.
LabeledOperator link_trace(const LabeledOperator& a, const std::set<std::string>& nodes);

// Composition primitive: closes wire pairs between a producer P (carrying the
// in-port wire of each closed name) and a consumer Q (carrying the out-port
// wire). Equivalent to link_trace(multiply(P,Q), names) without materializing
// the union space:
//   R[(x,y),(x',y')] = sum_{a,a'} P[(x,a),(x',a')] Q[(y,a),(y',a')].
LabeledOperator link_compose(const LabeledOperator& p, const LabeledOperator& q,
                             const std::set<std::string>& names);

// --- channel operators ----------------------------------------------------

// Channel operator of a CP map given by Kraus matrices. Rows of each Kraus
// matrix are indexed big-endian over the canonically sorted out_wires, columns
// over the sorted in_wires (which represent the duals of the map's input).
LabeledOperator choi_of_kraus(const std::vector<Matrix>& kraus, std::vector<Wire> in_wires,
                              std::vector<Wire> out_wires, bool require_tp = true);

// E(rho) = Tr_in/out-pair[ link * chan * rho ]; chan on {out-wires, dual-in-wires}.
LabeledOperator apply_channel(const LabeledOperator& chan, const LabeledOperator& state);

// Intervention operator at a node: transpose-convention representation of the
// CP map with the given Kraus matrices, living on {node:in, node:out}.
LabeledOperator intervention_from_kraus(const std::string& node, int dim,
                                        const std::vector<Matrix>& kraus);
LabeledOperator intervention_identity(const std::string& node, int dim);

// --- spectra, star product, entropies --------------------------------------

// Orthonormal columns spanning the support (eigenvalues > eps in magnitude).
Matrix support_basis(const Matrix& herm, double eps = tol::eig);

// Support-restricted log; zero on the kernel.
Matrix support_log(const Matrix& psd, double eps = tol::eig);

// exp(log a + log b) with logs restricted to supports, evaluated on the
// intersection of the supports. Commuting inputs give the ordinary product.
LabeledOperator star(const LabeledOperator& a, const LabeledOperator& b);

// Von Neumann entropy in bits of a PSD matrix (not necessarily normalized;
// caller normalizes when a density operator is intended).
double entropy_bits(const Matrix& psd);

// I(Y:Z|W) in bits over a wire partition of rho_hat.sig. The three sets must be
// disjoint and jointly cover the signature.
double qcmi(const LabeledOperator& rho_hat, const std::vector<Wire>& y,
            const std::vector<Wire>& z, const std::vector<Wire>& w);

// Matrix of `op` with tensor factors permuted into the given order, which must
// list every wire of op.sig exactly once.
Matrix arranged(const LabeledOperator& op, const std::vector<Wire>& order);

// Wires of the given nodes/ports within an operator signature.
std::vector<Wire> wires_of_nodes(const SpaceSig& sig, const std::set<std::string>& nodes);
std::vector<Wire> wires_of_nodes_port(const SpaceSig& sig, const std::set<std::string>& nodes,
                                      Port port);

}  // namespace qcm
