#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcm/classical.hpp"
#include "qcm/dag.hpp"
#include "qcm/tensor.hpp"

namespace qcm {

enum class Half { In, Out };

struct Axis {
  std::string node;
  Half half = Half::In;
  int card = 1;
  friend bool operator<(const Axis& a, const Axis& b) {
    if (a.node != b.node) return a.node < b.node;
    return static_cast<int>(a.half) < static_cast<int>(b.half);
  }
  friend bool operator==(const Axis& a, const Axis& b) {
    return a.node == b.node && a.half == b.half && a.card == b.card;
  }
};

// Real tensor over split-node axes; canonical axis order is sorted by
// (node, half) with in < out, composite index big-endian.
struct ClassicalTensor {
  std::vector<Axis> axes;  // sorted
  std::vector<double> data;

  ClassicalTensor() : data{1.0} {}
  explicit ClassicalTensor(std::vector<Axis> axes);

  long size() const { return static_cast<long>(data.size()); }
  std::optional<int> find(const std::string& node, Half half) const;
  std::vector<int> dims() const;
};

// Classical process map over full split nodes (every node carries both
// halves). Entries are P(in-values | out-values).
struct Cpm {
  std::vector<std::pair<std::string, int>> nodes;  // sorted (name, card)
  ClassicalTensor tensor;

  static Cpm from_tensor(std::vector<std::pair<std::string, int>> nodes,
                         std::vector<double> data);
  int card(const std::string& node) const;
};

// Intervention at a split node: kernels[k][out * card + in] = P(k, out | in).
struct ClassicalInstrument {
  std::string node;
  int card = 1;
  std::vector<std::vector<double>> kernels;

  int outcomes() const { return static_cast<int>(kernels.size()); }
  void validate() const;  // completeness per input value
};

enum class InstrumentKind { Identity, NonDisturbing, MaxInformative, Breaking, MeasureRandomize };

ClassicalInstrument make_instrument(const std::string& node, int card, InstrumentKind kind,
                                    const std::vector<int>& g_in = {},
                                    const std::vector<int>& g_out = {}, int breaking_value = 0);

// Affinely spanning family of channel kernels (no outcomes): identity plus
// signed single-entry column perturbations.
std::vector<std::vector<double>> spanning_channel_family(int card);
// All deterministic function channels in -> out (convex-extreme channels).
std::vector<std::vector<double>> deterministic_channel_family(int card);

// Validity of Def-style process maps: unit total mass against every tuple from
// an affinely spanning channel family.
struct CpmValidity {
  bool ok = true;
  double worst = 0;
};
CpmValidity check_validity(const Cpm& k);

Dist outcome_probs(const Cpm& k, const std::map<std::string, ClassicalInstrument>& instruments);

// Contracts a channel kernel over one node's axes (both halves removed).
ClassicalTensor contract_channel(const ClassicalTensor& t, const std::string& node,
                                 const std::vector<double>& kernel);
// Identity-link contraction of a node (no intervention).
ClassicalTensor link_node(const ClassicalTensor& t, const std::string& node);
// Sums out one axis.
ClassicalTensor sum_axis(const ClassicalTensor& t, const std::string& node, Half half);

// do-marginal: sums the in-halves of s_do, link-contracts (or channels) the
// nodes outside keep and s_do, keeps everything else.
ClassicalTensor do_marginal(const Cpm& k, const NodeSet& s_do, const NodeSet& t_keep,
                            const std::map<std::string, std::vector<double>>& channels = {});

Cpm induct_ccm_to_csm(const Ccm& m);
Dist induct_cpm_to_dist(const Cpm& k);

enum class RelIndMode { Plain, Do, Broken, Settings };

// Slice-rank-1 tests for the relative-independence notions. The process map
// must cover exactly y u z u w u x (contract the rest beforehand).
bool rel_independence(const Cpm& k, RelIndMode mode, const NodeSet& y, const NodeSet& z,
                      const NodeSet& w, const NodeSet& x = {});

enum class CosStatement { COS1, COS2, COS3 };

// Operational statements evaluated over spanning instrument families; must
// agree with the corresponding rel_independence verdict.
bool operational_check(const Cpm& k, CosStatement statement, const NodeSet& y, const NodeSet& z,
                       const NodeSet& w, const NodeSet& x = {});

}  // namespace qcm
