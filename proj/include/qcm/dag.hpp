#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace qcm {

using NodeSet = std::set<std::string>;

// Directed acyclic graph over named nodes. Acyclicity is checked on
// construction; node names are opaque strings ordered lexicographically.
class Dag {
 public:
  Dag() = default;
  Dag(NodeSet nodes, std::set<std::pair<std::string, std::string>> edges);

  const NodeSet& nodes() const { return nodes_; }
  const std::set<std::pair<std::string, std::string>>& edges() const { return edges_; }
  bool has_edge(const std::string& a, const std::string& b) const {
    return edges_.count({a, b}) > 0;
  }

  NodeSet parents(const std::string& x) const;
  NodeSet children(const std::string& x) const;
  NodeSet ancestors(const std::string& x) const;
  NodeSet descendants(const std::string& x) const;
  NodeSet nondescendants(const std::string& x) const;  // excludes x itself

  std::vector<std::string> topological_order() const;

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  void require_node(const std::string& x) const;
  NodeSet nodes_;
  std::set<std::pair<std::string, std::string>> edges_;
};

// A directed graph that may contain cycles (used by discovery).
struct Digraph {
  NodeSet nodes;
  std::set<std::pair<std::string, std::string>> edges;
  bool is_acyclic() const;
};

bool d_separated(const Dag& g, const NodeSet& y, const NodeSet& z, const NodeSet& w);

// Brute-force oracle: enumerates every simple undirected path and applies the
// blocking clauses one path at a time. Test reference for d_separated.
bool d_separated_bruteforce(const Dag& g, const NodeSet& y, const NodeSet& z, const NodeSet& w);

Dag mutilate_incoming(const Dag& g, const NodeSet& x);
Dag mutilate_outgoing(const Dag& g, const NodeSet& z);
// Removes arrows into x and into z(w), where z(w) is the set of z-nodes that
// are not ancestors of w in the incoming-mutilated graph.
Dag mutilate_rule3(const Dag& g, const NodeSet& x, const NodeSet& z, const NodeSet& w);
NodeSet rule3_zw(const Dag& g, const NodeSet& x, const NodeSet& z, const NodeSet& w);

// Partition certificate for d-separation: R split into sides and a childless
// remainder, W split by side, with the allowed parent-child pattern below.
struct SrPartition {
  NodeSet r_y, r_z, r_c;
  NodeSet w_y, w_z;
};

bool sr_valid(const Dag& g, const NodeSet& y, const NodeSet& z, const SrPartition& p);
std::optional<SrPartition> sr_partition(const Dag& g, const NodeSet& y, const NodeSet& z,
                                        const NodeSet& w);

}  // namespace qcm
