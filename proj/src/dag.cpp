#include "qcm/dag.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "qcm/tensor.hpp"

namespace qcm {

Dag::Dag(NodeSet nodes, std::set<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (const auto& [a, b] : edges_) {
    if (!nodes_.count(a) || !nodes_.count(b))
      throw DomainError("edge references unknown node: " + a + "->" + b);
    if (a == b) throw DomainError("self-loop at " + a);
  }
  topological_order();  // throws on cycles
}

void Dag::require_node(const std::string& x) const {
  if (!nodes_.count(x)) throw DomainError("unknown node: " + x);
}

NodeSet Dag::parents(const std::string& x) const {
  require_node(x);
  NodeSet out;
  for (const auto& [a, b] : edges_)
    if (b == x) out.insert(a);
  return out;
}

NodeSet Dag::children(const std::string& x) const {
  require_node(x);
  NodeSet out;
  for (const auto& [a, b] : edges_)
    if (a == x) out.insert(b);
  return out;
}

NodeSet Dag::ancestors(const std::string& x) const {
  require_node(x);
  NodeSet out;
  std::vector<std::string> stack{x};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    for (const auto& p : parents(cur))
      if (out.insert(p).second) stack.push_back(p);
  }
  out.erase(x);
  return out;
}

NodeSet Dag::descendants(const std::string& x) const {
  require_node(x);
  NodeSet out;
  std::vector<std::string> stack{x};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    for (const auto& c : children(cur))
      if (out.insert(c).second) stack.push_back(c);
  }
  out.erase(x);
  return out;
}

NodeSet Dag::nondescendants(const std::string& x) const {
  NodeSet de = descendants(x);
  NodeSet out;
  for (const auto& n : nodes_)
    if (n != x && !de.count(n)) out.insert(n);
  return out;
}

std::vector<std::string> Dag::topological_order() const {
  std::map<std::string, int> indeg;
  for (const auto& n : nodes_) indeg[n] = 0;
  for (const auto& [a, b] : edges_) indeg[b]++;
  std::set<std::string> ready;
  for (const auto& [n, d] : indeg)
    if (d == 0) ready.insert(n);
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (const auto& [a, b] : edges_)
      if (a == n && --indeg[b] == 0) ready.insert(b);
  }
  if (order.size() != nodes_.size()) throw DomainError("graph contains a directed cycle");
  return order;
}

bool Digraph::is_acyclic() const {
  std::map<std::string, int> indeg;
  for (const auto& n : nodes) indeg[n] = 0;
  for (const auto& [a, b] : edges) indeg[b]++;
  std::set<std::string> ready;
  for (const auto& [n, d] : indeg)
    if (d == 0) ready.insert(n);
  size_t seen = 0;
  while (!ready.empty()) {
    auto n = *ready.begin();
    ready.erase(ready.begin());
    ++seen;
    for (const auto& [a, b] : edges)
      if (a == n && --indeg[b] == 0) ready.insert(b);
  }
  return seen == nodes.size();
}

namespace {

void check_disjoint(const Dag& g, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  for (const auto& n : y) {
    if (!g.nodes().count(n)) throw DomainError("unknown node: " + n);
    if (z.count(n) || w.count(n)) throw DomainError("sets overlap at " + n);
  }
  for (const auto& n : z) {
    if (!g.nodes().count(n)) throw DomainError("unknown node: " + n);
    if (w.count(n)) throw DomainError("sets overlap at " + n);
  }
  for (const auto& n : w)
    if (!g.nodes().count(n)) throw DomainError("unknown node: " + n);
}

}  // namespace

bool d_separated(const Dag& g, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  check_disjoint(g, y, z, w);
  if (y.empty() || z.empty()) return true;  // vacuous
  // Reachability on the moral trail automaton: states (node, direction of
  // entry), direction up = against an arrow, down = along an arrow.
  // Standard Bayes-ball rules with conditioning set w.
  NodeSet w_anc = w;  // w plus its ancestors: used for collider openings
  for (const auto& n : w)
    for (const auto& a : g.ancestors(n)) w_anc.insert(a);

  // visited[(node, dir)]: dir 0 = entered moving up (towards parents),
  // 1 = entered moving down (towards children).
  std::set<std::pair<std::string, int>> visited;
  std::vector<std::pair<std::string, int>> stack;
  for (const auto& s : y) stack.push_back({s, 0});  // leaving the source upwards
  for (const auto& s : y) stack.push_back({s, 1});
  while (!stack.empty()) {
    auto [n, dir] = stack.back();
    stack.pop_back();
    if (!visited.insert({n, dir}).second) continue;
    if (z.count(n) && !w.count(n)) return false;
    if (dir == 0) {
      // trail arrives at n from a child (moving up); n not a collider here
      if (!w.count(n)) {
        for (const auto& p : g.parents(n)) stack.push_back({p, 0});
        for (const auto& c : g.children(n)) stack.push_back({c, 1});
      }
    } else {
      // trail arrives at n from a parent (moving down)
      if (!w.count(n)) {
        for (const auto& c : g.children(n)) stack.push_back({c, 1});
      }
      if (w_anc.count(n)) {
        // collider at n is open iff n or a descendant is conditioned on
        for (const auto& p : g.parents(n)) stack.push_back({p, 0});
      }
    }
  }
  return true;
}

namespace {

// All simple undirected paths from y-set to z-set, as sequences of nodes with
// edge directions.
struct PathStep {
  std::string node;
  bool forward = false;  // arrow from previous node into this one
};

bool path_blocked(const Dag& g, const std::vector<PathStep>& path, const NodeSet& w) {
  for (size_t i = 1; i + 1 < path.size(); ++i) {
    bool in_fwd = path[i].forward;        // prev -> cur
    bool out_fwd = path[i + 1].forward;   // cur -> next
    const std::string& mid = path[i].node;
    bool collider = in_fwd && !out_fwd;
    if (collider) {
      bool opened = w.count(mid) > 0;
      if (!opened)
        for (const auto& d : g.descendants(mid))
          if (w.count(d)) opened = true;
      if (!opened) return true;
    } else {
      if (w.count(mid)) return true;
    }
  }
  return false;
}

}  // namespace

bool d_separated_bruteforce(const Dag& g, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  check_disjoint(g, y, z, w);
  if (y.empty() || z.empty()) return true;
  // DFS over simple undirected paths starting in y
  std::vector<PathStep> path;
  NodeSet onpath;
  bool separated = true;
  std::function<void(const std::string&)> dfs = [&](const std::string& cur) {
    if (!separated) return;
    if (z.count(cur) && path.size() > 1) {
      if (!path_blocked(g, path, w)) separated = false;
      return;  // extending past a z endpoint not needed: prefix suffices
    }
    for (const auto& c : g.children(cur)) {
      if (onpath.count(c)) continue;
      path.push_back({c, true});
      onpath.insert(c);
      dfs(c);
      onpath.erase(c);
      path.pop_back();
    }
    for (const auto& p : g.parents(cur)) {
      if (onpath.count(p)) continue;
      path.push_back({p, false});
      onpath.insert(p);
      dfs(p);
      onpath.erase(p);
      path.pop_back();
    }
  };
  for (const auto& s : y) {
    path = {{s, false}};
    onpath = {s};
    dfs(s);
    if (!separated) return false;
  }
  return true;
}

Dag mutilate_incoming(const Dag& g, const NodeSet& x) {
  for (const auto& n : x)
    if (!g.nodes().count(n)) throw DomainError("unknown node: " + n);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& e : g.edges())
    if (!x.count(e.second)) edges.insert(e);
  return Dag(g.nodes(), edges);
}

Dag mutilate_outgoing(const Dag& g, const NodeSet& z) {
  for (const auto& n : z)
    if (!g.nodes().count(n)) throw DomainError("unknown node: " + n);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& e : g.edges())
    if (!z.count(e.first)) edges.insert(e);
  return Dag(g.nodes(), edges);
}

NodeSet rule3_zw(const Dag& g, const NodeSet& x, const NodeSet& z, const NodeSet& w) {
  Dag gx = mutilate_incoming(g, x);
  NodeSet zw;
  for (const auto& n : z) {
    bool anc_of_w = false;
    for (const auto& d : gx.descendants(n))
      if (w.count(d)) anc_of_w = true;
    if (!anc_of_w) zw.insert(n);
  }
  return zw;
}

Dag mutilate_rule3(const Dag& g, const NodeSet& x, const NodeSet& z, const NodeSet& w) {
  NodeSet zw = rule3_zw(g, x, z, w);
  NodeSet cut = x;
  for (const auto& n : zw) cut.insert(n);
  return mutilate_incoming(g, cut);
}

namespace {

enum class Side { Y, Z, RY, RZ, RC, WY, WZ };

bool arrow_allowed(Side a, Side b) {
  if (a == b) return true;                    // within-set arrows unconstrained
  if (a == Side::WY || a == Side::WZ) return true;  // conditioned nodes' children free
  switch (a) {
    case Side::Y:
      return b == Side::RY || b == Side::WY || b == Side::RC;
    case Side::RY:
      return b == Side::Y || b == Side::WY || b == Side::RC;
    case Side::Z:
      return b == Side::RZ || b == Side::WZ || b == Side::RC;
    case Side::RZ:
      return b == Side::Z || b == Side::WZ || b == Side::RC;
    case Side::RC:
      return false;
    default:
      return false;
  }
}

}  // namespace

bool sr_valid(const Dag& g, const NodeSet& y, const NodeSet& z, const SrPartition& p) {
  std::map<std::string, Side> side;
  for (const auto& n : y) side[n] = Side::Y;
  for (const auto& n : z) side[n] = Side::Z;
  for (const auto& n : p.r_y) side[n] = Side::RY;
  for (const auto& n : p.r_z) side[n] = Side::RZ;
  for (const auto& n : p.r_c) side[n] = Side::RC;
  for (const auto& n : p.w_y) side[n] = Side::WY;
  for (const auto& n : p.w_z) side[n] = Side::WZ;
  if (side.size() != g.nodes().size()) return false;
  for (const auto& [a, b] : g.edges())
    if (!arrow_allowed(side.at(a), side.at(b))) return false;
  return true;
}

std::optional<SrPartition> sr_partition(const Dag& g, const NodeSet& y, const NodeSet& z,
                                        const NodeSet& w) {
  check_disjoint(g, y, z, w);
  NodeSet r;
  for (const auto& n : g.nodes())
    if (!y.count(n) && !z.count(n) && !w.count(n)) r.insert(n);

  auto touches = [&](const std::string& n, const NodeSet& side) {
    for (const auto& s : side) {
      if (g.has_edge(n, s) || g.has_edge(s, n)) return true;
    }
    return false;
  };

  // Greedy fixed point: pull R-nodes adjacent to a side into that side.
  {
    SrPartition p;
    NodeSet ys = y, zs = z;
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& n : r) {
        if (p.r_y.count(n) || p.r_z.count(n)) continue;
        if (touches(n, ys)) {
          p.r_y.insert(n);
          ys.insert(n);
          grew = true;
        } else if (touches(n, zs)) {
          p.r_z.insert(n);
          zs.insert(n);
          grew = true;
        }
      }
    }
    for (const auto& n : r)
      if (!p.r_y.count(n) && !p.r_z.count(n)) p.r_c.insert(n);
    for (const auto& n : w) {
      bool from_y = false, from_z = false;
      for (const auto& s : ys)
        if (g.has_edge(s, n)) from_y = true;
      for (const auto& s : zs)
        if (g.has_edge(s, n)) from_z = true;
      if (from_z && !from_y)
        p.w_z.insert(n);
      else
        p.w_y.insert(n);  // ties and orphans default to the Y side
    }
    if (sr_valid(g, y, z, p)) return p;
  }

  // Exhaustive fallback over 3^|R| * 2^|W| assignments.
  std::vector<std::string> rv(r.begin(), r.end()), wv(w.begin(), w.end());
  long rn = 1, wn = 1;
  for (size_t i = 0; i < rv.size(); ++i) rn *= 3;
  for (size_t i = 0; i < wv.size(); ++i) wn *= 2;
  for (long ri = 0; ri < rn; ++ri) {
    SrPartition base;
    long t = ri;
    for (const auto& n : rv) {
      int c = static_cast<int>(t % 3);
      t /= 3;
      (c == 0 ? base.r_y : c == 1 ? base.r_z : base.r_c).insert(n);
    }
    for (long wi = 0; wi < wn; ++wi) {
      SrPartition p = base;
      long u = wi;
      for (const auto& n : wv) {
        ((u % 2) == 0 ? p.w_y : p.w_z).insert(n);
        u /= 2;
      }
      if (sr_valid(g, y, z, p)) return p;
    }
  }
  return std::nullopt;
}

}  // namespace qcm
