#include "qcm/discovery.hpp"

#include <algorithm>
#include <cmath>

namespace qcm {

namespace {

std::vector<PairDiagnostic> pair_checks(const ProcessOperator& sigma, double eps) {
  std::vector<PairDiagnostic> out;
  for (const auto& ni : sigma.nodes) {
    std::vector<Wire> other_ins;
    for (const auto& m : sigma.nodes)
      if (m.name != ni.name) other_ins.push_back({m.name, Port::In, m.dim});
    LabeledOperator rho = partial_trace(sigma.op, other_ins);
    double scale = std::max(1.0, rho.norm());
    for (const auto& nj : sigma.nodes) {
      if (nj.name == ni.name) continue;
      Wire wout{nj.name, Port::Out, nj.dim};
      LabeledOperator tr = partial_trace(rho, {wout});
      tr.mat /= nj.dim;
      LabeledOperator back = align(tr, rho.sig);
      PairDiagnostic d;
      d.from = nj.name;
      d.to = ni.name;
      d.norm = (back.mat - rho.mat).norm() / scale;
      d.arrow = d.norm > eps;
      d.borderline = !d.arrow ? d.norm > eps / 10 : d.norm < eps * 10;
      out.push_back(d);
    }
  }
  std::sort(out.begin(), out.end(), [](const PairDiagnostic& a, const PairDiagnostic& b) {
    if (a.from != b.from) return a.from < b.from;
    return a.to < b.to;
  });
  return out;
}

}  // namespace

Digraph simple_induced_graph(const ProcessOperator& sigma, double eps) {
  Digraph g;
  for (const auto& n : sigma.nodes) g.nodes.insert(n.name);
  for (const auto& d : pair_checks(sigma, eps))
    if (d.arrow) g.edges.insert({d.from, d.to});
  return g;
}

DiscoveryReport discover(const ProcessOperator& sigma, double eps) {
  DiscoveryReport rep;
  rep.diagnostics = pair_checks(sigma, eps);
  for (const auto& n : sigma.nodes) rep.induced_graph.nodes.insert(n.name);
  for (const auto& d : rep.diagnostics)
    if (d.arrow) rep.induced_graph.edges.insert({d.from, d.to});
  rep.is_dag = rep.induced_graph.is_acyclic();
  if (!rep.is_dag) return rep;
  Dag g(rep.induced_graph.nodes, rep.induced_graph.edges);
  MarkovReport mk = check_markov(sigma, g);
  rep.is_markov = mk.markov;
  rep.product_error = mk.product_error;
  if (mk.markov) rep.channels = std::move(mk.channels);
  return rep;
}

}  // namespace qcm
