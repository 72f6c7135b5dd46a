#pragma once

#include "qcm/dag.hpp"
#include "qcm/quantum.hpp"

namespace qcm {

struct PairDiagnostic {
  std::string from, to;
  double norm = 0;      // relative signalling norm
  bool arrow = false;
  bool borderline = false;  // within 10x of the decision threshold
};

struct DiscoveryReport {
  Digraph induced_graph;
  bool is_dag = false;
  bool is_markov = false;
  std::map<std::string, LabeledOperator> channels;  // present iff is_dag && is_markov
  std::vector<PairDiagnostic> diagnostics;          // lexicographic pair order
  double product_error = 0;
};

// Arrow j -> i iff tracing j's output from the single-node reduction of sigma
// changes it: n(n-1) pairwise signalling checks.
Digraph simple_induced_graph(const ProcessOperator& sigma, double eps = tol::sig);

DiscoveryReport discover(const ProcessOperator& sigma, double eps = tol::sig);

}  // namespace qcm
