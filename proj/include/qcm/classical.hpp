#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcm/dag.hpp"
#include "qcm/tensor.hpp"

namespace qcm {

// Dense joint distribution over named finite variables. Storage is big-endian
// row-major over the (sorted) variable order.
struct Dist {
  std::vector<std::string> vars;  // sorted
  std::vector<int> cards;
  std::vector<double> p;

  Dist() = default;
  Dist(std::vector<std::string> vars, std::vector<int> cards);

  long size() const { return static_cast<long>(p.size()); }
  int index_of(const std::string& v) const;
  double sum() const;
  void normalize_check(double eps = tol::prob) const;

  // Marginal onto a subset of variables (kept in sorted order).
  Dist marginal(const NodeSet& keep) const;
};

// Conditional probability table P(child | parents).
struct Cpt {
  std::string child;
  std::vector<std::string> parents;  // sorted
  // table[pidx * card_child + c] = P(child=c | parents=pidx), pidx big-endian
  // over sorted parents.
  std::vector<double> table;
};

struct Ccm {
  Dag graph;
  std::map<std::string, int> cards;
  std::map<std::string, Cpt> cpts;

  void validate() const;  // normalization, parent lists match graph
};

Dist joint_distribution(const Ccm& m);

// True iff p factorizes over g with conditionals computed from p itself;
// zero-probability parent configurations contribute a uniform factor.
bool check_markov(const Dist& p, const Dag& g, double eps = tol::prob);

// Truncated factorization: the family P(T | do(S=s)) stored as one tensor over
// all variables; each S-slice is a normalized distribution over T.
struct DoFamily {
  NodeSet s;
  Dist table;  // over all variables; slice at S=s gives P(T | do(S=s))
};
DoFamily do_conditional(const Ccm& m, const NodeSet& s);

// P(Y,Z|W=w) = P(Y|W=w) P(Z|W=w) at every w with positive probability, and the
// CMI criterion; the two must agree.
bool cond_indep(const Dist& p, const NodeSet& y, const NodeSet& z, const NodeSet& w);
double cmi_bits(const Dist& p, const NodeSet& y, const NodeSet& z, const NodeSet& w);

// Canonical functional dilation: per node, the latent variable ranges over all
// functions from parent configurations to node values.
struct FunctionalModel {
  // For node v: lambda_card[v] = card^`#parent configs`; lambda index decodes
  // big-endian over parent configurations to a function value table.
  std::map<std::string, std::vector<double>> lambda_dist;
  std::map<std::string, int> lambda_card;
};
FunctionalModel functional_dilation(const Ccm& m);
Dist evaluate_functional(const Ccm& m, const FunctionalModel& fm);
// Accepts a user-supplied dilation given as explicit function tables
// fnode[v][lambda * #pa-configs + pidx] = value, with latent distributions.
bool check_dilation(const Ccm& m,
                    const std::map<std::string, std::vector<int>>& fnode,
                    const std::map<std::string, std::vector<double>>& lambda_dist);

struct RuleCheck {
  bool antecedent = false;
  bool consequent = false;
  double max_violation = 0;  // largest deviation in the consequent equalities
};
// Do-calculus rules on a classical causal model: antecedent via graph
// mutilation + d-separation, consequent by direct numeric evaluation over all
// values with positive conditioning probability.
RuleCheck classical_rule_check(const Ccm& m, int rule, const NodeSet& x, const NodeSet& y,
                               const NodeSet& z, const NodeSet& w);

}  // namespace qcm
