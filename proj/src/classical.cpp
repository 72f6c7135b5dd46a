#include "qcm/classical.hpp"

#include <algorithm>
#include <cmath>

namespace qcm {

namespace {

struct VarCoder {
  explicit VarCoder(const std::vector<int>& cards) : coder(cards) {}
  IndexCoder coder;
};

std::vector<int> positions_of(const std::vector<std::string>& vars, const NodeSet& subset) {
  std::vector<int> pos;
  for (size_t i = 0; i < vars.size(); ++i)
    if (subset.count(vars[i])) pos.push_back(static_cast<int>(i));
  return pos;
}

long project(const std::vector<int>& digits, const std::vector<int>& pos,
             const std::vector<int>& cards) {
  long idx = 0;
  for (int p : pos) idx = idx * cards[p] + digits[p];
  return idx;
}

long subspace_size(const std::vector<int>& pos, const std::vector<int>& cards) {
  long n = 1;
  for (int p : pos) n *= cards[p];
  return n;
}

}  // namespace

Dist::Dist(std::vector<std::string> v, std::vector<int> c) : vars(std::move(v)), cards(std::move(c)) {
  if (vars.size() != cards.size()) throw DomainError("Dist: vars/cards mismatch");
  for (size_t i = 1; i < vars.size(); ++i)
    if (!(vars[i - 1] < vars[i])) throw DomainError("Dist: variables must be sorted and unique");
  long n = 1;
  for (int cd : cards) {
    if (cd < 1) throw DomainError("Dist: cardinality < 1");
    n *= cd;
  }
  p.assign(n, 0.0);
}

int Dist::index_of(const std::string& v) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == v) return static_cast<int>(i);
  throw DomainError("Dist: unknown variable " + v);
}

double Dist::sum() const {
  double s = 0;
  for (double x : p) s += x;
  return s;
}

void Dist::normalize_check(double eps) const {
  for (double x : p)
    if (x < -eps) throw DomainError("Dist: negative probability");
  if (std::abs(sum() - 1.0) > eps) throw DomainError("Dist: not normalized");
}

Dist Dist::marginal(const NodeSet& keep) const {
  std::vector<std::string> kv;
  std::vector<int> kc;
  for (size_t i = 0; i < vars.size(); ++i)
    if (keep.count(vars[i])) {
      kv.push_back(vars[i]);
      kc.push_back(cards[i]);
    }
  Dist out(kv, kc);
  IndexCoder full(cards);
  std::vector<int> pos = positions_of(vars, keep);
  std::vector<int> digits;
  for (long i = 0; i < static_cast<long>(p.size()); ++i) {
    full.decode(i, digits);
    out.p[project(digits, pos, cards)] += p[i];
  }
  return out;
}

void Ccm::validate() const {
  for (const auto& n : graph.nodes()) {
    if (!cards.count(n)) throw DomainError("Ccm: missing cardinality for " + n);
    auto it = cpts.find(n);
    if (it == cpts.end()) throw DomainError("Ccm: missing cpt for " + n);
    const Cpt& t = it->second;
    NodeSet pa = graph.parents(n);
    if (NodeSet(t.parents.begin(), t.parents.end()) != pa)
      throw DomainError("Ccm: cpt parents do not match graph parents at " + n);
    long pc = 1;
    for (const auto& pn : t.parents) pc *= cards.at(pn);
    if (static_cast<long>(t.table.size()) != pc * cards.at(n))
      throw DomainError("Ccm: cpt table size mismatch at " + n);
    for (long pi = 0; pi < pc; ++pi) {
      double s = 0;
      for (int c = 0; c < cards.at(n); ++c) {
        double v = t.table[pi * cards.at(n) + c];
        if (v < -tol::prob) throw DomainError("Ccm: negative cpt entry at " + n);
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) throw DomainError("Ccm: cpt slice not normalized at " + n);
    }
  }
}

namespace {

// Evaluates each node's conditional at a full assignment.
struct CcmEval {
  explicit CcmEval(const Ccm& m) : m(m) {
    vars.assign(m.graph.nodes().begin(), m.graph.nodes().end());
    for (const auto& v : vars) cards.push_back(m.cards.at(v));
    for (const auto& v : vars) {
      const Cpt& t = m.cpts.at(v);
      std::vector<int> pp;
      for (const auto& pn : t.parents) {
        for (size_t k = 0; k < vars.size(); ++k)
          if (vars[k] == pn) pp.push_back(static_cast<int>(k));
      }
      papos.push_back(pp);
    }
  }
  double factor(size_t vi, const std::vector<int>& digits) const {
    const Cpt& t = m.cpts.at(vars[vi]);
    long pidx = 0;
    for (int p : papos[vi]) pidx = pidx * cards[p] + digits[p];
    return t.table[pidx * cards[vi] + digits[vi]];
  }
  const Ccm& m;
  std::vector<std::string> vars;
  std::vector<int> cards;
  std::vector<std::vector<int>> papos;
};

}  // namespace

Dist joint_distribution(const Ccm& m) {
  m.validate();
  CcmEval ev(m);
  Dist out(ev.vars, ev.cards);
  IndexCoder full(ev.cards);
  std::vector<int> digits;
  for (long i = 0; i < out.size(); ++i) {
    full.decode(i, digits);
    double v = 1.0;
    for (size_t k = 0; k < ev.vars.size(); ++k) v *= ev.factor(k, digits);
    out.p[i] = v;
  }
  return out;
}

bool check_markov(const Dist& p, const Dag& g, double eps) {
  if (NodeSet(p.vars.begin(), p.vars.end()) != g.nodes())
    throw DomainError("check_markov: variables do not match graph nodes");
  // Build conditionals from p and compare the product with p.
  IndexCoder full(p.cards);
  std::vector<int> digits;
  // Per node: tables P(v | pa) with uniform fill at zero-probability parents.
  std::vector<std::vector<double>> cond(p.vars.size());
  for (size_t vi = 0; vi < p.vars.size(); ++vi) {
    NodeSet pa = g.parents(p.vars[vi]);
    NodeSet fam = pa;
    fam.insert(p.vars[vi]);
    Dist pf = p.marginal(fam);
    Dist pp = p.marginal(pa);
    // index of v within pf
    int vloc = pf.index_of(p.vars[vi]);
    std::vector<int> palocs;
    for (size_t k = 0; k < pf.vars.size(); ++k)
      if (static_cast<int>(k) != vloc) palocs.push_back(static_cast<int>(k));
    IndexCoder fc(pf.cards);
    cond[vi].assign(pf.p.size(), 0.0);
    std::vector<int> fd;
    for (long i = 0; i < pf.size(); ++i) {
      fc.decode(i, fd);
      long pidx = project(fd, palocs, pf.cards);
      double denom = pp.p.empty() ? 1.0 : pp.p[pidx];
      cond[vi][i] = denom > eps ? pf.p[i] / denom : 1.0 / p.cards[vi];
    }
  }
  // positions of each family within the full assignment
  double worst = 0;
  for (long i = 0; i < p.size(); ++i) {
    full.decode(i, digits);
    double v = 1.0;
    for (size_t vi = 0; vi < p.vars.size(); ++vi) {
      NodeSet pa = g.parents(p.vars[vi]);
      NodeSet fam = pa;
      fam.insert(p.vars[vi]);
      std::vector<int> pos = positions_of(p.vars, fam);
      long fidx = project(digits, pos, p.cards);
      v *= cond[vi][fidx];
    }
    worst = std::max(worst, std::abs(v - p.p[i]));
  }
  return worst <= std::max(eps, 1e-9);
}

DoFamily do_conditional(const Ccm& m, const NodeSet& s) {
  m.validate();
  for (const auto& n : s)
    if (!m.graph.nodes().count(n)) throw DomainError("do_conditional: unknown node " + n);
  CcmEval ev(m);
  DoFamily out;
  out.s = s;
  out.table = Dist(ev.vars, ev.cards);
  IndexCoder full(ev.cards);
  std::vector<int> digits;
  for (long i = 0; i < out.table.size(); ++i) {
    full.decode(i, digits);
    double v = 1.0;
    for (size_t k = 0; k < ev.vars.size(); ++k)
      if (!s.count(ev.vars[k])) v *= ev.factor(k, digits);
    out.table.p[i] = v;
  }
  return out;
}

double cmi_bits(const Dist& p, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  NodeSet yw = y, zw = z, yzw = y;
  yw.insert(w.begin(), w.end());
  zw.insert(w.begin(), w.end());
  yzw.insert(z.begin(), z.end());
  yzw.insert(w.begin(), w.end());
  Dist pyzw = p.marginal(yzw), pyw = p.marginal(yw), pzw = p.marginal(zw), pw = p.marginal(w);
  IndexCoder full(pyzw.cards);
  std::vector<int> posy = positions_of(pyzw.vars, yw);
  std::vector<int> posz = positions_of(pyzw.vars, zw);
  std::vector<int> posw = positions_of(pyzw.vars, w);
  std::vector<int> digits;
  double s = 0;
  for (long i = 0; i < pyzw.size(); ++i) {
    double pv = pyzw.p[i];
    if (pv <= 0) continue;
    full.decode(i, digits);
    double a = pyw.p[project(digits, posy, pyzw.cards)];
    double b = pzw.p[project(digits, posz, pyzw.cards)];
    double c = pw.p.empty() ? 1.0 : pw.p[project(digits, posw, pyzw.cards)];
    s += pv * std::log2(pv * c / (a * b));
  }
  return s;
}

bool cond_indep(const Dist& p, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  for (const auto& n : y)
    if (z.count(n) || w.count(n)) throw DomainError("cond_indep: sets overlap at " + n);
  for (const auto& n : z)
    if (w.count(n)) throw DomainError("cond_indep: sets overlap at " + n);
  NodeSet yw = y, zw = z, yzw = y;
  yw.insert(w.begin(), w.end());
  zw.insert(w.begin(), w.end());
  yzw.insert(z.begin(), z.end());
  yzw.insert(w.begin(), w.end());
  Dist pyzw = p.marginal(yzw), pyw = p.marginal(yw), pzw = p.marginal(zw), pw = p.marginal(w);
  IndexCoder full(pyzw.cards);
  std::vector<int> posy = positions_of(pyzw.vars, yw);
  std::vector<int> posz = positions_of(pyzw.vars, zw);
  std::vector<int> posw = positions_of(pyzw.vars, w);
  std::vector<int> digits;
  double worst = 0;
  for (long i = 0; i < pyzw.size(); ++i) {
    full.decode(i, digits);
    double a = pyw.p[project(digits, posy, pyzw.cards)];
    double b = pzw.p[project(digits, posz, pyzw.cards)];
    double c = pw.p.empty() ? 1.0 : pw.p[project(digits, posw, pyzw.cards)];
    worst = std::max(worst, std::abs(pyzw.p[i] * c - a * b));
  }
  bool by_product = worst <= 1e-9;
  double mi = cmi_bits(p, y, z, w);
  bool by_cmi = mi <= tol::cmi_classical;
  if (by_product != by_cmi && (worst > 1e-6 || mi > 1e-6))
    throw DomainError("cond_indep: product and CMI criteria disagree");
  return by_product;
}

FunctionalModel functional_dilation(const Ccm& m) {
  m.validate();
  FunctionalModel fm;
  for (const auto& v : m.graph.nodes()) {
    const Cpt& t = m.cpts.at(v);
    int card = m.cards.at(v);
    long pc = 1;
    for (const auto& pn : t.parents) pc *= m.cards.at(pn);
    long nfun = 1;
    for (long i = 0; i < pc; ++i) nfun *= card;
    std::vector<double> lp(nfun, 1.0);
    for (long f = 0; f < nfun; ++f) {
      long rem = f;
      // digit k of f (big-endian over parent configs) = f(pidx = k)
      std::vector<int> vals(pc);
      for (long k = pc - 1; k >= 0; --k) {
        vals[k] = static_cast<int>(rem % card);
        rem /= card;
      }
      for (long pi = 0; pi < pc; ++pi) lp[f] *= t.table[pi * card + vals[pi]];
    }
    fm.lambda_dist[v] = std::move(lp);
    fm.lambda_card[v] = static_cast<int>(nfun);
  }
  return fm;
}

namespace {

// marg[v][pidx * card + c] = P(f(pidx) = c) under the latent distribution.
std::map<std::string, std::vector<double>> function_marginals(const Ccm& m,
                                                              const FunctionalModel& fm) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& v : m.graph.nodes()) {
    const Cpt& t = m.cpts.at(v);
    int card = m.cards.at(v);
    long pc = 1;
    for (const auto& pn : t.parents) pc *= m.cards.at(pn);
    const auto& lp = fm.lambda_dist.at(v);
    std::vector<double> marg(pc * card, 0.0);
    for (size_t f = 0; f < lp.size(); ++f) {
      long rem = static_cast<long>(f);
      std::vector<int> vals(pc);
      for (long k = pc - 1; k >= 0; --k) {
        vals[k] = static_cast<int>(rem % card);
        rem /= card;
      }
      for (long pi = 0; pi < pc; ++pi) marg[pi * card + vals[pi]] += lp[f];
    }
    out[v] = std::move(marg);
  }
  return out;
}

}  // namespace

Dist evaluate_functional(const Ccm& m, const FunctionalModel& fm) {
  auto marg = function_marginals(m, fm);
  CcmEval ev(m);
  Dist out(ev.vars, ev.cards);
  IndexCoder full(ev.cards);
  std::vector<int> digits;
  for (long i = 0; i < out.size(); ++i) {
    full.decode(i, digits);
    double v = 1.0;
    for (size_t k = 0; k < ev.vars.size(); ++k) {
      long pidx = 0;
      for (int p : ev.papos[k]) pidx = pidx * ev.cards[p] + digits[p];
      v *= marg.at(ev.vars[k])[pidx * ev.cards[k] + digits[k]];
    }
    out.p[i] = v;
  }
  return out;
}

bool check_dilation(const Ccm& m, const std::map<std::string, std::vector<int>>& fnode,
                    const std::map<std::string, std::vector<double>>& lambda_dist) {
  CcmEval ev(m);
  Dist out(ev.vars, ev.cards);
  IndexCoder full(ev.cards);
  std::vector<int> digits;
  for (long i = 0; i < out.size(); ++i) {
    full.decode(i, digits);
    double v = 1.0;
    for (size_t k = 0; k < ev.vars.size(); ++k) {
      const auto& fv = fnode.at(ev.vars[k]);
      const auto& lp = lambda_dist.at(ev.vars[k]);
      long pc = 1;
      for (int p : ev.papos[k]) pc *= ev.cards[p];
      long pidx = 0;
      for (int p : ev.papos[k]) pidx = pidx * ev.cards[p] + digits[p];
      double s = 0;
      for (size_t lam = 0; lam < lp.size(); ++lam)
        if (fv[lam * pc + pidx] == digits[k]) s += lp[lam];
      v *= s;
    }
    out.p[i] = v;
  }
  Dist ref = joint_distribution(m);
  double worst = 0;
  for (long i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out.p[i] - ref.p[i]));
  return worst <= 1e-9;
}

namespace {

struct SliceView {
  // Dense marginal over `sel` variables of a do-family table restricted by the
  // positions/values of the free (do) variables; all tables share var order.
  std::vector<double> values;
  long size = 0;
};

}  // namespace

RuleCheck classical_rule_check(const Ccm& m, int rule, const NodeSet& x, const NodeSet& y,
                               const NodeSet& z, const NodeSet& w) {
  if (rule < 1 || rule > 3) throw DomainError("rule must be 1, 2 or 3");
  RuleCheck out;
  NodeSet xw = x;
  xw.insert(w.begin(), w.end());
  Dag mut = rule == 1   ? mutilate_incoming(m.graph, x)
            : rule == 2 ? mutilate_outgoing(mutilate_incoming(m.graph, x), z)
                        : mutilate_rule3(m.graph, x, z, w);
  out.antecedent = d_separated(mut, y, z, xw);

  // Numeric consequent. q1 = do(X); q2 = do(X u Z).
  DoFamily q1 = do_conditional(m, x);
  NodeSet xz = x;
  xz.insert(z.begin(), z.end());
  DoFamily q2 = do_conditional(m, xz);

  NodeSet xyzw = x;
  xyzw.insert(y.begin(), y.end());
  xyzw.insert(z.begin(), z.end());
  xyzw.insert(w.begin(), w.end());
  Dist t1 = q1.table.marginal(xyzw);
  Dist t2 = q2.table.marginal(xyzw);
  NodeSet xws = x, xzws = x, xyws = x;
  xws.insert(w.begin(), w.end());
  xzws.insert(z.begin(), z.end());
  xzws.insert(w.begin(), w.end());
  xyws.insert(y.begin(), y.end());
  xyws.insert(w.begin(), w.end());

  Dist q1_zw = t1.marginal(xzws);
  Dist q1_w = t1.marginal(xws);
  Dist q1_yw = t1.marginal(xyws);
  // do(X u Z) family: x and z are both slice axes, so marginals keep them.
  Dist q2_yzw = t2;
  Dist q2_w = t2.marginal(xzws);

  IndexCoder full(t1.cards);
  std::vector<int> digits;
  double worst = 0;
  const double pos_eps = 1e-9;
  auto idx_in = [&](const Dist& d, const std::vector<int>& dg) {
    std::vector<int> pp = positions_of(t1.vars, NodeSet(d.vars.begin(), d.vars.end()));
    return project(dg, pp, t1.cards);
  };
  for (long i = 0; i < t1.size(); ++i) {
    full.decode(i, digits);
    if (rule == 1) {
      // q1(y,z,w|x) q1(w|x) == q1(y,w|x) q1(z,w|x), gated on q1(z,w|x) > 0
      double a = t1.p[i];
      double zw_ = q1_zw.p[idx_in(q1_zw, digits)];
      double w_ = q1_w.p[idx_in(q1_w, digits)];
      double yw_ = q1_yw.p[idx_in(q1_yw, digits)];
      if (zw_ > pos_eps) worst = std::max(worst, std::abs(a * w_ - yw_ * zw_));
    } else if (rule == 2) {
      // q2(y,w|x,z)/q2(w|x,z) == q1(y,z,w|x)/q1(z,w|x)
      double lhs_n = q2_yzw.p[i];  // after marginalizing nothing: y,z,w jointly
      double lhs_d = q2_w.p[idx_in(q2_w, digits)];
      double rhs_n = t1.p[i];
      double rhs_d = q1_zw.p[idx_in(q1_zw, digits)];
      if (lhs_d > pos_eps && rhs_d > pos_eps)
        worst = std::max(worst, std::abs(lhs_n * rhs_d - rhs_n * lhs_d));
    } else {
      // q2(y,w|x,z)/q2(w|x,z) == q1(y,w|x)/q1(w|x)
      double lhs_n = q2_yzw.p[i];
      double lhs_d = q2_w.p[idx_in(q2_w, digits)];
      double rhs_n = q1_yw.p[idx_in(q1_yw, digits)];
      double rhs_d = q1_w.p[idx_in(q1_w, digits)];
      if (lhs_d > pos_eps && rhs_d > pos_eps)
        worst = std::max(worst, std::abs(lhs_n * rhs_d - rhs_n * lhs_d));
    }
  }
  out.max_violation = worst;
  out.consequent = worst <= 1e-9;
  return out;
}

}  // namespace qcm
