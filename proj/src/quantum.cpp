#include "qcm/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qcm {

ProcessOperator ProcessOperator::over(std::vector<QNode> nodes, LabeledOperator op) {
  std::sort(nodes.begin(), nodes.end());
  for (const auto& n : nodes) {
    auto pin = op.sig.find(n.name, Port::In);
    auto pout = op.sig.find(n.name, Port::Out);
    if (!pin || !pout)
      throw SignatureError("process operator: node " + n.name + " lacks in/out wires");
    if (op.sig.wires()[*pin].dim != n.dim || op.sig.wires()[*pout].dim != n.dim)
      throw DimensionError("process operator: wire dims disagree at " + n.name);
  }
  if (op.sig.size() != static_cast<int>(2 * nodes.size()))
    throw SignatureError("process operator: stray wires in signature");
  ProcessOperator p;
  p.nodes = std::move(nodes);
  p.op = std::move(op);
  return p;
}

int ProcessOperator::dim_of(const std::string& node) const {
  for (const auto& n : nodes)
    if (n.name == node) return n.dim;
  throw DomainError("process operator: unknown node " + node);
}

NodeSet ProcessOperator::node_names() const {
  NodeSet s;
  for (const auto& n : nodes) s.insert(n.name);
  return s;
}

LabeledOperator ProcessOperator::normalized() const {
  LabeledOperator r = op;
  Scalar t = r.trace();
  if (std::abs(t) < 1e-300) throw DomainError("process operator has zero trace");
  r.mat /= t;
  return r;
}

void Instrument::validate() const {
  if (outcomes.empty()) throw DomainError("instrument with no outcomes");
  LabeledOperator total = outcomes.front();
  for (size_t i = 1; i < outcomes.size(); ++i) total = add(total, outcomes[i]);
  for (const auto& o : outcomes)
    if (!o.is_psd(1e-7)) throw DomainError("instrument outcome not PSD at " + node);
  LabeledOperator tr = partial_trace(total, {Wire{node, Port::Out, dim}});
  Matrix id = Matrix::Identity(dim, dim);
  if ((tr.mat - id).norm() > tol::tp * dim)
    throw DomainError("instrument not complete at " + node);
}

Instrument projective_instrument(const std::string& node, const Matrix& basis) {
  Instrument ins;
  ins.node = node;
  ins.dim = static_cast<int>(basis.rows());
  if (basis.cols() != basis.rows()) throw DimensionError("projective basis must be square");
  if ((basis.adjoint() * basis - Matrix::Identity(basis.rows(), basis.cols())).norm() > 1e-8)
    throw DomainError("projective basis not orthonormal");
  for (int k = 0; k < basis.cols(); ++k) {
    Matrix p = basis.col(k) * basis.col(k).adjoint();
    ins.outcomes.push_back(intervention_from_kraus(node, ins.dim, {p}));
  }
  ins.validate();
  return ins;
}

Instrument identity_instrument(const std::string& node, int dim) {
  Instrument ins;
  ins.node = node;
  ins.dim = dim;
  ins.outcomes.push_back(identity_link(node, dim));
  return ins;
}

std::vector<LabeledOperator> channel_basis(const std::string& node, int dim) {
  std::vector<LabeledOperator> fam;
  LabeledOperator id = identity_link(node, dim);
  fam.push_back(id);
  long d2 = static_cast<long>(dim) * dim;
  Wire win{node, Port::In, dim}, wout{node, Port::Out, dim};
  SpaceSig sig({win, wout});
  std::vector<Matrix> herm;
  auto push = [&](Matrix h) {
    // project onto zero-partial-trace over the out wire
    LabeledOperator lh(sig, h);
    LabeledOperator tr = partial_trace(lh, {wout});
    LabeledOperator corr = align(LabeledOperator(SpaceSig({win}), tr.mat / dim), sig);
    Matrix delta = lh.mat - corr.mat;
    // Gram-Schmidt against what we have
    for (const auto& b : herm) delta -= ((b.adjoint() * delta).trace()) * b;
    if (delta.norm() > 1e-10) {
      delta /= delta.norm();
      herm.push_back(delta);
    }
  };
  for (long a = 0; a < d2; ++a)
    for (long b = a; b < d2; ++b) {
      Matrix h = Matrix::Zero(d2, d2);
      if (a == b) {
        h(a, a) = 1.0;
        push(h);
      } else {
        h(a, b) = h(b, a) = 1.0 / std::sqrt(2.0);
        push(h);
        h.setZero();
        h(a, b) = Scalar(0, 1.0 / std::sqrt(2.0));
        h(b, a) = Scalar(0, -1.0 / std::sqrt(2.0));
        push(h);
      }
    }
  for (const auto& dlt : herm) {
    LabeledOperator member = id;
    member.mat += dlt;
    fam.push_back(member);
  }
  return fam;
}

ValidityReport validate(const ProcessOperator& sigma, bool full) {
  ValidityReport rep;
  double scale = std::max(1.0, sigma.op.norm());
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es((sigma.op.mat + sigma.op.mat.adjoint()) / 2.0,
                                             Eigen::EigenvaluesOnly);
    double herm_err = (sigma.op.mat - sigma.op.mat.adjoint()).norm();
    double minev = es.eigenvalues().minCoeff();
    rep.psd_violation = std::max(herm_err, std::max(0.0, -minev)) / scale;
    rep.psd = rep.psd_violation <= tol::herm * 10;
  }
  {
    LabeledOperator acc = sigma.op;
    for (const auto& n : sigma.nodes) acc = contract_with(acc, identity_link(n.name, n.dim));
    rep.nontrivial = std::abs(acc.mat(0, 0) - Scalar(1)) <= 1e-7;
  }
  {
    std::vector<Wire> ins;
    for (const auto& n : sigma.nodes) ins.push_back({n.name, Port::In, n.dim});
    LabeledOperator tr = partial_trace(sigma.op, ins);
    Matrix id = Matrix::Identity(tr.mat.rows(), tr.mat.cols());
    rep.trace_rule_violation = (tr.mat - id).norm() / std::max(1.0, id.norm());
    rep.trace_rule = rep.trace_rule_violation <= tol::tp * 100;
  }
  if (full) {
    std::vector<std::vector<LabeledOperator>> fams;
    for (const auto& n : sigma.nodes) fams.push_back(channel_basis(n.name, n.dim));
    double worst = 0;
    std::function<void(size_t, const LabeledOperator&)> rec = [&](size_t k,
                                                                  const LabeledOperator& acc) {
      if (k == fams.size()) {
        worst = std::max(worst, std::abs(acc.mat(0, 0) - Scalar(1)));
        return;
      }
      for (const auto& member : fams[k]) rec(k + 1, contract_with(acc, member));
    };
    rec(0, sigma.op);
    rep.affine_violation = worst;
    rep.affine_basis = worst <= 1e-6;
  }
  return rep;
}

Dist outcome_probabilities(const ProcessOperator& sigma,
                           const std::map<std::string, Instrument>& instruments) {
  std::map<std::string, Instrument> ins = instruments;
  for (const auto& n : sigma.nodes)
    if (!ins.count(n.name)) ins[n.name] = identity_instrument(n.name, n.dim);
  for (const auto& [name, i] : ins) {
    if (i.dim != sigma.dim_of(name)) throw DimensionError("instrument dim mismatch at " + name);
  }
  std::vector<std::string> vars;
  std::vector<int> cards;
  for (const auto& n : sigma.nodes) {
    vars.push_back(n.name);
    cards.push_back(std::max<int>(1, static_cast<int>(ins.at(n.name).outcomes.size())));
  }
  Dist out(vars, cards);
  // shared-prefix recursion over nodes
  std::function<void(size_t, const LabeledOperator&, long)> rec =
      [&](size_t k, const LabeledOperator& acc, long base) {
        if (k == vars.size()) {
          out.p[base] = acc.mat(0, 0).real();
          return;
        }
        const Instrument& i = ins.at(vars[k]);
        long stride = 1;
        for (size_t j = k + 1; j < vars.size(); ++j) stride *= cards[j];
        for (size_t o = 0; o < i.outcomes.size(); ++o)
          rec(k + 1, contract_with(acc, i.outcomes[o]), base + static_cast<long>(o) * stride);
      };
  rec(0, sigma.op, 0);
  return out;
}

ProcessOperator marginal_process(const ProcessOperator& sigma, const NodeSet& keep,
                                 const std::map<std::string, LabeledOperator>& interventions) {
  for (const auto& n : keep)
    if (!sigma.node_names().count(n)) throw DomainError("marginal: unknown node " + n);
  LabeledOperator acc = sigma.op;
  std::vector<QNode> kept;
  for (const auto& n : sigma.nodes) {
    if (keep.count(n.name)) {
      kept.push_back(n);
      continue;
    }
    auto it = interventions.find(n.name);
    if (it == interventions.end()) {
      acc = contract_with(acc, identity_link(n.name, n.dim));
    } else {
      // supplied intervention must be trace preserving
      LabeledOperator tr = partial_trace(it->second, {Wire{n.name, Port::Out, n.dim}});
      if ((tr.mat - Matrix::Identity(n.dim, n.dim)).norm() > 1e-7 * n.dim)
        throw DomainError("marginal: supplied intervention at " + n.name + " is not TP");
      acc = contract_with(acc, it->second);
    }
  }
  return ProcessOperator::over(kept, acc);
}

LabeledOperator do_conditional(const ProcessOperator& sigma, const NodeSet& s) {
  std::vector<Wire> ins;
  for (const auto& n : s) {
    if (!sigma.node_names().count(n)) throw DomainError("do_conditional: unknown node " + n);
    ins.push_back({n, Port::In, sigma.dim_of(n)});
  }
  return partial_trace(sigma.op, ins);
}

void Qcm::validate() const {
  for (const auto& n : graph.nodes()) {
    if (!dims.count(n)) throw DomainError("qcm: missing dim for " + n);
    auto it = channels.find(n);
    if (it == channels.end()) throw DomainError("qcm: missing channel for " + n);
    const LabeledOperator& ch = it->second;
    NodeSet pa = graph.parents(n);
    auto pin = ch.sig.find(n, Port::In);
    if (!pin) throw SignatureError("qcm: channel for " + n + " lacks its in wire");
    for (const auto& w : ch.sig.wires()) {
      bool ok = (w.node == n && w.port == Port::In) || (pa.count(w.node) && w.port == Port::Out);
      if (!ok) throw SignatureError("qcm: channel for " + n + " has stray wire " + w.label());
      if (dims.count(w.node) && w.dim != dims.at(w.node))
        throw DimensionError("qcm: channel wire dim mismatch at " + w.label());
    }
    // trace preservation
    LabeledOperator tr = partial_trace(ch, {Wire{n, Port::In, dims.at(n)}});
    Matrix id = Matrix::Identity(tr.mat.rows(), tr.mat.cols());
    if ((tr.mat - id).norm() > tol::tp * 100 * std::max(1.0, id.norm()))
      throw DomainError("qcm: channel for " + n + " is not trace preserving");
  }
  // pairwise commutation
  for (auto i = channels.begin(); i != channels.end(); ++i)
    for (auto j = std::next(i); j != channels.end(); ++j) {
      double cn = commutator_norm(i->second, j->second);
      double scale = std::max(1.0, i->second.norm() * j->second.norm());
      if (cn > tol::num * scale)
        throw DomainError("qcm: channels for " + i->first + " and " + j->first +
                          " do not commute (norm " + std::to_string(cn) + ")");
    }
}

ProcessOperator process_from_model(const Qcm& m) {
  m.validate();
  std::vector<Wire> all;
  std::vector<QNode> nodes;
  for (const auto& n : m.graph.nodes()) {
    int d = m.dims.at(n);
    nodes.push_back({n, d});
    all.push_back({n, Port::In, d});
    all.push_back({n, Port::Out, d});
  }
  SpaceSig full(all);
  LabeledOperator acc = LabeledOperator::identity(full);
  for (const auto& [n, ch] : m.channels) acc = multiply(acc, ch);
  acc = align(acc, full);
  return ProcessOperator::over(nodes, acc);
}

MarkovReport check_markov(const ProcessOperator& sigma, const Dag& g, double eps) {
  if (sigma.node_names() != g.nodes())
    throw DomainError("check_markov: graph nodes do not match process nodes");
  MarkovReport rep;
  rep.triviality = true;
  std::map<std::string, LabeledOperator> reduced;  // channels over {n:in, Pa-outs}
  for (const auto& n : sigma.nodes) {
    std::vector<Wire> other_ins;
    for (const auto& m : sigma.nodes)
      if (m.name != n.name) other_ins.push_back({m.name, Port::In, m.dim});
    LabeledOperator rho = partial_trace(sigma.op, other_ins);
    double scale = std::max(1.0, rho.norm());
    NodeSet pa = g.parents(n.name);
    // triviality off the parents' out wires
    for (const auto& m : sigma.nodes) {
      if (pa.count(m.name)) continue;
      Wire wout{m.name, Port::Out, m.dim};
      LabeledOperator tr = partial_trace(rho, {wout});
      tr.mat /= m.dim;
      LabeledOperator back = align(tr, rho.sig);
      double v = (back.mat - rho.mat).norm() / scale;
      rep.worst_triviality = std::max(rep.worst_triviality, v);
      if (v > eps) rep.triviality = false;
    }
    // reduce to {n:in} u Pa-outs
    std::vector<Wire> drop;
    long denom = 1;
    for (const auto& m : sigma.nodes)
      if (!pa.count(m.name)) {
        drop.push_back({m.name, Port::Out, m.dim});
        denom *= m.dim;
      }
    LabeledOperator ch = partial_trace(rho, drop);
    ch.mat /= static_cast<double>(denom);
    reduced[n.name] = ch;
  }
  rep.commutation = true;
  for (auto i = reduced.begin(); i != reduced.end(); ++i)
    for (auto j = std::next(i); j != reduced.end(); ++j) {
      double cn = commutator_norm(i->second, j->second) /
                  std::max(1.0, i->second.norm() * j->second.norm());
      rep.worst_commutator = std::max(rep.worst_commutator, cn);
      if (cn > eps) rep.commutation = false;
    }
  {
    LabeledOperator acc = LabeledOperator::identity(sigma.op.sig);
    for (const auto& [n, ch] : reduced) acc = multiply(acc, ch);
    acc = align(acc, sigma.op.sig);
    rep.product_error = (acc.mat - sigma.op.mat).norm() / std::max(1.0, sigma.op.norm());
    rep.product = rep.product_error <= eps;
  }
  rep.markov = rep.triviality && rep.commutation && rep.product;
  if (rep.markov) rep.channels = std::move(reduced);
  return rep;
}

ProcessOperator embed_classical(const Cpm& k) {
  std::vector<QNode> nodes;
  std::vector<Wire> all;
  for (const auto& [n, c] : k.nodes) {
    nodes.push_back({n, c});
    all.push_back({n, Port::In, c});
    all.push_back({n, Port::Out, c});
  }
  SpaceSig sig(all);
  long d = sig.total_dim();
  Matrix m = Matrix::Zero(d, d);
  // Axis order of the Cpm tensor (sorted nodes, in<out) matches the canonical
  // wire order, so the flat indices coincide.
  for (long i = 0; i < d; ++i) m(i, i) = k.tensor.data[i];
  return ProcessOperator::over(nodes, LabeledOperator(sig, std::move(m)));
}

Cpm extract_classical(const ProcessOperator& sigma, double eps) {
  long d = sigma.op.dim();
  double off = 0;
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c)
      if (r != c) off = std::max(off, std::abs(sigma.op.mat(r, c)));
  if (off > eps)
    throw DomainError("extract_classical: operator is not diagonal in the product basis");
  std::vector<std::pair<std::string, int>> nodes;
  for (const auto& n : sigma.nodes) nodes.push_back({n.name, n.dim});
  std::vector<double> data(d);
  for (long i = 0; i < d; ++i) data[i] = std::max(0.0, sigma.op.mat(i, i).real());
  return Cpm::from_tensor(std::move(nodes), std::move(data));
}

Qcm random_qcm(const Dag& g, const std::map<std::string, int>& dims, Rng& rng) {
  Qcm m;
  m.graph = g;
  m.dims = dims;
  for (const auto& n : g.nodes()) {
    NodeSet pa = g.parents(n);
    int dn = dims.at(n);
    std::vector<Wire> diag_wires, free_wires;
    for (const auto& p : pa) {
      if (g.children(p).size() >= 2)
        diag_wires.push_back({p, Port::Out, dims.at(p)});
      else
        free_wires.push_back({p, Port::Out, dims.at(p)});
    }
    SpaceSig dsig(diag_wires), fsig(free_wires);
    long dd = dsig.total_dim(), df = fsig.total_dim();
    // sum over diagonal-parent basis assignments of CJ(E^m) (x) |m><m|
    LabeledOperator acc;
    bool first = true;
    for (long mval = 0; mval < dd; ++mval) {
      auto ks = rng.kraus_channel(static_cast<int>(df), dn, dn);
      std::vector<Wire> inw = free_wires;
      LabeledOperator cj = choi_of_kraus(ks, inw, {Wire{n, Port::In, dn}});
      if (!diag_wires.empty()) {
        Matrix proj = Matrix::Zero(dd, dd);
        proj(mval, mval) = 1.0;
        LabeledOperator pd(dsig, proj);
        cj = tensor(cj, pd);
      }
      acc = first ? cj : add(acc, cj);
      first = false;
    }
    m.channels[n] = acc;
  }
  return m;
}

std::map<std::string, LabeledOperator> random_interventions(const ProcessOperator& sigma,
                                                            const NodeSet& nodes, Rng& rng) {
  std::map<std::string, LabeledOperator> out;
  for (const auto& n : nodes) {
    int d = sigma.dim_of(n);
    out[n] = intervention_from_kraus(n, d, rng.kraus_channel(d, d));
  }
  return out;
}

Ccm random_ccm(const Dag& g, const std::map<std::string, int>& cards, Rng& rng) {
  Ccm m;
  m.graph = g;
  m.cards = cards;
  for (const auto& n : g.nodes()) {
    Cpt t;
    t.child = n;
    NodeSet pa = g.parents(n);
    t.parents.assign(pa.begin(), pa.end());
    long pc = 1;
    for (const auto& p : t.parents) pc *= cards.at(p);
    int c = cards.at(n);
    t.table.resize(pc * c);
    for (long pi = 0; pi < pc; ++pi) {
      auto probs = rng.simplex(c);
      for (int v = 0; v < c; ++v) t.table[pi * c + v] = probs[v];
    }
    m.cpts[n] = t;
  }
  return m;
}

}  // namespace qcm
