#include "qcm/splitnode.hpp"

#include <algorithm>
#include <cmath>

namespace qcm {

namespace {

long axes_size(const std::vector<Axis>& axes) {
  long n = 1;
  for (const auto& a : axes) n *= a.card;
  return n;
}

}  // namespace

ClassicalTensor::ClassicalTensor(std::vector<Axis> ax) : axes(std::move(ax)) {
  std::sort(axes.begin(), axes.end());
  for (size_t i = 1; i < axes.size(); ++i)
    if (axes[i - 1].node == axes[i].node && axes[i - 1].half == axes[i].half)
      throw DomainError("duplicate axis " + axes[i].node);
  data.assign(axes_size(axes), 0.0);
}

std::optional<int> ClassicalTensor::find(const std::string& node, Half half) const {
  for (size_t i = 0; i < axes.size(); ++i)
    if (axes[i].node == node && axes[i].half == half) return static_cast<int>(i);
  return std::nullopt;
}

std::vector<int> ClassicalTensor::dims() const {
  std::vector<int> d;
  for (const auto& a : axes) d.push_back(a.card);
  return d;
}

Cpm Cpm::from_tensor(std::vector<std::pair<std::string, int>> nodes, std::vector<double> data) {
  std::sort(nodes.begin(), nodes.end());
  std::vector<Axis> axes;
  for (const auto& [n, c] : nodes) {
    axes.push_back({n, Half::In, c});
    axes.push_back({n, Half::Out, c});
  }
  Cpm k;
  k.nodes = std::move(nodes);
  k.tensor = ClassicalTensor(axes);
  if (static_cast<long>(data.size()) != k.tensor.size())
    throw DimensionError("Cpm: tensor size mismatch");
  for (double v : data)
    if (v < -tol::prob || v > 1 + 1e-9) throw DomainError("Cpm: entry outside [0,1]");
  k.tensor.data = std::move(data);
  return k;
}

int Cpm::card(const std::string& node) const {
  for (const auto& [n, c] : nodes)
    if (n == node) return c;
  throw DomainError("Cpm: unknown node " + node);
}

void ClassicalInstrument::validate() const {
  for (int in = 0; in < card; ++in) {
    double s = 0;
    for (const auto& k : kernels)
      for (int out = 0; out < card; ++out) s += k[out * card + in];
    if (std::abs(s - 1.0) > 1e-9)
      throw DomainError("instrument incomplete at node " + node);
  }
}

ClassicalInstrument make_instrument(const std::string& node, int card, InstrumentKind kind,
                                    const std::vector<int>& g_in, const std::vector<int>& g_out,
                                    int breaking_value) {
  ClassicalInstrument ins;
  ins.node = node;
  ins.card = card;
  auto zero = [&] { return std::vector<double>(card * card, 0.0); };
  switch (kind) {
    case InstrumentKind::Identity: {
      auto k = zero();
      for (int i = 0; i < card; ++i) k[i * card + i] = 1.0;
      ins.kernels.push_back(k);
      break;
    }
    case InstrumentKind::NonDisturbing: {
      // P(k, out | in) = delta(k,in) delta(out,in)
      for (int k = 0; k < card; ++k) {
        auto kk = zero();
        kk[k * card + k] = 1.0;
        ins.kernels.push_back(kk);
      }
      break;
    }
    case InstrumentKind::MaxInformative: {
      // outcome k = measured input; out = g_out(k); g_in must be surjective.
      std::vector<int> gi = g_in, go = g_out;
      if (gi.empty())
        for (int i = 0; i < card; ++i) gi.push_back(i);
      if (go.empty())
        for (int i = 0; i < card; ++i) go.push_back(i);
      std::vector<bool> hit(card, false);
      for (int v : gi) hit[v] = true;
      for (bool h : hit)
        if (!h) throw DomainError("max_informative: g_in not surjective");
      for (size_t k = 0; k < gi.size(); ++k) {
        auto kk = zero();
        kk[go[k] * card + gi[k]] = 1.0;
        ins.kernels.push_back(kk);
      }
      break;
    }
    case InstrumentKind::Breaking: {
      // measure the input, pin the output to breaking_value
      for (int k = 0; k < card; ++k) {
        auto kk = zero();
        kk[breaking_value * card + k] = 1.0;
        ins.kernels.push_back(kk);
      }
      break;
    }
    case InstrumentKind::MeasureRandomize: {
      // outcome (kI,kO): measure input, set output uniformly at random
      for (int ki = 0; ki < card; ++ki)
        for (int ko = 0; ko < card; ++ko) {
          auto kk = zero();
          kk[ko * card + ki] = 1.0 / card;
          ins.kernels.push_back(kk);
        }
      break;
    }
  }
  ins.validate();
  return ins;
}

std::vector<std::vector<double>> spanning_channel_family(int card) {
  std::vector<std::vector<double>> fam;
  std::vector<double> id(card * card, 0.0);
  for (int i = 0; i < card; ++i) id[i * card + i] = 1.0;
  fam.push_back(id);
  for (int b = 0; b < card; ++b)
    for (int a = 0; a < card; ++a) {
      if (a == b) continue;
      auto k = id;
      k[b * card + b] = 0.0;
      k[a * card + b] = 1.0;  // redirect input b to output a
      fam.push_back(k);
    }
  return fam;
}

std::vector<std::vector<double>> deterministic_channel_family(int card) {
  std::vector<std::vector<double>> fam;
  long nf = 1;
  for (int i = 0; i < card; ++i) nf *= card;
  for (long f = 0; f < nf; ++f) {
    std::vector<double> k(card * card, 0.0);
    long rem = f;
    for (int in = card - 1; in >= 0; --in) {
      int out = static_cast<int>(rem % card);
      rem /= card;
      k[out * card + in] = 1.0;
    }
    fam.push_back(k);
  }
  return fam;
}

ClassicalTensor contract_channel(const ClassicalTensor& t, const std::string& node,
                                 const std::vector<double>& kernel) {
  auto pin = t.find(node, Half::In);
  auto pout = t.find(node, Half::Out);
  if (!pin || !pout) throw DomainError("contract_channel: node axes missing for " + node);
  int card = t.axes[*pin].card;
  std::vector<Axis> rest;
  std::vector<int> rpos;
  for (size_t i = 0; i < t.axes.size(); ++i)
    if (static_cast<int>(i) != *pin && static_cast<int>(i) != *pout) {
      rest.push_back(t.axes[i]);
      rpos.push_back(static_cast<int>(i));
    }
  ClassicalTensor out(rest);
  IndexCoder full(t.dims());
  IndexCoder rc(out.dims().empty() ? std::vector<int>{1} : out.dims());
  std::vector<int> fd(t.axes.size()), rd;
  for (long r = 0; r < out.size(); ++r) {
    rc.decode(r, rd);
    for (size_t k = 0; k < rpos.size(); ++k) fd[rpos[k]] = rd[k];
    double s = 0;
    for (int in = 0; in < card; ++in)
      for (int o = 0; o < card; ++o) {
        fd[*pin] = in;
        fd[*pout] = o;
        s += t.data[full.encode(fd)] * kernel[o * card + in];
      }
    out.data[r] = s;
  }
  return out;
}

ClassicalTensor link_node(const ClassicalTensor& t, const std::string& node) {
  auto pin = t.find(node, Half::In);
  if (!pin) throw DomainError("link_node: missing axis");
  int card = t.axes[*pin].card;
  std::vector<double> id(card * card, 0.0);
  for (int i = 0; i < card; ++i) id[i * card + i] = 1.0;
  return contract_channel(t, node, id);
}

ClassicalTensor sum_axis(const ClassicalTensor& t, const std::string& node, Half half) {
  auto pos = t.find(node, half);
  if (!pos) throw DomainError("sum_axis: missing axis for " + node);
  std::vector<Axis> rest;
  std::vector<int> rpos;
  for (size_t i = 0; i < t.axes.size(); ++i)
    if (static_cast<int>(i) != *pos) {
      rest.push_back(t.axes[i]);
      rpos.push_back(static_cast<int>(i));
    }
  ClassicalTensor out(rest);
  IndexCoder full(t.dims());
  IndexCoder rc(out.dims().empty() ? std::vector<int>{1} : out.dims());
  std::vector<int> fd(t.axes.size()), rd;
  int card = t.axes[*pos].card;
  for (long r = 0; r < out.size(); ++r) {
    rc.decode(r, rd);
    for (size_t k = 0; k < rpos.size(); ++k) fd[rpos[k]] = rd[k];
    double s = 0;
    for (int v = 0; v < card; ++v) {
      fd[*pos] = v;
      s += t.data[full.encode(fd)];
    }
    out.data[r] = s;
  }
  return out;
}

CpmValidity check_validity(const Cpm& k) {
  CpmValidity out;
  std::vector<std::vector<std::vector<double>>> fams;
  for (const auto& [n, c] : k.nodes) fams.push_back(spanning_channel_family(c));
  std::vector<size_t> idx(k.nodes.size(), 0);
  while (true) {
    ClassicalTensor t = k.tensor;
    for (size_t i = 0; i < k.nodes.size(); ++i)
      t = contract_channel(t, k.nodes[i].first, fams[i][idx[i]]);
    double v = t.data[0];
    out.worst = std::max(out.worst, std::abs(v - 1.0));
    size_t j = 0;
    for (; j < idx.size(); ++j) {
      if (++idx[j] < fams[j].size()) break;
      idx[j] = 0;
    }
    if (j == idx.size()) break;
  }
  out.ok = out.worst <= 1e-9;
  return out;
}

Dist outcome_probs(const Cpm& k, const std::map<std::string, ClassicalInstrument>& instruments) {
  std::vector<std::string> vars;
  std::vector<int> cards;
  for (const auto& [n, c] : k.nodes) {
    auto it = instruments.find(n);
    if (it == instruments.end()) throw DomainError("outcome_probs: missing instrument for " + n);
    vars.push_back(n);
    cards.push_back(it->second.outcomes());
  }
  Dist out(vars, cards);
  IndexCoder oc(cards);
  std::vector<int> od;
  for (long i = 0; i < out.size(); ++i) {
    oc.decode(i, od);
    ClassicalTensor t = k.tensor;
    for (size_t n = 0; n < vars.size(); ++n)
      t = contract_channel(t, vars[n], instruments.at(vars[n]).kernels[od[n]]);
    out.p[i] = t.data[0];
  }
  return out;
}

ClassicalTensor do_marginal(const Cpm& k, const NodeSet& s_do, const NodeSet& t_keep,
                            const std::map<std::string, std::vector<double>>& channels) {
  for (const auto& n : s_do)
    if (t_keep.count(n)) throw DomainError("do_marginal: sets overlap at " + n);
  ClassicalTensor t = k.tensor;
  for (const auto& [n, c] : k.nodes) {
    if (s_do.count(n)) {
      t = sum_axis(t, n, Half::In);
    } else if (!t_keep.count(n)) {
      auto ch = channels.find(n);
      if (ch != channels.end())
        t = contract_channel(t, n, ch->second);
      else
        t = link_node(t, n);
    }
  }
  return t;
}

Cpm induct_ccm_to_csm(const Ccm& m) {
  m.validate();
  std::vector<std::pair<std::string, int>> nodes;
  for (const auto& n : m.graph.nodes()) nodes.push_back({n, m.cards.at(n)});
  std::sort(nodes.begin(), nodes.end());
  std::vector<Axis> axes;
  for (const auto& [n, c] : nodes) {
    axes.push_back({n, Half::In, c});
    axes.push_back({n, Half::Out, c});
  }
  ClassicalTensor t(axes);
  IndexCoder full(t.dims());
  std::vector<int> fd;
  for (long i = 0; i < t.size(); ++i) {
    full.decode(i, fd);
    double v = 1.0;
    for (const auto& [n, c] : nodes) {
      const Cpt& cpt = m.cpts.at(n);
      long pidx = 0;
      for (const auto& pn : cpt.parents) pidx = pidx * m.cards.at(pn) + fd[*t.find(pn, Half::Out)];
      v *= cpt.table[pidx * c + fd[*t.find(n, Half::In)]];
    }
    t.data[i] = v;
  }
  Cpm k;
  k.nodes = nodes;
  k.tensor = std::move(t);
  return k;
}

Dist induct_cpm_to_dist(const Cpm& k) {
  std::vector<std::string> vars;
  std::vector<int> cards;
  for (const auto& [n, c] : k.nodes) {
    vars.push_back(n);
    cards.push_back(c);
  }
  Dist out(vars, cards);
  IndexCoder oc(cards);
  IndexCoder full(k.tensor.dims());
  std::vector<int> od, fd(k.tensor.axes.size());
  for (long i = 0; i < out.size(); ++i) {
    oc.decode(i, od);
    for (size_t n = 0; n < vars.size(); ++n) {
      fd[*k.tensor.find(vars[n], Half::In)] = od[n];
      fd[*k.tensor.find(vars[n], Half::Out)] = od[n];
    }
    out.p[i] = k.tensor.data[full.encode(fd)];
  }
  return out;
}

namespace {

// Rank-1 check of the matrix slices of `t` grouped as rows x cols x slice.
bool slices_rank_le_1(const ClassicalTensor& t, const std::vector<int>& row_axes,
                      const std::vector<int>& col_axes, const std::vector<int>& slice_axes) {
  IndexCoder full(t.dims());
  auto sub_dims = [&](const std::vector<int>& pos) {
    std::vector<int> d;
    for (int p : pos) d.push_back(t.axes[p].card);
    return d.empty() ? std::vector<int>{1} : d;
  };
  IndexCoder rc(sub_dims(row_axes)), cc(sub_dims(col_axes)), sc(sub_dims(slice_axes));
  std::vector<int> fd(t.axes.size()), rd, cd, sd;
  for (long s = 0; s < sc.total; ++s) {
    sc.decode(s, sd);
    Eigen::MatrixXd m(rc.total, cc.total);
    for (long r = 0; r < rc.total; ++r) {
      rc.decode(r, rd);
      for (long c = 0; c < cc.total; ++c) {
        cc.decode(c, cd);
        for (size_t k = 0; k < slice_axes.size(); ++k) fd[slice_axes[k]] = sd[k];
        for (size_t k = 0; k < row_axes.size(); ++k) fd[row_axes[k]] = rd[k];
        for (size_t k = 0; k < col_axes.size(); ++k) fd[col_axes[k]] = cd[k];
        m(r, c) = t.data[full.encode(fd)];
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() >= 2 && sv(0) > 0 && sv(1) > tol::rank * sv(0)) return false;
  }
  return true;
}

std::vector<int> axes_of(const ClassicalTensor& t, const NodeSet& nodes,
                         std::optional<Half> half = std::nullopt) {
  std::vector<int> pos;
  for (size_t i = 0; i < t.axes.size(); ++i)
    if (nodes.count(t.axes[i].node) && (!half || t.axes[i].half == *half))
      pos.push_back(static_cast<int>(i));
  return pos;
}

void check_cover(const Cpm& k, const NodeSet& y, const NodeSet& z, const NodeSet& w,
                 const NodeSet& x) {
  NodeSet all;
  for (const auto& s : {y, z, w, x})
    for (const auto& n : s)
      if (!all.insert(n).second) throw DomainError("rel_independence: sets overlap at " + n);
  NodeSet have;
  for (const auto& [n, c] : k.nodes) have.insert(n);
  if (all != have)
    throw DomainError("rel_independence: sets must cover the process map exactly");
}

ClassicalTensor do_tensor(const Cpm& k, const NodeSet& x) {
  ClassicalTensor t = k.tensor;
  for (const auto& n : x) t = sum_axis(t, n, Half::In);
  return t;
}

}  // namespace

bool rel_independence(const Cpm& k, RelIndMode mode, const NodeSet& y, const NodeSet& z,
                      const NodeSet& w, const NodeSet& x) {
  check_cover(k, y, z, w, x);
  if (mode == RelIndMode::Plain && !x.empty())
    throw DomainError("rel_independence: plain mode takes no do-set");
  if (mode == RelIndMode::Plain || mode == RelIndMode::Do) {
    ClassicalTensor t = do_tensor(k, x);
    std::vector<int> rows = axes_of(t, y);
    std::vector<int> cols = axes_of(t, z);
    std::vector<int> slices = axes_of(t, w);
    for (int p : axes_of(t, x)) slices.push_back(p);  // remaining x-out axes
    return slices_rank_le_1(t, rows, cols, slices);
  }
  if (mode == RelIndMode::Broken) {
    ClassicalTensor t = do_tensor(k, x);
    std::vector<int> rows = axes_of(t, y);
    std::vector<int> cols = axes_of(t, z, Half::In);
    std::vector<int> slices = axes_of(t, w);
    for (int p : axes_of(t, x)) slices.push_back(p);
    for (int p : axes_of(t, z, Half::Out)) slices.push_back(p);
    return slices_rank_le_1(t, rows, cols, slices);
  }
  // Settings: for each tau_Z in an affinely spanning family, the contracted
  // map must factor as a common eta(Y,W,Xout) times xi^tau(W,Xout): per
  // (W,Xout)-slice, the (Y-values x tau-index) matrix has rank <= 1.
  ClassicalTensor base = do_tensor(k, x);
  std::vector<std::string> zn(z.begin(), z.end());
  std::vector<std::vector<std::vector<double>>> fams;
  for (const auto& n : zn) fams.push_back(spanning_channel_family(k.card(n)));
  std::vector<ClassicalTensor> per_tau;
  std::vector<size_t> idx(zn.size(), 0);
  while (true) {
    ClassicalTensor t = base;
    for (size_t i = 0; i < zn.size(); ++i) t = contract_channel(t, zn[i], fams[i][idx[i]]);
    per_tau.push_back(std::move(t));
    size_t j = 0;
    for (; j < idx.size(); ++j) {
      if (++idx[j] < fams[j].size()) break;
      idx[j] = 0;
    }
    if (j == idx.size() || zn.empty()) break;
  }
  const ClassicalTensor& t0 = per_tau.front();
  std::vector<int> rows = axes_of(t0, y);
  std::vector<int> slices = axes_of(t0, w);
  for (int p : axes_of(t0, x)) slices.push_back(p);
  IndexCoder full(t0.dims());
  auto sub_dims = [&](const std::vector<int>& pos) {
    std::vector<int> d;
    for (int p : pos) d.push_back(t0.axes[p].card);
    return d.empty() ? std::vector<int>{1} : d;
  };
  IndexCoder rc(sub_dims(rows)), sc(sub_dims(slices));
  std::vector<int> fd(t0.axes.size()), rd, sd;
  for (long s = 0; s < sc.total; ++s) {
    sc.decode(s, sd);
    Eigen::MatrixXd m(rc.total, per_tau.size());
    for (long r = 0; r < rc.total; ++r) {
      rc.decode(r, rd);
      for (size_t kk = 0; kk < slices.size(); ++kk) fd[slices[kk]] = sd[kk];
      for (size_t kk = 0; kk < rows.size(); ++kk) fd[rows[kk]] = rd[kk];
      long at = full.encode(fd);
      for (size_t ti = 0; ti < per_tau.size(); ++ti) m(r, ti) = per_tau[ti].data[at];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() >= 2 && sv(0) > 0 && sv(1) > tol::rank * sv(0)) return false;
  }
  return true;
}

namespace {

// Enumerates tuples of instruments (one family per node) and calls fn with the
// chosen instrument map.
void for_each_combo(const std::vector<std::string>& names,
                    const std::vector<std::vector<ClassicalInstrument>>& fams,
                    const std::function<void(const std::map<std::string, ClassicalInstrument>&)>& fn) {
  std::vector<size_t> idx(names.size(), 0);
  while (true) {
    std::map<std::string, ClassicalInstrument> pick;
    for (size_t i = 0; i < names.size(); ++i) pick[names[i]] = fams[i][idx[i]];
    fn(pick);
    size_t j = 0;
    for (; j < idx.size(); ++j) {
      if (++idx[j] < fams[j].size()) break;
      idx[j] = 0;
    }
    if (j == idx.size()) break;
  }
}

std::vector<ClassicalInstrument> max_informative_family(const std::string& node, int card) {
  std::vector<ClassicalInstrument> fam;
  fam.push_back(make_instrument(node, card, InstrumentKind::MeasureRandomize));
  // measure-and-reprepare h(k) for every function h
  long nf = 1;
  for (int i = 0; i < card; ++i) nf *= card;
  for (long f = 0; f < nf; ++f) {
    std::vector<int> go(card);
    long rem = f;
    for (int in = card - 1; in >= 0; --in) {
      go[in] = static_cast<int>(rem % card);
      rem /= card;
    }
    fam.push_back(make_instrument(node, card, InstrumentKind::MaxInformative, {}, go));
  }
  return fam;
}

// CI of outcomes (ky  indep  kz | kw) in a joint outcome distribution laid out
// over sorted node names.
bool outcome_ci(const Dist& p, const NodeSet& y, const NodeSet& z, const NodeSet& w) {
  NodeSet yw = y, zw = z;
  yw.insert(w.begin(), w.end());
  zw.insert(w.begin(), w.end());
  Dist pyw = p.marginal(yw), pzw = p.marginal(zw), pw = p.marginal(w);
  IndexCoder full(p.cards);
  std::vector<int> posy, posz, posw;
  for (size_t i = 0; i < p.vars.size(); ++i) {
    if (yw.count(p.vars[i])) posy.push_back(static_cast<int>(i));
    if (zw.count(p.vars[i])) posz.push_back(static_cast<int>(i));
    if (w.count(p.vars[i])) posw.push_back(static_cast<int>(i));
  }
  auto proj = [&](const std::vector<int>& pos, const std::vector<int>& dg) {
    long idx = 0;
    for (int pp : pos) idx = idx * p.cards[pp] + dg[pp];
    return idx;
  };
  std::vector<int> dg;
  for (long i = 0; i < p.size(); ++i) {
    full.decode(i, dg);
    double a = pyw.p[proj(posy, dg)];
    double b = pzw.p[proj(posz, dg)];
    double c = pw.p[proj(posw, dg)];
    if (std::abs(p.p[i] * c - a * b) > 1e-9) return false;
  }
  return true;
}

}  // namespace

bool operational_check(const Cpm& k, CosStatement statement, const NodeSet& y, const NodeSet& z,
                       const NodeSet& w, const NodeSet& x) {
  check_cover(k, y, z, w, x);
  // Enumerate do-values at X by pinning X^out (sum the in-half, fix out value).
  std::vector<std::string> xn(x.begin(), x.end());
  std::vector<int> xcards;
  for (const auto& n : xn) xcards.push_back(k.card(n));
  IndexCoder xc(xcards.empty() ? std::vector<int>{1} : xcards);
  std::vector<int> xd;

  std::vector<std::string> yn(y.begin(), y.end()), zn(z.begin(), z.end()), wn(w.begin(), w.end());
  std::vector<std::vector<ClassicalInstrument>> yfam, wfam;
  for (const auto& n : yn)
    yfam.push_back({make_instrument(n, k.card(n), InstrumentKind::MeasureRandomize)});
  for (const auto& n : wn) wfam.push_back(max_informative_family(n, k.card(n)));

  bool ok = true;
  for (long xi = 0; xi < xc.total && ok; ++xi) {
    xc.decode(xi, xd);
    // base tensor with do(X = xd): sum in-half, pin out-half
    ClassicalTensor base = k.tensor;
    for (size_t i = 0; i < xn.size(); ++i) {
      base = sum_axis(base, xn[i], Half::In);
      // pin the out axis by a delta kernel applied as a slice
      auto pos = base.find(xn[i], Half::Out);
      IndexCoder full(base.dims());
      std::vector<Axis> rest;
      std::vector<int> rpos;
      for (size_t a = 0; a < base.axes.size(); ++a)
        if (static_cast<int>(a) != *pos) {
          rest.push_back(base.axes[a]);
          rpos.push_back(static_cast<int>(a));
        }
      ClassicalTensor sliced(rest);
      IndexCoder rc2(sliced.dims().empty() ? std::vector<int>{1} : sliced.dims());
      std::vector<int> fd(base.axes.size()), rd;
      for (long r = 0; r < sliced.size(); ++r) {
        rc2.decode(r, rd);
        for (size_t kk = 0; kk < rpos.size(); ++kk) fd[rpos[kk]] = rd[kk];
        fd[*pos] = xd[i];
        sliced.data[r] = base.data[full.encode(fd)];
      }
      base = std::move(sliced);
    }
    Cpm reduced;
    for (const auto& [n, c] : k.nodes)
      if (!x.count(n)) reduced.nodes.push_back({n, c});
    reduced.tensor = base;

    auto run_yzw = [&](const std::vector<std::vector<ClassicalInstrument>>& zfam_) {
      std::vector<std::string> names = yn;
      names.insert(names.end(), zn.begin(), zn.end());
      names.insert(names.end(), wn.begin(), wn.end());
      std::vector<std::vector<ClassicalInstrument>> fams = yfam;
      fams.insert(fams.end(), zfam_.begin(), zfam_.end());
      fams.insert(fams.end(), wfam.begin(), wfam.end());
      for_each_combo(names, fams, [&](const std::map<std::string, ClassicalInstrument>& pick) {
        if (!ok) return;
        Dist p = outcome_probs(reduced, pick);
        if (!outcome_ci(p, y, z, w)) ok = false;
      });
    };

    switch (statement) {
      case CosStatement::COS1: {
        std::vector<std::vector<ClassicalInstrument>> zfam;
        for (const auto& n : zn)
          zfam.push_back({make_instrument(n, k.card(n), InstrumentKind::MeasureRandomize)});
        run_yzw(zfam);
        break;
      }
      case CosStatement::COS2: {
        std::vector<std::vector<ClassicalInstrument>> zfam;
        for (const auto& n : zn) {
          std::vector<ClassicalInstrument> f;
          for (int zv = 0; zv < k.card(n); ++zv)
            f.push_back(make_instrument(n, k.card(n), InstrumentKind::Breaking, {}, {}, zv));
          zfam.push_back(f);
        }
        run_yzw(zfam);
        break;
      }
      case CosStatement::COS3: {
        // For each W-instrument combo, the (k_Y x tau_Z) matrix per k_W value
        // must have rank <= 1.
        std::vector<std::vector<std::vector<double>>> zch;
        for (const auto& n : zn) zch.push_back(spanning_channel_family(k.card(n)));
        std::vector<std::string> names = yn;
        names.insert(names.end(), wn.begin(), wn.end());
        std::vector<std::vector<ClassicalInstrument>> fams = yfam;
        fams.insert(fams.end(), wfam.begin(), wfam.end());
        for_each_combo(names, fams, [&](const std::map<std::string, ClassicalInstrument>& pick) {
          if (!ok) return;
          // per tau: outcome distribution over (Y,W)
          std::vector<Dist> per_tau;
          std::vector<size_t> idx(zn.size(), 0);
          while (true) {
            ClassicalTensor t = reduced.tensor;
            for (size_t i = 0; i < zn.size(); ++i)
              t = contract_channel(t, zn[i], zch[i][idx[i]]);
            Cpm rr;
            for (const auto& [n, c] : reduced.nodes)
              if (!z.count(n)) rr.nodes.push_back({n, c});
            rr.tensor = t;
            per_tau.push_back(outcome_probs(rr, pick));
            size_t j = 0;
            for (; j < idx.size(); ++j) {
              if (++idx[j] < zch[j].size()) break;
              idx[j] = 0;
            }
            if (j == idx.size() || zn.empty()) break;
          }
          // group outcome variables into kY rows and kW slices
          const Dist& d0 = per_tau.front();
          std::vector<int> ypos, wpos;
          for (size_t i = 0; i < d0.vars.size(); ++i)
            (y.count(d0.vars[i]) ? ypos : wpos).push_back(static_cast<int>(i));
          auto subdims = [&](const std::vector<int>& pos) {
            std::vector<int> dd;
            for (int p : pos) dd.push_back(d0.cards[p]);
            return dd.empty() ? std::vector<int>{1} : dd;
          };
          IndexCoder ryc(subdims(ypos)), swc(subdims(wpos));
          IndexCoder dfull(d0.cards);
          std::vector<int> fd(d0.vars.size()), rd, sd;
          for (long s = 0; s < swc.total && ok; ++s) {
            swc.decode(s, sd);
            Eigen::MatrixXd m(ryc.total, per_tau.size());
            for (long r = 0; r < ryc.total; ++r) {
              ryc.decode(r, rd);
              for (size_t kk = 0; kk < wpos.size(); ++kk) fd[wpos[kk]] = sd[kk];
              for (size_t kk = 0; kk < ypos.size(); ++kk) fd[ypos[kk]] = rd[kk];
              long at = dfull.encode(fd);
              for (size_t ti = 0; ti < per_tau.size(); ++ti) m(r, ti) = per_tau[ti].p[at];
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
            const auto& sv = svd.singularValues();
            if (sv.size() >= 2 && sv(0) > 0 && sv(1) > 1e-7 * sv(0)) ok = false;
          }
        });
        break;
      }
    }
  }
  return ok;
}

}  // namespace qcm
