#include "qcm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace qcm {

SpaceSig::SpaceSig(std::vector<Wire> wires) : wires_(std::move(wires)) {
  std::sort(wires_.begin(), wires_.end());
  for (const auto& w : wires_) {
    if (w.dim < 1) throw DimensionError("wire " + w.label() + " has dim < 1");
  }
  for (size_t i = 1; i < wires_.size(); ++i) {
    if (wires_[i - 1].node == wires_[i].node && wires_[i - 1].port == wires_[i].port)
      throw SignatureError("duplicate wire " + wires_[i].label());
  }
}

SpaceSig SpaceSig::merge(const SpaceSig& a, const SpaceSig& b) {
  std::vector<Wire> all = a.wires_;
  for (const auto& w : b.wires_) {
    auto pos = a.find(w.node, w.port);
    if (pos) {
      if (a.wires_[*pos].dim != w.dim)
        throw DimensionError("dim conflict on wire " + w.label());
    } else {
      all.push_back(w);
    }
  }
  return SpaceSig(std::move(all));
}

long SpaceSig::total_dim() const {
  long d = 1;
  for (const auto& w : wires_) d *= w.dim;
  return d;
}

std::optional<int> SpaceSig::find(const std::string& node, Port port) const {
  for (size_t i = 0; i < wires_.size(); ++i)
    if (wires_[i].node == node && wires_[i].port == port) return static_cast<int>(i);
  return std::nullopt;
}

bool SpaceSig::contains(const Wire& w) const {
  auto pos = find(w.node, w.port);
  return pos && wires_[*pos].dim == w.dim;
}

bool SpaceSig::contains_all(const SpaceSig& other) const {
  for (const auto& w : other.wires())
    if (!contains(w)) return false;
  return true;
}

IndexCoder::IndexCoder(const std::vector<int>& d) : dims(d) {
  strides.assign(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * dims[k + 1];
  for (int dk : dims) total *= dk;
}

long IndexCoder::encode(const std::vector<int>& digits) const {
  long idx = 0;
  for (size_t k = 0; k < dims.size(); ++k) idx += digits[k] * strides[k];
  return idx;
}

void IndexCoder::decode(long index, std::vector<int>& digits) const {
  digits.resize(dims.size());
  for (size_t k = 0; k < dims.size(); ++k) {
    digits[k] = static_cast<int>(index / strides[k]);
    index %= strides[k];
  }
}

std::vector<int> wire_dims(const SpaceSig& sig) {
  std::vector<int> d;
  d.reserve(sig.size());
  for (const auto& w : sig.wires()) d.push_back(w.dim);
  return d;
}

LabeledOperator::LabeledOperator(SpaceSig s, Matrix m) : sig(std::move(s)), mat(std::move(m)) {
  if (mat.rows() != mat.cols() || mat.rows() != sig.total_dim())
    throw DimensionError("matrix side does not match signature dimension");
}

LabeledOperator LabeledOperator::scalar(Scalar v) {
  LabeledOperator r;
  r.mat(0, 0) = v;
  return r;
}

LabeledOperator LabeledOperator::identity(const SpaceSig& sig) {
  long d = sig.total_dim();
  return LabeledOperator(sig, Matrix::Identity(d, d));
}

LabeledOperator LabeledOperator::from_factors(const std::vector<Wire>& factors, const Matrix& m) {
  SpaceSig sig(factors);
  long d = sig.total_dim();
  if (m.rows() != d || m.cols() != d)
    throw DimensionError("factor matrix side does not match factor dims");
  // perm[k] = position in `factors` of the k-th canonical wire
  std::vector<int> perm(sig.size());
  for (int k = 0; k < sig.size(); ++k) {
    const Wire& w = sig.wires()[k];
    for (size_t j = 0; j < factors.size(); ++j)
      if (factors[j].node == w.node && factors[j].port == w.port) perm[k] = static_cast<int>(j);
  }
  std::vector<int> src_dims;
  for (const auto& f : factors) src_dims.push_back(f.dim);
  IndexCoder src(src_dims), dst(wire_dims(sig));
  std::vector<long> map(d);
  std::vector<int> digits, dd(sig.size());
  for (long i = 0; i < d; ++i) {
    src.decode(i, digits);
    for (int k = 0; k < sig.size(); ++k) dd[k] = digits[perm[k]];
    map[i] = dst.encode(dd);
  }
  Matrix out(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(map[r], map[c]) = m(r, c);
  return LabeledOperator(sig, std::move(out));
}

bool LabeledOperator::is_hermitian(double eps) const {
  double scale = std::max(1.0, mat.norm());
  return (mat - mat.adjoint()).norm() <= eps * scale;
}

bool LabeledOperator::is_psd(double eps) const {
  if (!is_hermitian(eps)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es((mat + mat.adjoint()) / 2.0);
  double scale = std::max(1.0, mat.norm());
  return es.eigenvalues().minCoeff() >= -eps * scale;
}

LabeledOperator align(const LabeledOperator& a, const SpaceSig& target) {
  if (!target.contains_all(a.sig)) {
    for (const auto& w : a.sig.wires()) {
      auto pos = target.find(w.node, w.port);
      if (!pos) throw SignatureError("wire " + w.label() + " absent from target signature");
      if (target.wires()[*pos].dim != w.dim)
        throw DimensionError("dim conflict on wire " + w.label());
    }
  }
  if (a.sig == target) return a;
  long d = target.total_dim();
  long da = a.sig.total_dim();
  // Positions of a's wires within target, and of the padded rest.
  std::vector<int> apos, rpos;
  for (int k = 0; k < target.size(); ++k) {
    const Wire& w = target.wires()[k];
    if (a.sig.find(w.node, w.port))
      apos.push_back(k);
    else
      rpos.push_back(k);
  }
  IndexCoder full(wire_dims(target));
  std::vector<int> adims, rdims;
  for (int k : apos) adims.push_back(target.wires()[k].dim);
  for (int k : rpos) rdims.push_back(target.wires()[k].dim);
  IndexCoder ac(adims.empty() ? std::vector<int>{1} : adims);
  IndexCoder rc(rdims.empty() ? std::vector<int>{1} : rdims);
  long dr = d / da;
  Matrix out = Matrix::Zero(d, d);
  std::vector<int> fd(target.size());
  // enumerate (a-row, a-col, shared rest) directly
  std::vector<int> ard, acd, rrd;
  for (long ar = 0; ar < da; ++ar) {
    ac.decode(ar, ard);
    for (long acol = 0; acol < da; ++acol) {
      Scalar v = a.mat(ar, acol);
      if (v == Scalar(0)) continue;
      ac.decode(acol, acd);
      for (long rest = 0; rest < dr; ++rest) {
        rc.decode(rest, rrd);
        for (size_t k = 0; k < apos.size(); ++k) fd[apos[k]] = ard[k];
        for (size_t k = 0; k < rpos.size(); ++k) fd[rpos[k]] = rrd[k];
        long row = full.encode(fd);
        for (size_t k = 0; k < apos.size(); ++k) fd[apos[k]] = acd[k];
        long col = full.encode(fd);
        out(row, col) = v;
      }
    }
  }
  return LabeledOperator(target, std::move(out));
}

LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  for (const auto& w : b.sig.wires())
    if (a.sig.find(w.node, w.port)) throw SignatureError("shared wire in tensor: " + w.label());
  SpaceSig u = SpaceSig::merge(a.sig, b.sig);
  LabeledOperator ra = align(a, u);
  LabeledOperator rb = align(b, u);
  ra.mat = ra.mat * rb.mat;
  return ra;
}

LabeledOperator multiply(const LabeledOperator& a, const LabeledOperator& b) {
  SpaceSig u = SpaceSig::merge(a.sig, b.sig);
  LabeledOperator ra = align(a, u);
  LabeledOperator rb = align(b, u);
  ra.mat = ra.mat * rb.mat;
  return ra;
}

LabeledOperator add(const LabeledOperator& a, const LabeledOperator& b) {
  SpaceSig u = SpaceSig::merge(a.sig, b.sig);
  LabeledOperator ra = align(a, u);
  LabeledOperator rb = align(b, u);
  ra.mat += rb.mat;
  return ra;
}

LabeledOperator scale(const LabeledOperator& a, Scalar s) {
  LabeledOperator r = a;
  r.mat *= s;
  return r;
}

double commutator_norm(const LabeledOperator& a, const LabeledOperator& b) {
  SpaceSig u = SpaceSig::merge(a.sig, b.sig);
  Matrix ma = align(a, u).mat, mb = align(b, u).mat;
  return (ma * mb - mb * ma).norm();
}

LabeledOperator partial_trace(const LabeledOperator& a, const std::vector<Wire>& wires) {
  std::vector<int> tpos;
  for (const auto& w : wires) {
    auto pos = a.sig.find(w.node, w.port);
    if (!pos) throw SignatureError("unknown wire in partial trace: " + w.label());
    tpos.push_back(*pos);
  }
  std::sort(tpos.begin(), tpos.end());
  tpos.erase(std::unique(tpos.begin(), tpos.end()), tpos.end());
  std::vector<Wire> kept;
  std::vector<int> kpos;
  for (int k = 0; k < a.sig.size(); ++k) {
    if (!std::binary_search(tpos.begin(), tpos.end(), k)) {
      kept.push_back(a.sig.wires()[k]);
      kpos.push_back(k);
    }
  }
  SpaceSig ksig(kept);
  long dk = ksig.total_dim();
  std::vector<int> tdims;
  for (int k : tpos) tdims.push_back(a.sig.wires()[k].dim);
  IndexCoder full(wire_dims(a.sig));
  IndexCoder kc(wire_dims(ksig).empty() ? std::vector<int>{1} : wire_dims(ksig));
  IndexCoder tc(tdims.empty() ? std::vector<int>{1} : tdims);
  long dt = a.sig.total_dim() / std::max<long>(dk, 1);
  Matrix out = Matrix::Zero(dk, dk);
  std::vector<int> fd(a.sig.size()), krd, kcd, td;
  for (long kr = 0; kr < dk; ++kr) {
    kc.decode(kr, krd);
    for (long kcidx = 0; kcidx < dk; ++kcidx) {
      kc.decode(kcidx, kcd);
      Scalar s = 0;
      for (long t = 0; t < dt; ++t) {
        tc.decode(t, td);
        for (size_t k = 0; k < kpos.size(); ++k) fd[kpos[k]] = krd[k];
        for (size_t k = 0; k < tpos.size(); ++k) fd[tpos[k]] = td[k];
        long row = full.encode(fd);
        for (size_t k = 0; k < kpos.size(); ++k) fd[kpos[k]] = kcd[k];
        long col = full.encode(fd);
        s += a.mat(row, col);
      }
      out(kr, kcidx) = s;
    }
  }
  return LabeledOperator(ksig, std::move(out));
}

LabeledOperator partial_trace_nodes(const LabeledOperator& a, const std::set<std::string>& nodes) {
  std::vector<Wire> ws;
  for (const auto& w : a.sig.wires())
    if (nodes.count(w.node)) ws.push_back(w);
  return partial_trace(a, ws);
}

LabeledOperator contract_with(const LabeledOperator& acc, const LabeledOperator& op) {
  if (!acc.sig.contains_all(op.sig))
    throw SignatureError("contract_with: operator wires not contained in accumulator");
  if (op.sig.empty()) return scale(acc, op.mat(0, 0));
  // Split acc's factors into kept (x) and contracted (n).
  std::vector<int> npos, xpos;
  for (int k = 0; k < acc.sig.size(); ++k) {
    const Wire& w = acc.sig.wires()[k];
    if (op.sig.find(w.node, w.port))
      npos.push_back(k);
    else
      xpos.push_back(k);
  }
  std::vector<Wire> kept;
  for (int k : xpos) kept.push_back(acc.sig.wires()[k]);
  SpaceSig ksig(kept);
  long dx = ksig.total_dim();
  long dn = op.sig.total_dim();
  // Reindex acc as acc[(x,n),(x',n')] -> matrix T[(x,x'), (n,n')], then contract
  // with vec(op^T): R[(x,x')] = sum_{n,n'} acc[(x,n),(x',n')] op[n',n].
  IndexCoder full(wire_dims(acc.sig));
  IndexCoder xc(wire_dims(ksig).empty() ? std::vector<int>{1} : wire_dims(ksig));
  std::vector<int> ndims;
  for (int k : npos) ndims.push_back(acc.sig.wires()[k].dim);
  IndexCoder nc(ndims);
  // The op's factor order may differ from acc's induced order on those wires;
  // since both are canonical over the same wire set, orders agree.
  Matrix out = Matrix::Zero(dx, dx);
  std::vector<int> fd(acc.sig.size()), xr, xcd, nr, ncd;
  for (long xrow = 0; xrow < dx; ++xrow) {
    xc.decode(xrow, xr);
    for (long xcol = 0; xcol < dx; ++xcol) {
      xc.decode(xcol, xcd);
      Scalar s = 0;
      for (long n = 0; n < dn; ++n) {
        nc.decode(n, nr);
        for (size_t k = 0; k < xpos.size(); ++k) fd[xpos[k]] = xr[k];
        for (size_t k = 0; k < npos.size(); ++k) fd[npos[k]] = nr[k];
        long row = full.encode(fd);
        for (long np = 0; np < dn; ++np) {
          nc.decode(np, ncd);
          for (size_t k = 0; k < xpos.size(); ++k) fd[xpos[k]] = xcd[k];
          for (size_t k = 0; k < npos.size(); ++k) fd[npos[k]] = ncd[k];
          long col = full.encode(fd);
          s += acc.mat(row, col) * op.mat(np, n);
        }
      }
      out(xrow, xcol) = s;
    }
  }
  return LabeledOperator(ksig, std::move(out));
}

LabeledOperator identity_link(const std::string& node, int dim) {
  if (dim < 1) throw DimensionError("identity_link: dim < 1");
  SpaceSig sig({Wire{node, Port::In, dim}, Wire{node, Port::Out, dim}});
  long d = static_cast<long>(dim) * dim;
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i * dim + i, j * dim + j) = 1.0;
  return LabeledOperator(sig, std::move(m));
}

LabeledOperator link_trace(const LabeledOperator& a, const std::set<std::string>& nodes) {
  if (nodes.empty()) return a;
  LabeledOperator acc = a;
  for (const auto& n : nodes) {
    auto pin = acc.sig.find(n, Port::In);
    auto pout = acc.sig.find(n, Port::Out);
    if (!pin || !pout)
      throw SignatureError("link_trace: node " + n + " lacks an in or out wire");
    int d = acc.sig.wires()[*pin].dim;
    if (acc.sig.wires()[*pout].dim != d)
      throw DimensionError("link_trace: in/out dim mismatch at node " + n);
    acc = contract_with(acc, identity_link(n, d));
  }
  return acc;
}

LabeledOperator link_compose(const LabeledOperator& p, const LabeledOperator& q,
                             const std::set<std::string>& names) {
  // P carries (n, in), Q carries (n, out) for every closed name n.
  std::vector<int> p_closed, q_closed, p_open, q_open;
  for (int k = 0; k < p.sig.size(); ++k) {
    const Wire& w = p.sig.wires()[k];
    if (names.count(w.node)) {
      if (w.port != Port::In) throw SignatureError("link_compose: producer must carry in-port of " + w.node);
      p_closed.push_back(k);
    } else {
      p_open.push_back(k);
    }
  }
  for (int k = 0; k < q.sig.size(); ++k) {
    const Wire& w = q.sig.wires()[k];
    if (names.count(w.node)) {
      if (w.port != Port::Out) throw SignatureError("link_compose: consumer must carry out-port of " + w.node);
      q_closed.push_back(k);
    } else {
      q_open.push_back(k);
    }
  }
  if (p_closed.size() != names.size() || q_closed.size() != names.size())
    throw SignatureError("link_compose: closed wires missing on one side");
  // Closed dims, in matching (canonical-name) order on both sides.
  std::vector<int> cdims;
  for (int k : p_closed) cdims.push_back(p.sig.wires()[k].dim);
  {
    std::vector<int> qd;
    for (int k : q_closed) qd.push_back(q.sig.wires()[k].dim);
    if (qd != cdims) throw DimensionError("link_compose: closed dims mismatch");
  }
  std::vector<Wire> open_wires;
  for (int k : p_open) open_wires.push_back(p.sig.wires()[k]);
  for (int k : q_open) open_wires.push_back(q.sig.wires()[k]);
  SpaceSig osig(open_wires);

  IndexCoder pc(wire_dims(p.sig)), qc(wire_dims(q.sig));
  std::vector<int> pxd, qyd;
  for (int k : p_open) pxd.push_back(p.sig.wires()[k].dim);
  for (int k : q_open) qyd.push_back(q.sig.wires()[k].dim);
  IndexCoder xc(pxd.empty() ? std::vector<int>{1} : pxd);
  IndexCoder yc(qyd.empty() ? std::vector<int>{1} : qyd);
  IndexCoder cc(cdims.empty() ? std::vector<int>{1} : cdims);
  long dxp = xc.total, dyq = yc.total, dc = cc.total;

  // Reshape P -> A[(x,x'), (a,a')], Q -> B[(a,a'), (y,y')], multiply.
  Matrix A(dxp * dxp, dc * dc), B(dc * dc, dyq * dyq);
  {
    std::vector<int> fd(p.sig.size()), xd, ad, xdc, adc;
    for (long x = 0; x < dxp; ++x) {
      xc.decode(x, xd);
      for (long a = 0; a < dc; ++a) {
        cc.decode(a, ad);
        for (size_t k = 0; k < p_open.size(); ++k) fd[p_open[k]] = xd[k];
        for (size_t k = 0; k < p_closed.size(); ++k) fd[p_closed[k]] = ad[k];
        long row = pc.encode(fd);
        for (long xp = 0; xp < dxp; ++xp) {
          xc.decode(xp, xdc);
          for (long ap = 0; ap < dc; ++ap) {
            cc.decode(ap, adc);
            for (size_t k = 0; k < p_open.size(); ++k) fd[p_open[k]] = xdc[k];
            for (size_t k = 0; k < p_closed.size(); ++k) fd[p_closed[k]] = adc[k];
            long col = pc.encode(fd);
            A(x * dxp + xp, a * dc + ap) = p.mat(row, col);
          }
        }
      }
    }
  }
  {
    std::vector<int> fd(q.sig.size()), yd, ad, ydc, adc;
    for (long a = 0; a < dc; ++a) {
      cc.decode(a, ad);
      for (long y = 0; y < dyq; ++y) {
        yc.decode(y, yd);
        for (size_t k = 0; k < q_open.size(); ++k) fd[q_open[k]] = yd[k];
        for (size_t k = 0; k < q_closed.size(); ++k) fd[q_closed[k]] = ad[k];
        long row = qc.encode(fd);
        for (long ap = 0; ap < dc; ++ap) {
          cc.decode(ap, adc);
          for (long yp = 0; yp < dyq; ++yp) {
            yc.decode(yp, ydc);
            for (size_t k = 0; k < q_open.size(); ++k) fd[q_open[k]] = ydc[k];
            for (size_t k = 0; k < q_closed.size(); ++k) fd[q_closed[k]] = adc[k];
            long col = qc.encode(fd);
            B(a * dc + ap, y * dyq + yp) = q.mat(row, col);
          }
        }
      }
    }
  }
  Matrix C = A * B;  // [(x,x'), (y,y')]
  // Scatter into canonical open signature.
  long dout = osig.total_dim();
  Matrix out(dout, dout);
  IndexCoder oc(wire_dims(osig).empty() ? std::vector<int>{1} : wire_dims(osig));
  // position of each open wire within osig
  std::vector<int> xo(p_open.size()), yo(q_open.size());
  for (size_t k = 0; k < p_open.size(); ++k) {
    const Wire& w = p.sig.wires()[p_open[k]];
    xo[k] = *osig.find(w.node, w.port);
  }
  for (size_t k = 0; k < q_open.size(); ++k) {
    const Wire& w = q.sig.wires()[q_open[k]];
    yo[k] = *osig.find(w.node, w.port);
  }
  std::vector<int> fd(osig.size()), xd, yd, xdc, ydc;
  for (long x = 0; x < dxp; ++x) {
    xc.decode(x, xd);
    for (long y = 0; y < dyq; ++y) {
      yc.decode(y, yd);
      for (size_t k = 0; k < xo.size(); ++k) fd[xo[k]] = xd[k];
      for (size_t k = 0; k < yo.size(); ++k) fd[yo[k]] = yd[k];
      long row = oc.encode(fd);
      for (long xp = 0; xp < dxp; ++xp) {
        xc.decode(xp, xdc);
        for (long yp = 0; yp < dyq; ++yp) {
          yc.decode(yp, ydc);
          for (size_t k = 0; k < xo.size(); ++k) fd[xo[k]] = xdc[k];
          for (size_t k = 0; k < yo.size(); ++k) fd[yo[k]] = ydc[k];
          long col = oc.encode(fd);
          out(row, col) = C(x * dxp + xp, y * dyq + yp);
        }
      }
    }
  }
  return LabeledOperator(osig, std::move(out));
}

LabeledOperator choi_of_kraus(const std::vector<Matrix>& kraus, std::vector<Wire> in_wires,
                              std::vector<Wire> out_wires, bool require_tp) {
  if (kraus.empty()) throw DomainError("choi_of_kraus: no Kraus operators");
  std::sort(in_wires.begin(), in_wires.end());
  std::sort(out_wires.begin(), out_wires.end());
  long din = 1, dout = 1;
  for (const auto& w : in_wires) din *= w.dim;
  for (const auto& w : out_wires) dout *= w.dim;
  for (const auto& k : kraus)
    if (k.rows() != dout || k.cols() != din)
      throw DimensionError("Kraus operator shape does not match wire dims");
  if (require_tp) {
    Matrix acc = Matrix::Zero(din, din);
    for (const auto& k : kraus) acc += k.adjoint() * k;
    if ((acc - Matrix::Identity(din, din)).norm() > tol::tp * std::sqrt(static_cast<double>(din)))
      throw DomainError("Kraus operators are not trace preserving");
  }
  // factors: [out..., in...]; entries [(o,i),(o',j)] = sum_k K[o,i] conj(K[o',j])
  Matrix m = Matrix::Zero(dout * din, dout * din);
  for (const auto& k : kraus) {
    Eigen::VectorXcd v(dout * din);
    for (long o = 0; o < dout; ++o)
      for (long i = 0; i < din; ++i) v(o * din + i) = k(o, i);
    m += v * v.adjoint();
  }
  std::vector<Wire> factors = out_wires;
  factors.insert(factors.end(), in_wires.begin(), in_wires.end());
  return LabeledOperator::from_factors(factors, m);
}

LabeledOperator apply_channel(const LabeledOperator& chan, const LabeledOperator& state) {
  // state on carrier wires (port in); chan pairs the corresponding out-port duals.
  LabeledOperator acc = multiply(chan, state);
  std::set<std::string> closed;
  for (const auto& w : state.sig.wires()) {
    if (w.port != Port::In)
      throw SignatureError("apply_channel: state must live on in-port wires");
    if (!chan.sig.find(w.node, Port::Out))
      throw SignatureError("apply_channel: channel lacks dual wire for node " + w.node);
    closed.insert(w.node);
  }
  return link_trace(acc, closed);
}

LabeledOperator intervention_from_kraus(const std::string& node, int dim,
                                        const std::vector<Matrix>& kraus) {
  // tau[(i,m),(j,m')] = sum_k conj(K[m,i]) K[m',j] on wires {(node,in),(node,out)}
  for (const auto& k : kraus)
    if (k.rows() != dim || k.cols() != dim)
      throw DimensionError("intervention_from_kraus: Kraus shape mismatch");
  long d2 = static_cast<long>(dim) * dim;
  Matrix m = Matrix::Zero(d2, d2);
  for (const auto& k : kraus) {
    Eigen::VectorXcd v(d2);
    for (int i = 0; i < dim; ++i)
      for (int mm = 0; mm < dim; ++mm) v(i * dim + mm) = std::conj(k(mm, i));
    m += v * v.adjoint();
  }
  SpaceSig sig({Wire{node, Port::In, dim}, Wire{node, Port::Out, dim}});
  return LabeledOperator(sig, std::move(m));
}

LabeledOperator intervention_identity(const std::string& node, int dim) {
  return identity_link(node, dim);
}

Matrix support_basis(const Matrix& herm, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((herm + herm.adjoint()) / 2.0);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > eps * scale) keep.push_back(i);
  Matrix v(herm.rows(), keep.size());
  for (size_t k = 0; k < keep.size(); ++k) v.col(k) = es.eigenvectors().col(keep[k]);
  return v;
}

Matrix support_log(const Matrix& psd, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((psd + psd.adjoint()) / 2.0);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Matrix out = Matrix::Zero(psd.rows(), psd.cols());
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > eps * scale)
      out += std::log(lam) * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  }
  return out;
}

LabeledOperator star(const LabeledOperator& a, const LabeledOperator& b) {
  SpaceSig u = SpaceSig::merge(a.sig, b.sig);
  Matrix ma = align(a, u).mat, mb = align(b, u).mat;
  LabeledOperator la(u, ma), lb(u, mb);
  if (!la.is_psd(1e-7) || !lb.is_psd(1e-7)) throw DomainError("star: inputs must be PSD");
  Matrix va = support_basis(ma), vb = support_basis(mb);
  // intersection of supports: eigenvectors of Pa+Pb with eigenvalue ~ 2
  Matrix pa = va * va.adjoint(), pb = vb * vb.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> es(pa + pb);
  std::vector<int> keep;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 2.0 - 1e-7) keep.push_back(i);
  if (keep.empty()) return LabeledOperator(u, Matrix::Zero(ma.rows(), ma.cols()));
  Matrix v(ma.rows(), keep.size());
  for (size_t k = 0; k < keep.size(); ++k) v.col(k) = es.eigenvectors().col(keep[k]);
  Matrix l = v.adjoint() * (support_log(ma) + support_log(mb)) * v;
  Eigen::SelfAdjointEigenSolver<Matrix> el((l + l.adjoint()) / 2.0);
  Matrix e = Matrix::Zero(l.rows(), l.cols());
  for (int i = 0; i < el.eigenvalues().size(); ++i)
    e += std::exp(el.eigenvalues()(i)) * el.eigenvectors().col(i) * el.eigenvectors().col(i).adjoint();
  return LabeledOperator(u, v * e * v.adjoint());
}

double entropy_bits(const Matrix& psd) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((psd + psd.adjoint()) / 2.0,
                                           Eigen::EigenvaluesOnly);
  double s = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double lam = es.eigenvalues()(i);
    if (lam > 0) s -= lam * std::log2(lam);
  }
  return s;
}

double qcmi(const LabeledOperator& rho_hat, const std::vector<Wire>& y,
            const std::vector<Wire>& z, const std::vector<Wire>& w) {
  auto key = [](const Wire& a) { return a.node + "|" + to_string(a.port); };
  std::unordered_set<std::string> sy, sz, sw;
  for (const auto& a : y) sy.insert(key(a));
  for (const auto& a : z) sz.insert(key(a));
  for (const auto& a : w) sw.insert(key(a));
  for (const auto& a : y)
    if (sz.count(key(a)) || sw.count(key(a))) throw SignatureError("qcmi: overlapping partitions");
  for (const auto& a : z)
    if (sw.count(key(a))) throw SignatureError("qcmi: overlapping partitions");
  if (y.size() + z.size() + w.size() != static_cast<size_t>(rho_hat.sig.size()))
    throw SignatureError("qcmi: partition must cover the signature");
  // S(YW) + S(ZW) - S(W) - S(YZW)
  double syw = entropy_bits(partial_trace(rho_hat, z).mat);
  double szw = entropy_bits(partial_trace(rho_hat, y).mat);
  std::vector<Wire> yz = y;
  yz.insert(yz.end(), z.begin(), z.end());
  double sw_ = entropy_bits(partial_trace(rho_hat, yz).mat);
  double syzw = entropy_bits(rho_hat.mat);
  return syw + szw - sw_ - syzw;
}

Matrix arranged(const LabeledOperator& op, const std::vector<Wire>& order) {
  if (static_cast<int>(order.size()) != op.sig.size())
    throw SignatureError("arranged: order must list every wire");
  std::vector<int> pos, dims;
  for (const auto& w : order) {
    auto p = op.sig.find(w.node, w.port);
    if (!p) throw SignatureError("arranged: unknown wire " + w.label());
    pos.push_back(*p);
    dims.push_back(op.sig.wires()[*p].dim);
  }
  IndexCoder src(wire_dims(op.sig)), dst(dims);
  long d = op.dim();
  std::vector<long> map(d);
  std::vector<int> dd, sd(op.sig.size());
  for (long i = 0; i < d; ++i) {
    dst.decode(i, dd);
    for (size_t k = 0; k < pos.size(); ++k) sd[pos[k]] = dd[k];
    map[i] = src.encode(sd);
  }
  Matrix out(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(r, c) = op.mat(map[r], map[c]);
  return out;
}

std::vector<Wire> wires_of_nodes(const SpaceSig& sig, const std::set<std::string>& nodes) {
  std::vector<Wire> out;
  for (const auto& w : sig.wires())
    if (nodes.count(w.node)) out.push_back(w);
  return out;
}

std::vector<Wire> wires_of_nodes_port(const SpaceSig& sig, const std::set<std::string>& nodes,
                                      Port port) {
  std::vector<Wire> out;
  for (const auto& w : sig.wires())
    if (nodes.count(w.node) && w.port == port) out.push_back(w);
  return out;
}

}  // namespace qcm
