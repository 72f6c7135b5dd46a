#include "qcm/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qcm {

namespace {

long refs_dim(const std::vector<WireRef>& refs) {
  long d = 1;
  for (const auto& r : refs) d *= r.dim;
  return d;
}

std::vector<int> refs_dims(const std::vector<WireRef>& refs) {
  std::vector<int> d;
  for (const auto& r : refs) d.push_back(r.dim);
  return d;
}

std::string fresh_name(std::string base, const std::set<std::string>& used) {
  while (used.count(base)) base = "_" + base;
  return base;
}

}  // namespace

void Gate::validate() const {
  long din = refs_dim(in), dout = refs_dim(out);
  if (unitary.rows() != dout || unitary.cols() != din)
    throw DimensionError("gate matrix shape does not match wire dims");
  if (din != dout) throw DimensionError("gate is not square");
  if ((unitary.adjoint() * unitary - Matrix::Identity(din, din)).norm() >
      tol::tp * 100 * std::sqrt(static_cast<double>(din)))
    throw DomainError("gate matrix is not unitary");
}

LabeledOperator full_cj(const Gate& g) {
  long din = refs_dim(g.in), dout = refs_dim(g.out);
  Eigen::VectorXcd v(dout * din);
  for (long o = 0; o < dout; ++o)
    for (long i = 0; i < din; ++i) v(o * din + i) = g.unitary(o, i);
  Matrix m = v * v.adjoint();
  std::vector<Wire> factors;
  for (const auto& r : g.out) factors.push_back({r.name, Port::In, r.dim});
  for (const auto& r : g.in) factors.push_back({r.name, Port::Out, r.dim});
  return LabeledOperator::from_factors(factors, m);
}

LabeledOperator reduced_cj(const Gate& g, const std::set<std::string>& keep_outputs) {
  long din = refs_dim(g.in);
  std::vector<int> kpos, cpos;
  for (size_t k = 0; k < g.out.size(); ++k)
    (keep_outputs.count(g.out[k].name) ? kpos : cpos).push_back(static_cast<int>(k));
  std::vector<int> odims = refs_dims(g.out);
  IndexCoder oc(odims);
  std::vector<int> kdims, cdims;
  for (int k : kpos) kdims.push_back(odims[k]);
  for (int k : cpos) cdims.push_back(odims[k]);
  IndexCoder kc(kdims.empty() ? std::vector<int>{1} : kdims);
  IndexCoder cc(cdims.empty() ? std::vector<int>{1} : cdims);
  long dk = kc.total, dc = cc.total;
  // B[(d,i), c] = U[(d,c), i]
  Matrix b(dk * din, dc);
  std::vector<int> od(g.out.size()), kd, cd;
  for (long dkt = 0; dkt < dk; ++dkt) {
    kc.decode(dkt, kd);
    for (long ct = 0; ct < dc; ++ct) {
      cc.decode(ct, cd);
      for (size_t k = 0; k < kpos.size(); ++k) od[kpos[k]] = kd[k];
      for (size_t k = 0; k < cpos.size(); ++k) od[cpos[k]] = cd[k];
      long row = oc.encode(od);
      for (long i = 0; i < din; ++i) b(dkt * din + i, ct) = g.unitary(row, i);
    }
  }
  Matrix m = b * b.adjoint();
  std::vector<Wire> factors;
  for (int k : kpos) factors.push_back({g.out[k].name, Port::In, g.out[k].dim});
  for (const auto& r : g.in) factors.push_back({r.name, Port::Out, r.dim});
  return LabeledOperator::from_factors(factors, m);
}

bool no_influence(const Gate& g, const std::set<std::string>& a, const std::set<std::string>& d,
                  double eps) {
  LabeledOperator m = reduced_cj(g, d);
  std::vector<Wire> aw;
  long da = 1;
  for (const auto& r : g.in)
    if (a.count(r.name)) {
      aw.push_back({r.name, Port::Out, r.dim});
      da *= r.dim;
    }
  if (aw.empty()) throw DomainError("no_influence: no such input wires");
  LabeledOperator tr = partial_trace(m, aw);
  tr.mat /= static_cast<double>(da);
  LabeledOperator back = align(tr, m.sig);
  return (back.mat - m.mat).norm() <= eps * std::max(1.0, m.norm());
}

void BrokenCircuit::validate() const {
  std::map<std::string, int> produced, consumed, dim_of;
  for (const auto& g : gates) {
    g.validate();
    std::set<std::string> seen;
    for (const auto& r : g.in) {
      if (!seen.insert(r.name).second) throw DomainError("duplicate wire in gate: " + r.name);
      consumed[r.name]++;
      auto [it, fresh] = dim_of.insert({r.name, r.dim});
      if (!fresh && it->second != r.dim) throw DimensionError("wire dim conflict: " + r.name);
    }
    for (const auto& r : g.out) {
      if (!seen.insert(r.name).second)
        throw DomainError("gate consumes and produces the same wire: " + r.name);
      produced[r.name]++;
      auto [it, fresh] = dim_of.insert({r.name, r.dim});
      if (!fresh && it->second != r.dim) throw DimensionError("wire dim conflict: " + r.name);
    }
  }
  auto count = [](const std::map<std::string, int>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
  };
  std::set<std::string> all;
  for (const auto& [n, c] : produced) all.insert(n);
  for (const auto& [n, c] : consumed) all.insert(n);
  for (const auto& n : all) {
    int p = count(produced, n), c = count(consumed, n);
    if (inputs.count(n)) {
      if (p != 0 || c != 1)
        throw DomainError("input wire " + n + " must be consumed exactly once");
      const Matrix& st = inputs.at(n);
      if (st.rows() != dim_of.at(n) || st.cols() != dim_of.at(n))
        throw DimensionError("input state dim mismatch at " + n);
      if (std::abs(st.trace() - Scalar(1)) > 1e-8)
        throw DomainError("input state at " + n + " must have unit trace");
    } else if (traced.count(n)) {
      if (p != 1 || c != 0)
        throw DomainError("traced wire " + n + " must be produced exactly once and never consumed");
    } else if (broken.count(n)) {
      if (p != 1 || c > 1) throw DomainError("node wire " + n + " must be fed once, read at most once");
    } else {
      if (p != 1 || c != 1)
        throw DomainError("internal wire " + n + " must be produced and consumed exactly once");
    }
  }
  for (const auto& [n, st] : inputs)
    if (!count(consumed, n)) throw DomainError("input wire " + n + " is never used");
  gate_order();  // throws on cycles
}

std::vector<int> BrokenCircuit::gate_order() const {
  std::map<std::string, int> producer;
  for (size_t i = 0; i < gates.size(); ++i)
    for (const auto& r : gates[i].out) producer[r.name] = static_cast<int>(i);
  std::vector<std::set<int>> deps(gates.size());
  std::vector<int> indeg(gates.size(), 0);
  for (size_t i = 0; i < gates.size(); ++i)
    for (const auto& r : gates[i].in) {
      auto it = producer.find(r.name);
      if (it != producer.end() && deps[it->second].insert(static_cast<int>(i)).second) indeg[i]++;
    }
  std::vector<int> order;
  std::set<int> ready;
  for (size_t i = 0; i < gates.size(); ++i)
    if (indeg[i] == 0) ready.insert(static_cast<int>(i));
  while (!ready.empty()) {
    int n = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(n);
    for (int m : deps[n])
      if (--indeg[m] == 0) ready.insert(m);
  }
  if (order.size() != gates.size()) throw DomainError("circuit wiring contains a cycle");
  return order;
}

ProcessOperator contract(const BrokenCircuit& c, ContractMode mode) {
  c.validate();
  std::vector<int> order = c.gate_order();
  LabeledOperator acc = LabeledOperator::scalar(1);
  for (int gi : order) {
    const Gate& g = c.gates[gi];
    LabeledOperator cj = full_cj(g);
    std::set<std::string> close;
    if (mode == ContractMode::NodesOnly) {
      for (const auto& r : g.in) {
        auto it = c.inputs.find(r.name);
        if (it != c.inputs.end()) {
          SpaceSig ssig({Wire{r.name, Port::In, r.dim}});
          LabeledOperator st(ssig, it->second);
          cj = link_compose(st, cj, {r.name});
        }
      }
      for (const auto& r : g.out)
        if (c.traced.count(r.name)) cj = partial_trace(cj, {Wire{r.name, Port::In, r.dim}});
    }
    for (const auto& r : g.in)
      if (!c.broken.count(r.name) && !c.inputs.count(r.name)) close.insert(r.name);
    acc = link_compose(acc, cj, close);
  }
  // Node list and final signature.
  std::map<std::string, int> dim_of;
  for (const auto& g : c.gates) {
    for (const auto& r : g.in) dim_of[r.name] = r.dim;
    for (const auto& r : g.out) dim_of[r.name] = r.dim;
  }
  std::vector<QNode> nodes;
  std::vector<Wire> full;
  for (const auto& n : c.broken) {
    nodes.push_back({n, dim_of.at(n)});
    full.push_back({n, Port::In, dim_of.at(n)});
    full.push_back({n, Port::Out, dim_of.at(n)});
  }
  if (mode == ContractMode::NodesLambdasFs) {
    for (const auto& [n, st] : c.inputs) {
      SpaceSig ssig({Wire{n, Port::In, dim_of.at(n)}});
      acc = multiply(acc, LabeledOperator(ssig, st));
      nodes.push_back({n, dim_of.at(n)});
      full.push_back({n, Port::In, dim_of.at(n)});
      full.push_back({n, Port::Out, dim_of.at(n)});
    }
    for (const auto& n : c.traced) {
      nodes.push_back({n, dim_of.at(n)});
      full.push_back({n, Port::In, dim_of.at(n)});
      full.push_back({n, Port::Out, dim_of.at(n)});
    }
  }
  acc = align(acc, SpaceSig(full));
  return ProcessOperator::over(nodes, acc);
}

NodeSet UnitaryProcessWithInputs::node_names() const {
  NodeSet s;
  for (const auto& r : u.out)
    if (r.is_node) s.insert(r.name);
  return s;
}

NodeSet UnitaryProcessWithInputs::lambda_names() const {
  NodeSet s;
  for (const auto& [n, st] : lambda_states) s.insert(n);
  return s;
}

NodeSet UnitaryProcessWithInputs::sink_names() const {
  NodeSet s;
  for (const auto& r : u.out)
    if (!r.is_node) s.insert(r.name);
  return s;
}

ProcessOperator UnitaryProcessWithInputs::full_process() const {
  LabeledOperator acc = full_cj(u);
  std::vector<QNode> nodes;
  std::vector<Wire> full;
  for (const auto& r : u.out) {
    nodes.push_back({r.name, r.dim});
    full.push_back({r.name, Port::In, r.dim});
    full.push_back({r.name, Port::Out, r.dim});
  }
  for (const auto& r : u.in) {
    if (r.is_node) continue;  // node wires already listed from the output side
    nodes.push_back({r.name, r.dim});
    full.push_back({r.name, Port::In, r.dim});
    full.push_back({r.name, Port::Out, r.dim});
    auto it = lambda_states.find(r.name);
    if (it == lambda_states.end()) throw DomainError("missing input state for " + r.name);
    SpaceSig ssig({Wire{r.name, Port::In, r.dim}});
    acc = multiply(acc, LabeledOperator(ssig, it->second));
  }
  acc = align(acc, SpaceSig(full));
  return ProcessOperator::over(nodes, acc);
}

ProcessOperator UnitaryProcessWithInputs::marginal_nodes() const {
  // sigma over the nodes = channel operator of X -> Tr_sinks[U (X (x) lambda) U-dag],
  // assembled from Kraus operators without materializing the full operator.
  // Arrange inputs as (node-outs..., lambdas...) and outputs as (node-ins...,
  // sinks...), both big-endian in their ref order.
  std::vector<int> in_node_pos, in_lam_pos, out_node_pos, out_sink_pos;
  for (size_t i = 0; i < u.in.size(); ++i)
    (u.in[i].is_node ? in_node_pos : in_lam_pos).push_back(static_cast<int>(i));
  for (size_t i = 0; i < u.out.size(); ++i)
    (u.out[i].is_node ? out_node_pos : out_sink_pos).push_back(static_cast<int>(i));
  auto dims_of = [](const std::vector<WireRef>& refs, const std::vector<int>& pos) {
    std::vector<int> d;
    for (int p : pos) d.push_back(refs[p].dim);
    return d.empty() ? std::vector<int>{1} : d;
  };
  IndexCoder in_full(refs_dims(u.in)), out_full(refs_dims(u.out));
  IndexCoder nin(dims_of(u.in, in_node_pos)), lam(dims_of(u.in, in_lam_pos));
  IndexCoder nout(dims_of(u.out, out_node_pos)), snk(dims_of(u.out, out_sink_pos));
  // product lambda state, eigendecomposed factor by factor would be ideal;
  // the joint state is still only lam.total-dimensional
  Matrix lam_state = Matrix::Ones(1, 1);
  for (int p : in_lam_pos) {
    const Matrix& st = lambda_states.at(u.in[p].name);
    Matrix bigger = Matrix::Zero(lam_state.rows() * st.rows(), lam_state.cols() * st.cols());
    for (long a = 0; a < lam_state.rows(); ++a)
      for (long b = 0; b < lam_state.cols(); ++b)
        bigger.block(a * st.rows(), b * st.cols(), st.rows(), st.cols()) = lam_state(a, b) * st;
    lam_state = std::move(bigger);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es((lam_state + lam_state.adjoint()) / 2.0);
  // sigma = sum_{s,f} vec(K_{s,f}) vec(K_{s,f})-dag with
  // K[n_in, n_out] = sqrt(p_s) <f| U | n_out, s>
  long dni = nin.total, dno = nout.total;
  Matrix sigma_m = Matrix::Zero(dni * dno, dni * dno);
  std::vector<int> ind(u.in.size()), outd(u.out.size()), nd, ld, od, sd;
  for (long s = 0; s < es.eigenvalues().size(); ++s) {
    double p = es.eigenvalues()(s);
    if (p < 1e-15) continue;
    for (long f = 0; f < snk.total; ++f) {
      snk.decode(f, sd);
      Eigen::VectorXcd kvec = Eigen::VectorXcd::Zero(dni * dno);
      for (long no = 0; no < dno; ++no) {
        nout.decode(no, od);
        for (long niv = 0; niv < dni; ++niv) {
          nin.decode(niv, nd);
          Scalar val = 0;
          for (long l = 0; l < lam.total; ++l) {
            lam.decode(l, ld);
            for (size_t k = 0; k < in_node_pos.size(); ++k) ind[in_node_pos[k]] = nd[k];
            for (size_t k = 0; k < in_lam_pos.size(); ++k) ind[in_lam_pos[k]] = ld[k];
            for (size_t k = 0; k < out_node_pos.size(); ++k) outd[out_node_pos[k]] = od[k];
            for (size_t k = 0; k < out_sink_pos.size(); ++k) outd[out_sink_pos[k]] = sd[k];
            val += u.unitary(out_full.encode(outd), in_full.encode(ind)) *
                   es.eigenvectors()(l, s);
          }
          // K rows: node-ins = n-out index of U... here val = <node-in=od, f | U | node-out=nd, s>
          kvec(no * dni + niv) = std::sqrt(p) * val;
        }
      }
      sigma_m += kvec * kvec.adjoint();
    }
  }
  // factors: node-out wires act as the channel's dual inputs
  std::vector<Wire> factors;
  for (int p : out_node_pos) factors.push_back({u.out[p].name, Port::In, u.out[p].dim});
  for (int p : in_node_pos) factors.push_back({u.in[p].name, Port::Out, u.in[p].dim});
  LabeledOperator op = LabeledOperator::from_factors(factors, sigma_m);
  std::vector<QNode> nodes;
  for (int p : out_node_pos) nodes.push_back({u.out[p].name, u.out[p].dim});
  std::vector<Wire> full;
  for (const auto& n : nodes) {
    full.push_back({n.name, Port::In, n.dim});
    full.push_back({n.name, Port::Out, n.dim});
  }
  return ProcessOperator::over(nodes, align(op, SpaceSig(full)));
}

UnitaryProcessWithInputs unitary_process_from_circuit(const BrokenCircuit& in_c) {
  in_c.validate();
  // Route any unconsumed node uppers through identity wires to fresh sinks so
  // the composition is square.
  BrokenCircuit c = in_c;
  {
    std::set<std::string> consumed, names;
    for (const auto& g : c.gates) {
      for (const auto& r : g.in) {
        consumed.insert(r.name);
        names.insert(r.name);
      }
      for (const auto& r : g.out) names.insert(r.name);
    }
    std::map<std::string, int> dim_of;
    for (const auto& g : c.gates) {
      for (const auto& r : g.in) dim_of[r.name] = r.dim;
      for (const auto& r : g.out) dim_of[r.name] = r.dim;
    }
    for (const auto& n : c.broken) {
      if (consumed.count(n)) continue;
      std::string snk = fresh_name(n + "_pass", names);
      names.insert(snk);
      Gate g;
      g.unitary = Matrix::Identity(dim_of.at(n), dim_of.at(n));
      g.in.push_back({n, dim_of.at(n), true});
      g.out.push_back({snk, dim_of.at(n), false});
      c.gates.push_back(g);
      c.traced.insert(snk);
    }
  }
  std::vector<int> order = c.gate_order();
  // Compose the gate matrices directly: acc maps the external inputs gathered
  // so far to the currently open wires. A broken node's upper segment is a
  // separate wire from its lower segment despite the shared name, so adopted
  // uppers get a synthetic key.
  std::vector<WireRef> open, ext_in;
  const std::string up_mark = "\x01up:";
  Matrix acc = Matrix::Ones(1, 1);
  auto wire_pos = [&](const std::string& name) {
    for (size_t i = 0; i < open.size(); ++i)
      if (open[i].name == name) return static_cast<int>(i);
    return -1;
  };
  auto input_key = [&](const WireRef& r) {
    return c.broken.count(r.name) ? up_mark + r.name : r.name;
  };
  for (int gi : order) {
    const Gate& g = c.gates[gi];
    // adopt external inputs this gate consumes
    for (const auto& r : g.in) {
      bool external = c.broken.count(r.name) || c.inputs.count(r.name);
      if (!external) {
        if (wire_pos(r.name) < 0)
          throw DomainError("composition: wire not yet produced: " + r.name);
        continue;
      }
      long d = acc.rows();
      Matrix bigger = Matrix::Zero(d * r.dim, acc.cols() * r.dim);
      for (int k = 0; k < r.dim; ++k) {
        // acc (x) identity on the new wire, new wire least significant
        for (long a = 0; a < d; ++a)
          for (long b = 0; b < acc.cols(); ++b)
            bigger(a * r.dim + k, b * r.dim + k) = acc(a, b);
      }
      acc = std::move(bigger);
      open.push_back({input_key(r), r.dim, c.broken.count(r.name) > 0});
      ext_in.push_back({r.name, r.dim, c.broken.count(r.name) > 0});
    }
    // permute open wires so the gate's inputs sit at the end in gate order
    std::vector<int> keep;
    for (size_t i = 0; i < open.size(); ++i) {
      bool used = false;
      for (const auto& r : g.in)
        if (open[i].name == input_key(r)) used = true;
      if (!used) keep.push_back(static_cast<int>(i));
    }
    std::vector<WireRef> new_order;
    for (int k : keep) new_order.push_back(open[k]);
    std::vector<int> perm;  // perm[k] = old position of new k-th wire
    for (int k : keep) perm.push_back(k);
    for (const auto& r : g.in) perm.push_back(wire_pos(input_key(r)));
    std::vector<int> old_dims;
    for (const auto& r : open) old_dims.push_back(r.dim);
    std::vector<int> new_dims;
    for (int p : perm) new_dims.push_back(old_dims[p]);
    IndexCoder oc_old(old_dims), oc_new(new_dims);
    Matrix permuted(acc.rows(), acc.cols());
    std::vector<int> nd, od(open.size());
    for (long i = 0; i < acc.rows(); ++i) {
      oc_new.decode(i, nd);
      for (size_t k = 0; k < perm.size(); ++k) od[perm[k]] = nd[k];
      permuted.row(i) = acc.row(oc_old.encode(od));
    }
    // apply 1_keep (x) U_g
    long dkeep = 1;
    for (int k : keep) dkeep *= old_dims[k];
    long din_g = refs_dim(g.in), dout_g = refs_dim(g.out);
    Matrix next(dkeep * dout_g, acc.cols());
    for (long a = 0; a < dkeep; ++a)
      next.block(a * dout_g, 0, dout_g, acc.cols()) =
          g.unitary * permuted.block(a * din_g, 0, din_g, acc.cols());
    acc = std::move(next);
    open = new_order;
    for (const auto& r : g.out) open.push_back(r);
  }
  UnitaryProcessWithInputs out;
  // canonical output order: broken nodes first (sorted), then traced wires
  std::map<std::string, WireRef> open_by_name;
  for (const auto& r : open) open_by_name[r.name] = r;
  for (const auto& n : c.broken) out.u.out.push_back({n, open_by_name.at(n).dim, true});
  for (const auto& n : c.traced) out.u.out.push_back({n, open_by_name.at(n).dim, false});
  if (out.u.out.size() != open.size())
    throw DomainError("composition: stray open wires");
  // rows: permute from `open` order to the canonical order
  {
    std::vector<int> old_dims, perm;
    for (const auto& r : open) old_dims.push_back(r.dim);
    for (const auto& r : out.u.out) perm.push_back(wire_pos(r.name));
    std::vector<int> new_dims;
    for (int p : perm) new_dims.push_back(old_dims[p]);
    IndexCoder oc_old(old_dims), oc_new(new_dims);
    Matrix final_m(acc.rows(), acc.cols());
    std::vector<int> nd, od(open.size());
    for (long i = 0; i < acc.rows(); ++i) {
      oc_new.decode(i, nd);
      for (size_t k = 0; k < perm.size(); ++k) od[perm[k]] = nd[k];
      final_m.row(i) = acc.row(oc_old.encode(od));
    }
    acc = std::move(final_m);
  }
  out.u.in = ext_in;
  out.u.unitary = std::move(acc);
  out.u.validate();
  out.lambda_states = c.inputs;
  return out;
}

Digraph causal_structure(const UnitaryProcessWithInputs& u, double eps) {
  Digraph g;
  NodeSet r = u.node_names(), p = u.lambda_names(), s = u.sink_names();
  for (const auto& n : r) g.nodes.insert(n);
  for (const auto& n : p) g.nodes.insert(n);
  for (const auto& n : s) g.nodes.insert(n);
  NodeSet sources = r, targets = r;
  sources.insert(p.begin(), p.end());
  targets.insert(s.begin(), s.end());
  for (const auto& a : sources)
    for (const auto& b : targets) {
      if (a == b && r.count(a) && r.count(b)) {
        // self-arrows node-out -> node-in are meaningful; keep the check
      }
      if (!no_influence(u.u, {a}, {b}, eps)) g.edges.insert({a, b});
    }
  return g;
}

FactorizationReport verify_factorization(const Gate& g,
                                         const std::vector<std::set<std::string>>& output_groups,
                                         const std::vector<std::set<std::string>>& influence_sets) {
  if (output_groups.size() != influence_sets.size())
    throw DomainError("verify_factorization: group/set count mismatch");
  FactorizationReport rep;
  for (size_t i = 0; i < output_groups.size(); ++i) {
    LabeledOperator m = reduced_cj(g, output_groups[i]);
    // precondition: inputs outside the influence set act trivially
    std::vector<Wire> other;
    long dother = 1;
    for (const auto& r : g.in)
      if (!influence_sets[i].count(r.name)) {
        other.push_back({r.name, Port::Out, r.dim});
        dother *= r.dim;
      }
    LabeledOperator tr = m;
    if (!other.empty()) {
      tr = partial_trace(m, other);
      tr.mat /= static_cast<double>(dother);
      LabeledOperator back = align(tr, m.sig);
      double viol = (back.mat - m.mat).norm() / std::max(1.0, m.norm());
      rep.worst_precondition = std::max(rep.worst_precondition, viol);
      if (viol > tol::num) rep.preconditions = false;
    }
    rep.marginals.push_back(tr);
  }
  for (size_t i = 0; i < rep.marginals.size(); ++i)
    for (size_t j = i + 1; j < rep.marginals.size(); ++j) {
      double cn = commutator_norm(rep.marginals[i], rep.marginals[j]) /
                  std::max(1.0, rep.marginals[i].norm() * rep.marginals[j].norm());
      rep.worst_commutator = std::max(rep.worst_commutator, cn);
      if (cn > tol::num) rep.commutation = false;
    }
  {
    LabeledOperator ref = full_cj(g);
    LabeledOperator acc = LabeledOperator::identity(ref.sig);
    for (const auto& m : rep.marginals) acc = multiply(acc, m);
    acc = align(acc, ref.sig);
    rep.product_error = (acc.mat - ref.mat).norm() / std::max(1.0, ref.norm());
    if (rep.product_error > tol::num) rep.product = false;
  }
  return rep;
}

CompatibilityReport check_compatibility(const ProcessOperator& sigma, const Dag& g,
                                        const UnitaryProcessWithInputs& u) {
  CompatibilityReport rep;
  if (u.node_names() != sigma.node_names())
    throw DomainError("check_compatibility: node sets differ");
  {
    ProcessOperator m = u.marginal_nodes();
    rep.marginal_error = (m.op.mat - sigma.op.mat).norm() / std::max(1.0, sigma.op.norm());
    rep.marginal_recovered = rep.marginal_error <= 1e-6;
  }
  rep.no_influence_ok = true;
  for (const auto& i : g.nodes()) {
    NodeSet pa = g.parents(i);
    for (const auto& j : g.nodes()) {
      if (pa.count(j)) continue;
      if (!no_influence(u.u, {j}, {i})) {
        rep.no_influence_ok = false;
        rep.violated.push_back(j + "->" + i);
      }
    }
    for (const auto& [owner, lam] : u.lambda_of) {
      if (owner == i) continue;
      if (!no_influence(u.u, {lam}, {i})) {
        rep.no_influence_ok = false;
        rep.violated.push_back(lam + "->" + i);
      }
    }
  }
  return rep;
}

namespace {

struct DilBlock {
  Matrix w;  // frontier-space isometry, D x (dL*dR)
  int dL = 1, dR = 1;
  std::vector<Matrix> kraus;  // dn x dL each
};

std::vector<Matrix> kraus_of_choi(const Matrix& choi, int dout, int dl) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((choi + choi.adjoint()) / 2.0);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Matrix> ks;
  for (int e = 0; e < es.eigenvalues().size(); ++e) {
    double lam = es.eigenvalues()(e);
    if (lam <= tol::eig * scale) continue;
    Matrix k(dout, dl);
    for (int a = 0; a < dout; ++a)
      for (int l = 0; l < dl; ++l) k(a, l) = std::sqrt(lam) * es.eigenvectors()(a * dl + l, e);
    ks.push_back(k);
  }
  return ks;
}

// Completes the isometry columns (filled[i] true) to a full unitary.
Matrix complete_unitary(Matrix partial, const std::vector<bool>& filled) {
  long d = partial.rows();
  std::vector<Eigen::VectorXcd> basis;
  for (long c = 0; c < partial.cols(); ++c)
    if (filled[c]) basis.push_back(partial.col(c));
  auto orth = [&](Eigen::VectorXcd v) -> std::optional<Eigen::VectorXcd> {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= (b.adjoint() * v)(0) * b;
    double n = v.norm();
    if (n < 1e-7) return std::nullopt;
    return Eigen::VectorXcd(v / n);
  };
  long next = 0;
  for (long c = 0; c < partial.cols(); ++c) {
    if (filled[c]) continue;
    std::optional<Eigen::VectorXcd> nv;
    while (!nv && next < d) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
      e(next++) = 1.0;
      nv = orth(e);
    }
    if (!nv) throw DilationError("unitary completion failed");
    partial.col(c) = *nv;
    basis.push_back(*nv);
  }
  return partial;
}

}  // namespace

BrokenCircuit dilate_markov(const ProcessOperator& sigma, const Dag& g, double eps) {
  MarkovReport rep = check_markov(sigma, g);
  if (!rep.markov)
    throw DilationError("dilate_markov: process operator is not Markov for the graph");
  std::vector<std::string> order = g.topological_order();
  std::set<std::string> used(order.begin(), order.end());

  std::map<std::string, LabeledOperator> pulled = rep.channels;
  BrokenCircuit c;
  c.broken = NodeSet(order.begin(), order.end());

  std::string prev_node, prev_carry;
  int prev_node_dim = 0, prev_carry_dim = 0;

  for (size_t step = 0; step < order.size(); ++step) {
    const std::string& v = order[step];
    int dn = sigma.dim_of(v);
    std::vector<Wire> fw;
    if (step > 0) {
      fw.push_back({prev_node, Port::Out, prev_node_dim});
      fw.push_back({prev_carry, Port::Out, prev_carry_dim});
    }
    SpaceSig fwsig(fw);
    long dfront = fwsig.total_dim();

    // Remaining channels after this node.
    std::vector<std::string> future(order.begin() + step + 1, order.end());

    std::vector<DilBlock> blocks;
    if (step == 0 || dfront == 1) {
      DilBlock b;
      b.w = Matrix::Identity(dfront, dfront);
      b.dL = static_cast<int>(dfront);
      b.dR = 1;
      std::vector<Wire> arrangement{Wire{v, Port::In, dn}};
      for (const auto& w : fwsig.wires()) arrangement.push_back(w);
      LabeledOperator padded = align(pulled.at(v), SpaceSig::merge(pulled.at(v).sig, fwsig));
      b.kraus = kraus_of_choi(arranged(padded, arrangement), dn, b.dL);
      blocks.push_back(std::move(b));
    } else {
      LabeledOperator rho1 = align(pulled.at(v), SpaceSig::merge(pulled.at(v).sig, fwsig));
      // With no remaining channels, splitting against the identity still
      // separates the factor this channel ignores into the carry.
      LabeledOperator rest = LabeledOperator::identity(fwsig);
      for (const auto& f : future) rest = multiply(rest, pulled.at(f));
      rest = align(rest, SpaceSig::merge(rest.sig, fwsig));
      SplitChannels sc = split_commuting(rho1, rest, fwsig.wires());
      for (size_t bi = 0; bi < sc.decomp.blocks.size(); ++bi) {
        DilBlock b;
        b.w = sc.decomp.blocks[bi].isometry;
        b.dL = sc.decomp.blocks[bi].dimL;
        b.dR = sc.decomp.blocks[bi].dimR;
        b.kraus = kraus_of_choi(sc.left[bi], dn, b.dL);
        blocks.push_back(std::move(b));
      }
    }

    int fstar = 1;
    long sum_r = 0;
    bool uniform_dl = true;
    for (const auto& b : blocks) {
      fstar = std::max(fstar, static_cast<int>(b.kraus.size()));
      sum_r += b.dR;
      if (b.dL != blocks.front().dL) uniform_dl = false;
    }
    long carry, dlam;
    Matrix umat;
    if (uniform_dl) {
      // Noise-local form: per block, a unitary L x lambda -> node x sink; the
      // R factor routes untouched into its carry slot, so the fresh noise wire
      // can only influence this node and its sink.
      int dl = blocks.front().dL;
      while ((static_cast<long>(dn) * fstar) % dl != 0) ++fstar;
      dlam = static_cast<long>(dn) * fstar / dl;
      carry = std::max<long>(1, sum_r);
      long dout = static_cast<long>(dn) * fstar * carry;
      umat = Matrix::Zero(dout, dfront * dlam);
      long offset = 0;
      for (const auto& b : blocks) {
        // per-block unitary on (L, lambda) -> (node, sink)
        long dblock = static_cast<long>(dl) * dlam;  // == dn * fstar
        Matrix ub = Matrix::Zero(dblock, dblock);
        std::vector<bool> filled(dblock, false);
        for (int l = 0; l < dl; ++l) {
          Eigen::VectorXcd col = Eigen::VectorXcd::Zero(dblock);
          for (size_t k = 0; k < b.kraus.size(); ++k)
            for (int a = 0; a < dn; ++a)
              col(static_cast<long>(a) * fstar + static_cast<long>(k)) += b.kraus[k](a, l);
          ub.col(static_cast<long>(l) * dlam) = col;
          filled[static_cast<long>(l) * dlam] = true;
        }
        ub = complete_unitary(std::move(ub), filled);
        // scatter: input (frontier = W_j|l,r> transposed, lambda m) ->
        // output (a, k, slot offset + r)
        for (int l = 0; l < dl; ++l)
          for (int r = 0; r < b.dR; ++r)
            for (long m = 0; m < dlam; ++m) {
              Eigen::VectorXcd target = Eigen::VectorXcd::Zero(dout);
              for (int a = 0; a < dn; ++a)
                for (int k = 0; k < fstar; ++k)
                  target((static_cast<long>(a) * fstar + k) * carry + offset + r) =
                      ub(static_cast<long>(a) * fstar + k, static_cast<long>(l) * dlam + m);
              // frontier wires are dual factors: transpose, not adjoint
              Eigen::VectorXcd w = b.w.col(l * b.dR + r);
              for (long f = 0; f < dfront; ++f)
                if (w(f) != Scalar(0)) umat.col(f * dlam + m) += w(f) * target;
            }
        offset += b.dR;
      }
    } else {
      // Mixed block sizes: generic unitary completion. The contraction is
      // still exact; noise locality is not guaranteed on this path.
      carry = std::max<long>(1, sum_r);
      while ((static_cast<long>(dn) * fstar * carry) % dfront != 0) ++carry;
      dlam = static_cast<long>(dn) * fstar * carry / dfront;
      long dout = static_cast<long>(dn) * fstar * carry;
      Matrix vmat = Matrix::Zero(dout, dfront);
      long offset = 0;
      for (const auto& b : blocks) {
        for (int l = 0; l < b.dL; ++l)
          for (int r = 0; r < b.dR; ++r) {
            Eigen::VectorXcd target = Eigen::VectorXcd::Zero(dout);
            for (size_t k = 0; k < b.kraus.size(); ++k)
              for (int a = 0; a < dn; ++a)
                target((static_cast<long>(a) * fstar + static_cast<long>(k)) * carry + offset +
                       r) += b.kraus[k](a, l);
            vmat += target * b.w.col(l * b.dR + r).transpose();
          }
        offset += b.dR;
      }
      umat = Matrix::Zero(dout, dfront * dlam);
      std::vector<bool> filled(dfront * dlam, false);
      for (long f = 0; f < dfront; ++f) {
        umat.col(f * dlam) = vmat.col(f);
        filled[f * dlam] = true;
      }
      umat = complete_unitary(std::move(umat), filled);
    }

    std::string lam = fresh_name("lam" + std::to_string(step + 1), used);
    std::string snk = fresh_name("snk" + std::to_string(step + 1), used);
    std::string car = fresh_name("car" + std::to_string(step + 1), used);
    used.insert(lam);
    used.insert(snk);
    used.insert(car);

    Gate gate;
    gate.unitary = umat;
    for (const auto& w : fwsig.wires()) gate.in.push_back({w.node, w.dim, c.broken.count(w.node) > 0});
    gate.in.push_back({lam, static_cast<int>(dlam), false});
    gate.out.push_back({v, dn, true});
    gate.out.push_back({snk, fstar, false});
    gate.out.push_back({car, static_cast<int>(carry), false});
    gate.validate();
    c.gates.push_back(gate);
    Matrix lam0 = Matrix::Zero(dlam, dlam);
    lam0(0, 0) = 1.0;
    c.inputs[lam] = lam0;
    c.traced.insert(snk);

    // Pull the remaining channels' frontier dependence onto the new carry.
    if (step > 0) {
      for (const auto& f : future) {
        LabeledOperator& ch = pulled.at(f);
        bool touches = false;
        for (const auto& w : fwsig.wires())
          if (ch.sig.find(w.node, w.port)) touches = true;
        if (!touches) continue;
        LabeledOperator padded = align(ch, SpaceSig::merge(ch.sig, fwsig));
        std::vector<Wire> oth;
        for (const auto& w : padded.sig.wires())
          if (!fwsig.find(w.node, w.port)) oth.push_back(w);
        SpaceSig osig(oth);
        long doth = osig.total_dim();
        std::vector<Wire> arrangement = osig.wires();
        for (const auto& w : fwsig.wires()) arrangement.push_back(w);
        Matrix m = arranged(padded, arrangement);
        Matrix nm = Matrix::Zero(doth * carry, doth * carry);
        long off = 0;
        for (const auto& b : blocks) {
          long dl = b.dL, dr = b.dR;
          Matrix lift = Matrix::Zero(doth * dfront, doth * dl * dr);
          for (long a = 0; a < doth; ++a)
            lift.block(a * dfront, a * dl * dr, dfront, dl * dr) = b.w;
          Matrix x = lift.adjoint() * m * lift;  // (oth, L, R)
          // must be 1_L (x) x_b
          Matrix xb = Matrix::Zero(doth * dr, doth * dr);
          for (long a = 0; a < doth; ++a)
            for (long ap = 0; ap < doth; ++ap)
              for (long r = 0; r < dr; ++r)
                for (long rp = 0; rp < dr; ++rp) {
                  Scalar s = 0;
                  for (long l = 0; l < dl; ++l)
                    s += x((a * dl + l) * dr + r, (ap * dl + l) * dr + rp);
                  xb(a * dr + r, ap * dr + rp) = s / static_cast<double>(dl);
                }
          // residual check
          Matrix recon = Matrix::Zero(x.rows(), x.cols());
          for (long a = 0; a < doth; ++a)
            for (long ap = 0; ap < doth; ++ap)
              for (long l = 0; l < dl; ++l)
                for (long r = 0; r < dr; ++r)
                  for (long rp = 0; rp < dr; ++rp)
                    recon((a * dl + l) * dr + r, (ap * dl + l) * dr + rp) =
                        xb(a * dr + r, ap * dr + rp);
          if ((recon - x).norm() > 1e-6 * std::max(1.0, x.norm()))
            throw DilationError("dilate_markov: channel does not respect the block structure");
          for (long a = 0; a < doth; ++a)
            for (long ap = 0; ap < doth; ++ap)
              for (long r = 0; r < dr; ++r)
                for (long rp = 0; rp < dr; ++rp)
                  nm(a * carry + off + r, ap * carry + off + rp) +=
                      xb(a * dr + r, ap * dr + rp);
          off += dr;
        }
        std::vector<Wire> nf = osig.wires();
        nf.push_back({car, Port::Out, static_cast<int>(carry)});
        ch = LabeledOperator::from_factors(nf, nm);
      }
    }

    prev_node = v;
    prev_node_dim = dn;
    prev_carry = car;
    prev_carry_dim = static_cast<int>(carry);
  }

  // Terminal gate: route the dangling frontier into one traced sink.
  {
    std::string snk = fresh_name("snk" + std::to_string(order.size() + 1), used);
    used.insert(snk);
    Gate gate;
    long d = static_cast<long>(prev_node_dim) * prev_carry_dim;
    gate.unitary = Matrix::Identity(d, d);
    SpaceSig fwsig({Wire{prev_node, Port::Out, prev_node_dim},
                    Wire{prev_carry, Port::Out, prev_carry_dim}});
    for (const auto& w : fwsig.wires()) gate.in.push_back({w.node, w.dim, c.broken.count(w.node) > 0});
    gate.out.push_back({snk, static_cast<int>(d), false});
    c.gates.push_back(gate);
    c.traced.insert(snk);
  }

  ProcessOperator back = contract(c, ContractMode::NodesOnly);
  double err = (back.op.mat - sigma.op.mat).norm() / std::max(1.0, sigma.op.norm());
  if (err > eps)
    throw DilationError("dilate_markov: reconstruction failed (error " + std::to_string(err) +
                        ")");
  return c;
}

BrokenCircuit random_staircase_circuit(const std::vector<int>& node_dims, int edge_density,
                                       Rng& rng) {
  // Controlled-copy staircase: each gate copies its control wires into the
  // carry and applies a control-dependent unitary to a fresh noise wire, so
  // every noise wire is a direct cause of exactly one node. edge_density in
  // [0,100]: chance that a node actually depends on each control factor.
  if (node_dims.empty()) throw DomainError("random_staircase_circuit: no nodes");
  BrokenCircuit c;
  int n = static_cast<int>(node_dims.size());
  auto node = [&](int i) { return "N" + std::to_string(i + 1); };
  for (int i = 0; i < n; ++i) c.broken.insert(node(i));
  {
    Gate g;
    g.unitary = rng.unitary(node_dims[0]);
    g.in.push_back({"lam1", node_dims[0], false});
    g.out.push_back({node(0), node_dims[0], true});
    c.gates.push_back(g);
    c.inputs["lam1"] = rng.density(node_dims[0]);
  }
  long carry = 1;
  for (int i = 1; i < n; ++i) {
    int dprev = node_dims[i - 1], dcur = node_dims[i];
    long ctl = dprev * carry;
    // per control value: a random unitary on the noise wire; with probability
    // (100 - edge_density)% the previous node's value is ignored
    bool depends_prev = rng.uniform_int(0, 99) < edge_density;
    std::vector<Matrix> us;
    for (long v = 0; v < ctl; ++v) us.push_back(Matrix());
    for (long cr = 0; cr < carry; ++cr) {
      Matrix shared = rng.unitary(dcur);
      for (int p = 0; p < dprev; ++p)
        us[p * carry + cr] = depends_prev ? rng.unitary(dcur) : shared;
    }
    long din = ctl * dcur;
    Matrix u = Matrix::Zero(din, din);
    for (long v = 0; v < ctl; ++v)
      for (int l = 0; l < dcur; ++l)
        for (int out = 0; out < dcur; ++out)
          u((static_cast<long>(out) * ctl + v), v * dcur + l) += us[v](out, l);
    Gate g;
    g.unitary = u;
    g.in.push_back({node(i - 1), dprev, true});
    if (carry > 1) g.in.push_back({"car" + std::to_string(i), static_cast<int>(carry), false});
    g.in.push_back({"lam" + std::to_string(i + 1), dcur, false});
    g.out.push_back({node(i), dcur, true});
    g.out.push_back({"car" + std::to_string(i + 1), static_cast<int>(ctl), false});
    c.gates.push_back(g);
    c.inputs["lam" + std::to_string(i + 1)] = rng.density(dcur);
    carry = ctl;
  }
  {
    Gate g;
    long d = static_cast<long>(node_dims[n - 1]) * carry;
    g.unitary = Matrix::Identity(d, d);
    g.in.push_back({node(n - 1), node_dims[n - 1], true});
    if (carry > 1) g.in.push_back({"car" + std::to_string(n), static_cast<int>(carry), false});
    g.out.push_back({"snkF", static_cast<int>(d), false});
    c.gates.push_back(g);
    c.traced.insert("snkF");
  }
  return c;
}

}  // namespace qcm
