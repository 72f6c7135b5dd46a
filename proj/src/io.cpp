#include "qcm/io.hpp"

#include <fstream>

namespace qcm::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const Json& need(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

Json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void save_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Json matrix_to_json(const Matrix& m) {
  Json arr = Json::array();
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c)
      arr.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
  return arr;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "matrix must be an array of [re,im] pairs");
  long n = static_cast<long>(j.size());
  long side = static_cast<long>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) fail(where, "matrix entry count is not a square");
  Matrix m(side, side);
  for (long i = 0; i < n; ++i) {
    const Json& e = j[i];
    if (!e.is_array() || e.size() != 2) fail(where, "matrix entries must be [re,im]");
    m(i / side, i % side) = Scalar(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

Json operator_to_json(const LabeledOperator& op) {
  Json j;
  Json wires = Json::array();
  for (const auto& w : op.sig.wires())
    wires.push_back({{"node", w.node}, {"port", to_string(w.port)}, {"dim", w.dim}});
  j["wires"] = wires;
  j["matrix"] = matrix_to_json(op.mat);
  return j;
}

LabeledOperator operator_from_json(const Json& j, const std::string& where) {
  std::vector<Wire> wires;
  for (const auto& wj : need(j, "wires", where)) {
    Wire w;
    w.node = need(wj, "node", where).get<std::string>();
    std::string port = need(wj, "port", where).get<std::string>();
    if (port == "in")
      w.port = Port::In;
    else if (port == "out")
      w.port = Port::Out;
    else
      fail(where, "port must be 'in' or 'out'");
    w.dim = need(wj, "dim", where).get<int>();
    wires.push_back(w);
  }
  for (size_t i = 1; i < wires.size(); ++i)
    if (!(wires[i - 1] < wires[i]))
      fail(where, "wires are not in canonical order at index " + std::to_string(i));
  Matrix m = matrix_from_json(need(j, "matrix", where), where);
  try {
    return LabeledOperator(SpaceSig(wires), std::move(m));
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

Json dag_to_json(const Dag& g, const std::map<std::string, int>& dims) {
  Json j;
  Json nodes = Json::array();
  for (const auto& n : g.nodes()) {
    Json nj{{"name", n}};
    auto it = dims.find(n);
    if (it != dims.end()) nj["dim"] = it->second;
    nodes.push_back(nj);
  }
  j["nodes"] = nodes;
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back(Json::array({a, b}));
  j["edges"] = edges;
  return j;
}

Dag dag_from_json(const Json& j, std::map<std::string, int>* dims, const std::string& where) {
  NodeSet nodes;
  for (const auto& nj : need(j, "nodes", where)) {
    std::string name = need(nj, "name", where).get<std::string>();
    if (!nodes.insert(name).second) fail(where, "duplicate node " + name);
    if (dims) (*dims)[name] = nj.contains("dim") ? nj["dim"].get<int>() : 2;
  }
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& ej : need(j, "edges", where)) {
    if (!ej.is_array() || ej.size() != 2) fail(where, "edges must be [from,to] pairs");
    edges.insert({ej[0].get<std::string>(), ej[1].get<std::string>()});
  }
  try {
    return Dag(nodes, edges);
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

Json digraph_to_json(const Digraph& g) {
  Json j;
  Json nodes = Json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"name", n}});
  j["nodes"] = nodes;
  Json edges = Json::array();
  for (const auto& [a, b] : g.edges) edges.push_back(Json::array({a, b}));
  j["edges"] = edges;
  j["acyclic"] = g.is_acyclic();
  return j;
}

Json ccm_to_json(const Ccm& m) {
  Json j;
  j["graph"] = dag_to_json(m.graph);
  j["cards"] = Json::object();
  for (const auto& [n, c] : m.cards) j["cards"][n] = c;
  Json cpts = Json::array();
  for (const auto& [n, t] : m.cpts) {
    Json tj;
    tj["child"] = t.child;
    tj["parents"] = t.parents;
    tj["table"] = t.table;
    cpts.push_back(tj);
  }
  j["cpts"] = cpts;
  return j;
}

Ccm ccm_from_json(const Json& j, const std::string& where) {
  Ccm m;
  m.graph = dag_from_json(need(j, "graph", where), nullptr, where + ".graph");
  for (const auto& [k, v] : need(j, "cards", where).items()) m.cards[k] = v.get<int>();
  for (const auto& tj : need(j, "cpts", where)) {
    Cpt t;
    t.child = need(tj, "child", where).get<std::string>();
    for (const auto& p : need(tj, "parents", where)) t.parents.push_back(p.get<std::string>());
    std::sort(t.parents.begin(), t.parents.end());
    for (const auto& v : need(tj, "table", where)) t.table.push_back(v.get<double>());
    m.cpts[t.child] = t;
  }
  try {
    m.validate();
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
  return m;
}

Json cpm_to_json(const Cpm& k) {
  Json j;
  Json nodes = Json::array();
  for (const auto& [n, c] : k.nodes) nodes.push_back({{"name", n}, {"card", c}});
  j["nodes"] = nodes;
  j["tensor"] = k.tensor.data;
  return j;
}

Cpm cpm_from_json(const Json& j, const std::string& where) {
  std::vector<std::pair<std::string, int>> nodes;
  for (const auto& nj : need(j, "nodes", where))
    nodes.push_back({need(nj, "name", where).get<std::string>(), need(nj, "card", where).get<int>()});
  std::vector<double> data;
  for (const auto& v : need(j, "tensor", where)) data.push_back(v.get<double>());
  try {
    return Cpm::from_tensor(std::move(nodes), std::move(data));
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

Json process_to_json(const ProcessOperator& sigma) {
  Json j = operator_to_json(sigma.op);
  Json nodes = Json::array();
  for (const auto& n : sigma.nodes) nodes.push_back({{"name", n.name}, {"dim", n.dim}});
  j["nodes"] = nodes;
  return j;
}

ProcessOperator process_from_json(const Json& j, const std::string& where) {
  LabeledOperator op = operator_from_json(j, where);
  std::vector<QNode> nodes;
  for (const auto& nj : need(j, "nodes", where))
    nodes.push_back({need(nj, "name", where).get<std::string>(), need(nj, "dim", where).get<int>()});
  try {
    return ProcessOperator::over(std::move(nodes), std::move(op));
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

Json dist_to_json(const Dist& d) {
  Json j;
  Json vars = Json::array();
  for (size_t i = 0; i < d.vars.size(); ++i)
    vars.push_back({{"name", d.vars[i]}, {"card", d.cards[i]}});
  j["variables"] = vars;
  j["probs"] = d.p;
  return j;
}

Dist dist_from_json(const Json& j, const std::string& where) {
  std::vector<std::string> vars;
  std::vector<int> cards;
  for (const auto& vj : need(j, "variables", where)) {
    vars.push_back(need(vj, "name", where).get<std::string>());
    cards.push_back(need(vj, "card", where).get<int>());
  }
  Dist d(vars, cards);
  const Json& pj = need(j, "probs", where);
  if (pj.size() != d.p.size()) fail(where, "probs length mismatch");
  for (size_t i = 0; i < d.p.size(); ++i) d.p[i] = pj[i].get<double>();
  return d;
}

namespace {

Json wireref_to_json(const WireRef& r) {
  if (r.is_node) return Json{{"node", r.name}, {"dim", r.dim}};
  return Json{{"label", r.name}, {"dim", r.dim}};
}

WireRef wireref_from_json(const Json& j, const std::string& where) {
  WireRef r;
  if (j.contains("node")) {
    r.name = j["node"].get<std::string>();
    r.is_node = true;
  } else if (j.contains("label")) {
    r.name = j["label"].get<std::string>();
    r.is_node = false;
  } else {
    fail(where, "wire ref needs 'node' or 'label'");
  }
  r.dim = need(j, "dim", where).get<int>();
  return r;
}

}  // namespace

Json circuit_to_json(const BrokenCircuit& c) {
  Json j;
  Json gates = Json::array();
  for (const auto& g : c.gates) {
    Json gj;
    gj["unitary"] = matrix_to_json(g.unitary);
    Json in = Json::array(), out = Json::array();
    for (const auto& r : g.in) in.push_back(wireref_to_json(r));
    for (const auto& r : g.out) out.push_back(wireref_to_json(r));
    gj["in"] = in;
    gj["out"] = out;
    gates.push_back(gj);
  }
  j["gates"] = gates;
  j["broken"] = Json(c.broken);
  Json inputs = Json::object();
  for (const auto& [n, st] : c.inputs) inputs[n] = matrix_to_json(st);
  j["inputs"] = inputs;
  j["traced"] = Json(c.traced);
  return j;
}

BrokenCircuit circuit_from_json(const Json& j, const std::string& where) {
  BrokenCircuit c;
  for (const auto& gj : need(j, "gates", where)) {
    Gate g;
    g.unitary = matrix_from_json(need(gj, "unitary", where), where);
    for (const auto& rj : need(gj, "in", where)) g.in.push_back(wireref_from_json(rj, where));
    for (const auto& rj : need(gj, "out", where)) g.out.push_back(wireref_from_json(rj, where));
    c.gates.push_back(g);
  }
  for (const auto& n : need(j, "broken", where)) c.broken.insert(n.get<std::string>());
  if (j.contains("inputs"))
    for (const auto& [k, v] : j["inputs"].items()) c.inputs[k] = matrix_from_json(v, where);
  if (j.contains("traced"))
    for (const auto& n : j["traced"]) c.traced.insert(n.get<std::string>());
  try {
    c.validate();
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
  return c;
}

Json qcm_to_json(const Qcm& m) {
  Json j;
  j["graph"] = dag_to_json(m.graph, m.dims);
  Json chans = Json::array();
  for (const auto& [n, ch] : m.channels)
    chans.push_back({{"node", n}, {"operator", operator_to_json(ch)}});
  j["channels"] = chans;
  return j;
}

Qcm qcm_from_json(const Json& j, const std::string& where) {
  Qcm m;
  m.graph = dag_from_json(need(j, "graph", where), &m.dims, where + ".graph");
  for (const auto& cj : need(j, "channels", where)) {
    std::string node = need(cj, "node", where).get<std::string>();
    m.channels[node] = operator_from_json(need(cj, "operator", where), where + "." + node);
  }
  try {
    m.validate();
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
  return m;
}

}  // namespace qcm::io
