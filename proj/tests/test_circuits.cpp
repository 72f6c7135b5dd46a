#include "doctest.h"
#include "qcm/circuits.hpp"
#include "qcm/discovery.hpp"
#include "test_helpers.hpp"

using namespace qcm;
using namespace qt;

TEST_SUITE_BEGIN("circuits");

namespace {

// Preparation gate: feeds a state wire into a node's lower segment.
Gate prep_gate(const std::string& from, const std::string& node, int d) {
  Gate g;
  g.unitary = Matrix::Identity(d, d);
  g.in.push_back({from, d, false});
  g.out.push_back({node, d, true});
  return g;
}

// The fine-tuned realization: CNOT with control on the node's upper segment
// and target a coin wire; control side discarded, target feeds the next node.
BrokenCircuit cnot_coin_circuit(const Matrix& coin) {
  BrokenCircuit c;
  c.broken = {"A", "B"};
  c.gates.push_back(prep_gate("inA", "A", 2));
  Gate g;
  g.unitary = cnot();
  g.in.push_back({"A", 2, true});
  g.in.push_back({"coin", 2, false});
  g.out.push_back({"ctl", 2, false});
  g.out.push_back({"B", 2, true});
  c.gates.push_back(g);
  c.inputs["inA"] = Matrix::Identity(2, 2) / 2.0;
  c.inputs["coin"] = coin;
  c.traced = {"ctl"};
  return c;
}

}  // namespace

TEST_CASE("plumbing validation") {
  BrokenCircuit c = cnot_coin_circuit(Matrix::Identity(2, 2) / 2.0);
  CHECK_NOTHROW(c.validate());
  // consuming a wire twice is rejected
  BrokenCircuit bad = c;
  Gate extra;
  extra.unitary = Matrix::Identity(2, 2);
  extra.in.push_back({"coin", 2, false});
  extra.out.push_back({"junk", 2, false});
  bad.gates.push_back(extra);
  bad.traced.insert("junk");
  CHECK_THROWS_AS(bad.validate(), DomainError);
  // non-unitary gate
  BrokenCircuit nu = c;
  nu.gates[0].unitary *= 2.0;
  CHECK_THROWS_AS(nu.validate(), DomainError);
}

TEST_CASE("single identity gate across a broken wire gives the link comb") {
  BrokenCircuit c;
  c.broken = {"A"};
  c.gates.push_back(prep_gate("in", "A", 2));
  Gate g;
  g.unitary = Matrix::Identity(2, 2);
  g.in.push_back({"A", 2, true});
  g.out.push_back({"f", 2, false});
  c.gates.push_back(g);
  c.inputs["in"] = ket(0, 2);
  c.traced = {"f"};
  ProcessOperator s = contract(c);
  // sigma = 1_{A out} (x) |0><0|_{A in}
  LabeledOperator expect =
      align(LabeledOperator(SpaceSig({win("A")}), ket(0, 2)), s.op.sig);
  CHECK(rel_err(s.op.mat, expect.mat) < 1e-12);
  CHECK(validate(s).ok());
}

TEST_CASE("fine-tuned realization marginal") {
  // with the coin maximally mixed, the A-to-B channel is fully depolarizing
  ProcessOperator s = contract(cnot_coin_circuit(Matrix::Identity(2, 2) / 2.0));
  CHECK(validate(s).ok());
  // sigma = (1/2) 1_{B in} (x) 1_{A out} (x) (1/2) 1_{A in} (x) 1_{B out}
  CHECK(rel_err(s.op.mat, Matrix::Identity(16, 16) / 4.0) < 1e-12);
  Digraph induced = simple_induced_graph(s);
  CHECK(induced.edges.empty());

  // conditioning the coin restores signalling
  ProcessOperator s0 = contract(cnot_coin_circuit(ket(0, 2)));
  CHECK(validate(s0).ok());
  Digraph g0 = simple_induced_graph(s0);
  CHECK(g0.edges.count({"A", "B"}) == 1);
}

TEST_CASE("contract matches dense assembly on a two-gate circuit") {
  Rng rng(71);
  // lam -> U1 -> (A, w); (A-upper, w) -> U2 -> (B, f)
  Matrix u1 = rng.unitary(4), u2 = rng.unitary(4);
  BrokenCircuit c;
  c.broken = {"A", "B"};
  {
    Gate g;
    g.unitary = u1;
    g.in.push_back({"lam", 4, false});
    g.out.push_back({"A", 2, true});
    g.out.push_back({"w", 2, false});
    c.gates.push_back(g);
  }
  {
    Gate g;
    g.unitary = u2;
    g.in.push_back({"A", 2, true});
    g.in.push_back({"w", 2, false});
    g.out.push_back({"B", 2, true});
    g.out.push_back({"f", 2, false});
    c.gates.push_back(g);
  }
  Matrix rho = rng.density(4);
  c.inputs["lam"] = rho;
  c.traced = {"f"};
  ProcessOperator s = contract(c);
  CHECK(validate(s).ok());

  // oracle: dense assembly of the same operator from channel operators
  LabeledOperator cj1 = choi_of_kraus({u1}, {wout("lam", 4)}, {win("A"), win("w")});
  LabeledOperator cj2 =
      choi_of_kraus({u2}, {wout("A"), wout("w")}, {win("B"), win("f")});
  LabeledOperator st(SpaceSig({win("lam", 4)}), rho);
  LabeledOperator big = multiply(multiply(cj1, cj2), st);
  big = link_trace(big, {"w", "lam"});
  big = partial_trace(big, {win("f")});
  big = align(big, s.op.sig);
  CHECK(rel_err(s.op.mat, big.mat) < 1e-11);

  // keeping lambdas and sinks as nodes gives a valid bigger process
  ProcessOperator sall = contract(c, ContractMode::NodesLambdasFs);
  CHECK(sall.nodes.size() == 4);
  CHECK(validate(sall, false).psd);
  CHECK(validate(sall, false).trace_rule);
  // marginalizing it back reproduces the node process
  ProcessOperator back = marginal_process(sall, {"A", "B"});
  CHECK(rel_err(back.op.mat, s.op.mat) < 1e-11);
}

TEST_CASE("no-influence relations of standard gates") {
  Gate sw;
  sw.unitary = swap_gate();
  sw.in = {{"a1", 2, false}, {"a2", 2, false}};
  sw.out = {{"b1", 2, false}, {"b2", 2, false}};
  CHECK(no_influence(sw, {"a1"}, {"b1"}));
  CHECK_FALSE(no_influence(sw, {"a1"}, {"b2"}));

  // CNOT: the control influences both outputs, and phase kickback makes the
  // target influence the control output as well.
  Gate cn;
  cn.unitary = cnot();
  cn.in = {{"ctl", 2, false}, {"tgt", 2, false}};
  cn.out = {{"ctlo", 2, false}, {"tgto", 2, false}};
  CHECK_FALSE(no_influence(cn, {"tgt"}, {"ctlo"}));
  CHECK_FALSE(no_influence(cn, {"ctl"}, {"tgto"}));
  CHECK_FALSE(no_influence(cn, {"tgt"}, {"tgto"}));

  // product unitaries never cross-influence
  Rng rng(72);
  Matrix u1 = rng.unitary(2), u2 = rng.unitary(2);
  Matrix prod = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c2 = 0; c2 < 2; ++c2)
        for (int d = 0; d < 2; ++d) prod(a * 2 + b, c2 * 2 + d) = u1(a, c2) * u2(b, d);
  Gate pg;
  pg.unitary = prod;
  pg.in = {{"x1", 2, false}, {"x2", 2, false}};
  pg.out = {{"y1", 2, false}, {"y2", 2, false}};
  CHECK(no_influence(pg, {"x1"}, {"y2"}));
  CHECK(no_influence(pg, {"x2"}, {"y1"}));
  CHECK_FALSE(no_influence(pg, {"x1"}, {"y1"}));
}

TEST_CASE("grouped outputs inherit pairwise no-influence") {
  // swap (x) identity: input 1 influences output 2 but not outputs 1,3
  Rng rng(73);
  Matrix u = swap_gate();
  Matrix big = Matrix::Zero(8, 8);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int k = 0; k < 2; ++k) big(a * 2 + k, b * 2 + k) = u(a, b);
  Gate g;
  g.unitary = big;
  g.in = {{"i1", 2, false}, {"i2", 2, false}, {"i3", 2, false}};
  g.out = {{"o1", 2, false}, {"o2", 2, false}, {"o3", 2, false}};
  CHECK(no_influence(g, {"i1"}, {"o1"}));
  CHECK(no_influence(g, {"i1"}, {"o3"}));
  CHECK(no_influence(g, {"i1"}, {"o1", "o3"}));  // union property
  CHECK_FALSE(no_influence(g, {"i1"}, {"o2"}));
}

TEST_CASE("factorization from no-influence sets") {
  SUBCASE("product unitary with singleton outputs") {
    Rng rng(74);
    Matrix u1 = rng.unitary(2), u2 = rng.unitary(2);
    Matrix prod = Matrix::Zero(4, 4);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int d = 0; d < 2; ++d) prod(a * 2 + b, c2 * 2 + d) = u1(a, c2) * u2(b, d);
    Gate g;
    g.unitary = prod;
    g.in = {{"x1", 2, false}, {"x2", 2, false}};
    g.out = {{"y1", 2, false}, {"y2", 2, false}};
    FactorizationReport rep = verify_factorization(g, {{"y1"}, {"y2"}}, {{"x1"}, {"x2"}});
    CHECK(rep.holds());
  }
  SUBCASE("swap factorizes across its crossed wires") {
    Gate sw;
    sw.unitary = swap_gate();
    sw.in = {{"a1", 2, false}, {"a2", 2, false}};
    sw.out = {{"b1", 2, false}, {"b2", 2, false}};
    FactorizationReport rep = verify_factorization(sw, {{"b1"}, {"b2"}}, {{"a2"}, {"a1"}});
    CHECK(rep.holds());
    CHECK(rep.worst_commutator < 1e-10);
  }
  SUBCASE("cnot's kickback violates the split preconditions") {
    // declared sets pretending the target cannot reach the control output:
    // the violation is reported, never silently passed
    Gate cn;
    cn.unitary = cnot();
    cn.in = {{"c", 2, false}, {"t", 2, false}};
    cn.out = {{"co", 2, false}, {"to", 2, false}};
    FactorizationReport rep = verify_factorization(cn, {{"co"}, {"to"}}, {{"c"}, {"c", "t"}});
    CHECK_FALSE(rep.preconditions);
    CHECK(rep.worst_precondition > 1e-3);
    // the trivial grouping always holds
    FactorizationReport triv = verify_factorization(cn, {{"co", "to"}}, {{"c", "t"}});
    CHECK(triv.holds());
  }
}

TEST_CASE("causal structure extraction") {
  // circuit whose gates hide a no-influence relation: the extracted graph is a
  // strict subgraph of the wire connectivity
  BrokenCircuit c = cnot_coin_circuit(Matrix::Identity(2, 2) / 2.0);
  UnitaryProcessWithInputs u = unitary_process_from_circuit(c);
  Digraph g = causal_structure(u);
  // A influences B through the cnot (and the coin influences B)
  CHECK(g.edges.count({"A", "B"}) == 1);
  CHECK(g.edges.count({"coin", "B"}) == 1);
  CHECK(g.is_acyclic());
  // sinks have no outgoing arrows, inputs no incoming
  for (const auto& [a, b] : g.edges) {
    CHECK(a != "ctl");
    CHECK(b != "coin");
    CHECK(b != "inA");
  }

  // random staircase: extracted graph is a subgraph of wire reachability
  Rng rng(75);
  BrokenCircuit rc = random_staircase_circuit({2, 2}, 80, rng);
  UnitaryProcessWithInputs ru = unitary_process_from_circuit(rc);
  Digraph rg = causal_structure(ru);
  CHECK(rg.is_acyclic());
  CHECK(rg.edges.count({"N2", "N1"}) == 0);
}

TEST_CASE("compatibility check") {
  Rng rng(76);
  Dag chain({"N1", "N2"}, {{"N1", "N2"}});
  std::map<std::string, int> dims{{"N1", 2}, {"N2", 2}};
  Qcm m = random_qcm(chain, dims, rng);
  ProcessOperator sigma = process_from_model(m);
  BrokenCircuit c = dilate_markov(sigma, chain);
  UnitaryProcessWithInputs u = unitary_process_from_circuit(c);
  // assign noise wires to nodes by construction order
  u.lambda_of["N1"] = "lam1";
  u.lambda_of["N2"] = "lam2";
  CompatibilityReport rep = check_compatibility(sigma, chain, u);
  CHECK(rep.ok());
  // against the edgeless graph the no-influence list generically fails
  CompatibilityReport bad = check_compatibility(sigma, Dag({"N1", "N2"}, {}), u);
  CHECK_FALSE(bad.no_influence_ok);
}

TEST_CASE("dilation round trips") {
  Rng rng(77);
  SUBCASE("unitary chain is a state preparation plus that unitary") {
    // channel B|A unitary: the dilation reproduces sigma
    Qcm m;
    m.graph = Dag({"A", "B"}, {{"A", "B"}});
    m.dims = {{"A", 2}, {"B", 2}};
    Matrix u = rng.unitary(2);
    m.channels["A"] = LabeledOperator(SpaceSig({win("A")}), rng.density(2));
    m.channels["B"] = choi_of_kraus({u}, {wout("A")}, {win("B")});
    ProcessOperator sigma = process_from_model(m);
    BrokenCircuit c = dilate_markov(sigma, m.graph);
    ProcessOperator back = contract(c);
    CHECK(rel_err(back.op.mat, sigma.op.mat) < 1e-9);
  }
  SUBCASE("random chains, forks and colliders") {
    std::vector<Dag> graphs = {
        Dag({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}),
        Dag({"A", "B", "C"}, {{"A", "B"}, {"A", "C"}}),
        Dag({"A", "B", "C"}, {{"A", "C"}, {"B", "C"}}),
    };
    for (const auto& g : graphs) {
      for (int t = 0; t < 3; ++t) {
        std::map<std::string, int> dims;
        for (const auto& n : g.nodes()) dims[n] = 2;
        Qcm m = random_qcm(g, dims, rng);
        ProcessOperator sigma = process_from_model(m);
        BrokenCircuit c = dilate_markov(sigma, g);
        ProcessOperator back = contract(c);
        CHECK(rel_err(back.op.mat, sigma.op.mat) < 1e-7);
        // extracted causal structure respects the graph
        UnitaryProcessWithInputs u = unitary_process_from_circuit(c);
        Digraph cs = causal_structure(u);
        for (const auto& a : g.nodes())
          for (const auto& b : g.nodes())
            if (!g.has_edge(a, b) && cs.edges.count({a, b}))
              FAIL_CHECK("spurious causal arrow ", a, "->", b);
      }
    }
  }
  SUBCASE("fork with channels on disjoint factors of a 4-dimensional parent") {
    Qcm m;
    m.graph = Dag({"A", "B", "C"}, {{"A", "B"}, {"A", "C"}});
    m.dims = {{"A", 4}, {"B", 2}, {"C", 2}};
    m.channels["A"] = LabeledOperator(SpaceSig({win("A", 4)}), rng.density(4));
    // B reads the first factor, C the second: kraus k (x) <m| patterns
    auto factor_channel = [&](const std::string& out, bool first) {
      auto ks = rng.kraus_channel(2, 2);
      std::vector<Matrix> big;
      for (const auto& k : ks)
        for (int m2 = 0; m2 < 2; ++m2) {
          Matrix b = Matrix::Zero(2, 4);
          for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
              int col = first ? c * 2 + m2 : m2 * 2 + c;
              b(r, col) = k(r, c);
            }
          big.push_back(b);
        }
      return choi_of_kraus(big, {wout("A", 4)}, {win(out, 2)});
    };
    m.channels["B"] = factor_channel("B", true);
    m.channels["C"] = factor_channel("C", false);
    ProcessOperator sigma = process_from_model(m);
    BrokenCircuit c = dilate_markov(sigma, m.graph);
    ProcessOperator back = contract(c);
    CHECK(rel_err(back.op.mat, sigma.op.mat) < 1e-7);
  }
  SUBCASE("non-markov input is rejected") {
    Matrix v(4, 1);
    v.setZero();
    v(0, 0) = 1.0 / std::sqrt(2.0);
    v(3, 0) = 1.0 / std::sqrt(2.0);
    LabeledOperator prep = choi_of_kraus({v}, {}, {win("A"), win("B")});
    std::vector<Wire> all{win("A"), wout("A"), win("B"), wout("B")};
    ProcessOperator s = ProcessOperator::over({{"A", 2}, {"B", 2}}, align(prep, SpaceSig(all)));
    CHECK_THROWS_AS(dilate_markov(s, Dag({"A", "B"}, {})), DilationError);
  }
}

TEST_CASE("staircase marginals are markov for the extracted structure") {
  Rng rng(78);
  for (int t = 0; t < 6; ++t) {
    int n = rng.uniform_int(2, 3);
    BrokenCircuit c = random_staircase_circuit(std::vector<int>(n, 2), 80, rng);
    ProcessOperator sigma = contract(c);
    CHECK(validate(sigma, false).trace_rule);
    UnitaryProcessWithInputs u = unitary_process_from_circuit(c);
    Digraph cs = causal_structure(u);
    // restrict to the node set
    NodeSet nodes = sigma.node_names();
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& [a, b] : cs.edges)
      if (nodes.count(a) && nodes.count(b)) edges.insert({a, b});
    Dag g(nodes, edges);
    MarkovReport rep = check_markov(sigma, g);
    CHECK(rep.markov);
    CHECK(rep.product_error < 1e-8);
  }
}

TEST_SUITE_END();
