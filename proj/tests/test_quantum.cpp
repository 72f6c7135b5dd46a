#include "doctest.h"
#include "qcm/quantum.hpp"
#include "test_helpers.hpp"

using namespace qcm;
using namespace qt;

TEST_SUITE_BEGIN("quantum");

namespace {

// sigma for a single node prepared in `rho`: identity on the out wire.
ProcessOperator one_node(const std::string& n, const Matrix& rho) {
  int d = static_cast<int>(rho.rows());
  LabeledOperator st(SpaceSig({win(n, d)}), rho);
  SpaceSig full({win(n, d), wout(n, d)});
  return ProcessOperator::over({{n, d}}, align(st, full));
}

// coherent copy W -> Y (x) Z with a maximally mixed root state
ProcessOperator coherent_copy_sigma() {
  Matrix v(4, 2);
  v.setZero();
  v(0, 0) = 1.0;
  v(3, 1) = 1.0;
  LabeledOperator copy = choi_of_kraus({v}, {wout("W")}, {win("Y"), win("Z")});
  LabeledOperator rw(SpaceSig({win("W")}), Matrix::Identity(2, 2) / 2.0);
  LabeledOperator sigma = multiply(copy, rw);
  std::vector<Wire> all{win("W"), wout("W"), win("Y"), wout("Y"), win("Z"), wout("Z")};
  return ProcessOperator::over({{"W", 2}, {"Y", 2}, {"Z", 2}}, align(sigma, SpaceSig(all)));
}

Qcm qubit_qcm(const Dag& g, Rng& rng) {
  std::map<std::string, int> dims;
  for (const auto& n : g.nodes()) dims[n] = 2;
  return random_qcm(g, dims, rng);
}

}  // namespace

TEST_CASE("validation accepts states and rejects garbage") {
  Rng rng(61);
  ProcessOperator s = one_node("A", rng.density(2));
  ValidityReport rep = validate(s);
  CHECK(rep.ok());

  // zero operator fails
  SpaceSig sig({win("A"), wout("A")});
  ProcessOperator zero =
      ProcessOperator::over({{"A", 2}}, LabeledOperator(sig, Matrix::Zero(4, 4)));
  ValidityReport zr = validate(zero);
  CHECK_FALSE(zr.nontrivial);
  CHECK_FALSE(zr.trace_rule);

  // a violation of the in-trace rule is caught with its size reported
  ProcessOperator pert = s;
  LabeledOperator bump(sig, Matrix::Zero(4, 4));
  bump.mat(0, 0) = 1e-3;
  bump.mat(1, 1) = -1e-3;  // hermitian, breaks Tr_in = 1_out
  pert.op = add(pert.op, bump);
  ValidityReport pr = validate(pert);
  CHECK_FALSE(pr.affine_basis);
}

TEST_CASE("outcome probabilities") {
  ProcessOperator s = one_node("A", ket(0, 2));
  std::map<std::string, Instrument> ins;
  ins["A"] = projective_instrument("A", Matrix::Identity(2, 2));
  Dist p = outcome_probabilities(s, ins);
  CHECK(p.p[0] == doctest::Approx(1.0));
  CHECK(p.p[1] == doctest::Approx(0.0));

  // identity instruments give the scalar one
  Dist one = outcome_probabilities(s, {});
  CHECK(one.size() == 1);
  CHECK(one.p[0] == doctest::Approx(1.0));

  // random model, random projective instruments: normalized
  Rng rng(62);
  Dag chain({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
  ProcessOperator sc = process_from_model(qubit_qcm(chain, rng));
  std::map<std::string, Instrument> pins;
  for (const auto& n : chain.nodes()) pins[n] = projective_instrument(n, rng.unitary(2));
  Dist pr = outcome_probabilities(sc, pins);
  CHECK(std::abs(pr.sum() - 1.0) < 1e-10);
  for (double v : pr.p) CHECK(v > -1e-12);

  // marginal consistency: summing over one node's outcomes equals replacing
  // the instrument by its total channel
  std::map<std::string, Instrument> partial = pins;
  partial.erase("C");
  Dist summed = pr.marginal({"A", "B"});
  std::map<std::string, LabeledOperator> total;
  {
    LabeledOperator acc = pins["C"].outcomes[0];
    for (size_t i = 1; i < pins["C"].outcomes.size(); ++i) acc = add(acc, pins["C"].outcomes[i]);
    total["C"] = acc;
  }
  ProcessOperator red = marginal_process(sc, {"A", "B"}, total);
  Dist via = outcome_probabilities(red, partial);
  for (long i = 0; i < summed.size(); ++i)
    CHECK(via.p[i] == doctest::Approx(summed.p[i]).epsilon(1e-9));
}

TEST_CASE("marginals") {
  Rng rng(63);
  Dag chain({"A", "B"}, {{"A", "B"}});
  Qcm m = qubit_qcm(chain, rng);
  ProcessOperator s = process_from_model(m);

  // keeping everything is the identity
  ProcessOperator same = marginal_process(s, {"A", "B"});
  CHECK(rel_err(same.op.mat, s.op.mat) == 0.0);

  // dropping the child with the identity link: sigma_A = 1_out (x) rho_A
  ProcessOperator sa = marginal_process(s, {"A"});
  LabeledOperator rho_a = partial_trace(m.channels.at("A"), {});
  LabeledOperator expect = align(m.channels.at("A"), sa.op.sig);
  CHECK(rel_err(sa.op.mat, expect.mat) < 1e-10);
  CHECK(validate(sa).ok());

  // dropping a childless node: depolarizing equals the identity link
  std::vector<Matrix> dep;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Matrix k = Matrix::Zero(2, 2);
      k(i, j) = 1.0 / std::sqrt(2.0);
      dep.push_back(k);
    }
  std::map<std::string, LabeledOperator> depmap{{"B", intervention_from_kraus("B", 2, dep)}};
  ProcessOperator viadep = marginal_process(s, {"A"}, depmap);
  CHECK(rel_err(viadep.op.mat, sa.op.mat) < 1e-10);

  // a non trace-preserving intervention is rejected
  std::map<std::string, LabeledOperator> bad{
      {"B", scale(intervention_identity("B", 2), 0.5)}};
  CHECK_THROWS_AS(marginal_process(s, {"A"}, bad), DomainError);
}

TEST_CASE("do-conditional operators") {
  Rng rng(64);
  ProcessOperator s = one_node("A", rng.density(2));
  LabeledOperator d = do_conditional(s, {"A"});
  // trace over the input leaves the identity on the out wire
  CHECK(rel_err(d.mat, Matrix::Identity(2, 2)) < 1e-12);

  CHECK(rel_err(do_conditional(s, {}).mat, s.op.mat) == 0.0);

  // Markov case: the do-conditional equals the product of remaining channels
  Dag chain({"A", "B"}, {{"A", "B"}});
  Qcm m = qubit_qcm(chain, rng);
  ProcessOperator sc = process_from_model(m);
  LabeledOperator da = do_conditional(sc, {"A"});
  LabeledOperator expect = align(m.channels.at("B"), da.sig);
  CHECK(rel_err(da.mat, expect.mat) < 1e-10);
}

TEST_CASE("model to process operator") {
  Rng rng(65);
  // single node: the padded state
  Dag single({"A"}, {});
  Qcm m1 = qubit_qcm(single, rng);
  ProcessOperator s1 = process_from_model(m1);
  CHECK(validate(s1).ok());

  // the diamond graph: product of five channels, full validity at size 1024
  Qcm m5 = qubit_qcm(diamond_dag(), rng);
  ProcessOperator s5 = process_from_model(m5);
  ValidityReport rep = validate(s5, /*full=*/false);
  CHECK(rep.psd);
  CHECK(rep.trace_rule);
  CHECK(rep.nontrivial);
  CHECK(std::abs(s5.op.trace().real() - 32.0) < 1e-8);  // prod of dims

  // classical embedding agrees with the split-node induction
  Dag fork({"W", "Y", "Z"}, {{"W", "Y"}, {"W", "Z"}});
  std::map<std::string, int> cards{{"W", 2}, {"Y", 2}, {"Z", 2}};
  Ccm cm = random_ccm(fork, cards, rng);
  Cpm kappa = induct_ccm_to_csm(cm);
  ProcessOperator via_kappa = embed_classical(kappa);
  CHECK(validate(via_kappa).ok());
}

TEST_CASE("markov check and channel recovery") {
  Rng rng(66);
  for (int t = 0; t < 12; ++t) {
    Dag g = random_dag(rng.uniform_int(2, 4), rng.uniform(), rng);
    Qcm m = qubit_qcm(g, rng);
    ProcessOperator s = process_from_model(m);
    MarkovReport rep = check_markov(s, g);
    CHECK(rep.markov);
    CHECK(rep.product_error < 1e-8);
    // recovered channels match the model's
    for (const auto& [n, ch] : m.channels) {
      LabeledOperator got = align(rep.channels.at(n), SpaceSig::merge(rep.channels.at(n).sig, ch.sig));
      LabeledOperator want = align(ch, got.sig);
      CHECK(rel_err(got.mat, want.mat) < 1e-7);
    }
  }

  // entangling interaction between parallel nodes is not Markov for the
  // edgeless graph
  {
    Matrix v(4, 1);
    v.setZero();
    // bell state preparation on the two inputs
    v(0, 0) = 1.0 / std::sqrt(2.0);
    v(3, 0) = 1.0 / std::sqrt(2.0);
    LabeledOperator prep = choi_of_kraus({v}, {}, {win("A"), win("B")});
    std::vector<Wire> all{win("A"), wout("A"), win("B"), wout("B")};
    ProcessOperator s =
        ProcessOperator::over({{"A", 2}, {"B", 2}}, align(prep, SpaceSig(all)));
    MarkovReport rep = check_markov(s, Dag({"A", "B"}, {}));
    CHECK_FALSE(rep.markov);
  }

  // supergraph property: Markov for the generating graph implies Markov for
  // any DAG extending it
  {
    Dag chain({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    Qcm m = qubit_qcm(chain, rng);
    ProcessOperator s = process_from_model(m);
    Dag super({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"A", "C"}});
    CHECK(check_markov(s, super).markov);
  }
}

TEST_CASE("diagonal inductions") {
  Rng rng(67);
  // uniform coin: embedding reproduces outcome statistics
  Dag single({"X"}, {});
  std::map<std::string, int> cards{{"X", 2}};
  Ccm coin;
  coin.graph = single;
  coin.cards = cards;
  coin.cpts["X"] = {"X", {}, {0.5, 0.5}};
  Cpm k = induct_ccm_to_csm(coin);
  ProcessOperator s = embed_classical(k);
  std::map<std::string, Instrument> ins{{"X", projective_instrument("X", Matrix::Identity(2, 2))}};
  Dist p = outcome_probabilities(s, ins);
  CHECK(p.p[0] == doctest::Approx(0.5));
  CHECK(p.p[1] == doctest::Approx(0.5));

  // markov kappa gives a markov sigma on the same graph
  Dag fork({"W", "Y", "Z"}, {{"W", "Y"}, {"W", "Z"}});
  for (const auto& n : fork.nodes()) cards[n] = 2;
  Ccm cm = random_ccm(fork, cards, rng);
  ProcessOperator sq = embed_classical(induct_ccm_to_csm(cm));
  CHECK(check_markov(sq, fork).markov);

  // extraction round trips on diagonal operators
  Cpm back = extract_classical(sq);
  ProcessOperator again = embed_classical(back);
  CHECK(rel_err(again.op.mat, sq.op.mat) < 1e-12);

  // non-diagonal operators are rejected
  CHECK_THROWS_AS(extract_classical(coherent_copy_sigma()), DomainError);
}

TEST_CASE("coherent copy regression value") {
  ProcessOperator s = coherent_copy_sigma();
  CHECK(validate(s).ok());
  LabeledOperator hat = s.normalized();
  double v = qcmi(hat, wires_of_nodes(hat.sig, {"Y"}), wires_of_nodes(hat.sig, {"Z"}),
                  wires_of_nodes(hat.sig, {"W"}));
  // frozen at first computation
  CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_SUITE_END();
