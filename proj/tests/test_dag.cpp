#include "doctest.h"
#include "qcm/dag.hpp"
#include "qcm/rng.hpp"
#include "test_helpers.hpp"

using namespace qcm;
using namespace qt;

TEST_SUITE_BEGIN("dag");

TEST_CASE("kinship") {
  Dag chain({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
  CHECK(chain.ancestors("C") == NodeSet{"A", "B"});
  CHECK(chain.descendants("A") == NodeSet{"B", "C"});
  CHECK(chain.nondescendants("B") == NodeSet{"A"});
  CHECK_THROWS_AS(chain.parents("Q"), DomainError);

  Dag fig1 = diamond_dag();
  CHECK(fig1.parents("A4") == NodeSet{"A2", "A3"});
  CHECK(fig1.parents("A5") == NodeSet{"A1", "A4"});

  Dag iso({"A", "B", "C"}, {{"A", "B"}});
  CHECK(iso.parents("C").empty());
  CHECK(iso.children("C").empty());
  CHECK(iso.nondescendants("C") == NodeSet{"A", "B"});

  CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "B"}, {"B", "A"}}), DomainError);
}

TEST_CASE("d-separation on the standard motifs") {
  Dag collider({"X", "Y", "C"}, {{"X", "C"}, {"Y", "C"}});
  CHECK(d_separated(collider, {"X"}, {"Y"}, {}));
  CHECK_FALSE(d_separated(collider, {"X"}, {"Y"}, {"C"}));

  Dag fork({"Y", "W", "Z"}, {{"W", "Y"}, {"W", "Z"}});
  CHECK_FALSE(d_separated(fork, {"Y"}, {"Z"}, {}));
  CHECK(d_separated(fork, {"Y"}, {"Z"}, {"W"}));

  // collider with a conditioned descendant opens the path
  Dag cd({"X", "Y", "C", "D"}, {{"X", "C"}, {"Y", "C"}, {"C", "D"}});
  CHECK_FALSE(d_separated(cd, {"X"}, {"Y"}, {"D"}));

  CHECK(d_separated(fork, {}, {"Z"}, {}));  // vacuous
  CHECK_THROWS_AS(d_separated(fork, {"Y"}, {"Y"}, {}), DomainError);
}

TEST_CASE("five-node example separations") {
  Dag g = five_node_dag();
  CHECK(d_separated(g, {"N2"}, {"N4"}, {"N3", "N5"}));
  CHECK_FALSE(d_separated(g, {"N2"}, {"N4"}, {"N1", "N3", "N5"}));
}

TEST_CASE("agrees with the path-enumeration oracle") {
  Rng rng(21);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    Dag g = random_dag(rng.uniform_int(3, 7), rng.uniform(), rng);
    std::vector<std::string> names(g.nodes().begin(), g.nodes().end());
    for (const auto& y : names)
      for (const auto& z : names) {
        if (y == z) continue;
        for (const auto& w : names) {
          if (w == y || w == z) continue;
          bool fast = d_separated(g, {y}, {z}, {w});
          bool slow = d_separated_bruteforce(g, {y}, {z}, {w});
          CHECK(fast == slow);
          ++checked;
        }
        CHECK(d_separated(g, {y}, {z}, {}) == d_separated_bruteforce(g, {y}, {z}, {}));
      }
  }
  CHECK(checked > 100);
}

TEST_CASE("semi-graphoid axioms hold on random dags") {
  Rng rng(22);
  for (int t = 0; t < 25; ++t) {
    Dag g = random_dag(rng.uniform_int(4, 6), rng.uniform(), rng);
    std::vector<std::string> names(g.nodes().begin(), g.nodes().end());
    for (int rep = 0; rep < 30; ++rep) {
      NodeSet y, z, w, x;
      for (const auto& name : names) {
        switch (rng.uniform_int(0, 4)) {
          case 0: y.insert(name); break;
          case 1: z.insert(name); break;
          case 2: w.insert(name); break;
          case 3: x.insert(name); break;
          default: break;
        }
      }
      // symmetry
      CHECK(d_separated(g, y, z, w) == d_separated(g, z, y, w));
      NodeSet xz = z;
      xz.insert(x.begin(), x.end());
      NodeSet xw = w;
      xw.insert(x.begin(), x.end());
      if (d_separated(g, y, xz, w)) {
        CHECK(d_separated(g, y, z, w));   // decomposition
        CHECK(d_separated(g, y, z, xw));  // weak union
      }
      NodeSet zw = w;
      zw.insert(z.begin(), z.end());
      if (d_separated(g, y, z, w) && d_separated(g, y, x, zw))
        CHECK(d_separated(g, y, xz, w));  // contraction
    }
  }
}

TEST_CASE("mutilations") {
  Dag g = five_node_dag();
  SUBCASE("incoming removes arrows into the set") {
    Dag m = mutilate_incoming(g, {"N1"});
    CHECK_FALSE(m.has_edge("N2", "N1"));
    CHECK_FALSE(m.has_edge("N4", "N1"));
    CHECK(m.has_edge("N3", "N2"));
    CHECK(m.edges().size() == 4);
    // out-degrees of nodes outside the cut set change only via edges into N1
    for (const auto& n : g.nodes()) {
      size_t expect = 0;
      for (const auto& c : g.children(n))
        if (c != "N1") ++expect;
      CHECK(m.children(n).size() == expect);
    }
  }
  SUBCASE("outgoing removes arrows out of the set") {
    CHECK(mutilate_outgoing(g, {}) == g);
    Dag m = mutilate_outgoing(mutilate_incoming(g, {"N1"}), {"N2"});
    CHECK_FALSE(m.has_edge("N2", "N5"));
    CHECK(m.edges().size() == 3);
  }
  SUBCASE("rule3 cuts arrows into the non-ancestral part of z") {
    NodeSet zw = rule3_zw(g, {"N1"}, {"N4", "N5"}, {"N3"});
    CHECK(zw == NodeSet{"N4", "N5"});
    Dag m = mutilate_rule3(g, {"N1"}, {"N4", "N5"}, {"N3"});
    CHECK(m.edges() == std::set<std::pair<std::string, std::string>>{{"N3", "N2"}});
    // N5 is an ancestor of the conditioning set {N3,N4}: z(w) empty
    CHECK(rule3_zw(g, {"N1"}, {"N5"}, {"N3", "N4"}).empty());
  }
}

TEST_CASE("sr partitions") {
  Dag fork({"Y", "W", "Z"}, {{"W", "Y"}, {"W", "Z"}});
  auto p = sr_partition(fork, {"Y"}, {"Z"}, {"W"});
  REQUIRE(p.has_value());
  CHECK(sr_valid(fork, {"Y"}, {"Z"}, *p));

  // adjacent y,z admit no partition
  Dag adj({"Y", "Z"}, {{"Y", "Z"}});
  CHECK_FALSE(sr_partition(adj, {"Y"}, {"Z"}, {}).has_value());

  // rule-1 example sets on the mutilated five-node graph
  Dag g = mutilate_incoming(five_node_dag(), {"N1"});
  auto p2 = sr_partition(g, {"N2"}, {"N4"}, {"N1", "N3", "N5"});
  REQUIRE(p2.has_value());
  CHECK(sr_valid(g, {"N2"}, {"N4"}, *p2));
}

TEST_CASE("d-separation implies an sr partition exists") {
  Rng rng(23);
  for (int t = 0; t < 40; ++t) {
    Dag g = random_dag(rng.uniform_int(3, 6), rng.uniform(), rng);
    std::vector<std::string> names(g.nodes().begin(), g.nodes().end());
    for (int rep = 0; rep < 20; ++rep) {
      NodeSet y, z, w;
      for (const auto& name : names) {
        switch (rng.uniform_int(0, 3)) {
          case 0: y.insert(name); break;
          case 1: z.insert(name); break;
          case 2: w.insert(name); break;
          default: break;
        }
      }
      if (y.empty() || z.empty()) continue;
      if (d_separated(g, y, z, w)) {
        auto p = sr_partition(g, y, z, w);
        REQUIRE_MESSAGE(p.has_value(), "separated triple without an SR partition");
        CHECK(sr_valid(g, y, z, *p));
      }
    }
  }
}

TEST_SUITE_END();
