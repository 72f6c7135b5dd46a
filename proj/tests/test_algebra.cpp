#include "doctest.h"
#include "qcm/algebra.hpp"
#include "qcm/rng.hpp"
#include "test_helpers.hpp"

using namespace qcm;
using namespace qt;

TEST_SUITE_BEGIN("algebra");

TEST_CASE("generated algebras have the expected dimensions") {
  CHECK(generate_algebra({Matrix::Identity(2, 2)}).dim() == 1);
  Matrix d12 = mat2(1, 0, 0, 2);
  CHECK(generate_algebra({d12}).dim() == 2);
  CHECK(generate_algebra({pauli_x(), pauli_z()}).dim() == 4);
  // dimension invariant under unitary conjugation
  Rng rng(31);
  Matrix u = rng.unitary(2);
  CHECK(generate_algebra({u * pauli_x() * u.adjoint(), u * pauli_z() * u.adjoint()}).dim() == 4);
  CHECK(generate_algebra({u * d12 * u.adjoint()}).dim() == 2);
}

TEST_CASE("commutant dimensions") {
  StarAlgebra full = generate_algebra({pauli_x(), pauli_z()});
  CHECK(commutant(full).dim() == 1);
  StarAlgebra diag = generate_algebra({mat2(1, 0, 0, 2)});
  CHECK(commutant(diag).dim() == 2);
}

TEST_CASE("wedderburn block shapes") {
  SUBCASE("full matrix algebra is one block") {
    BlockTensorDecomp d = wedderburn_decompose(generate_algebra({pauli_x(), pauli_z()}));
    REQUIRE(d.blocks.size() == 1);
    CHECK(d.blocks[0].dimL == 2);
    CHECK(d.blocks[0].dimR == 1);
  }
  SUBCASE("diagonal algebra splits into one-dimensional blocks") {
    BlockTensorDecomp d = wedderburn_decompose(generate_algebra({mat2(1, 0, 0, 2)}));
    REQUIRE(d.blocks.size() == 2);
    for (const auto& b : d.blocks) {
      CHECK(b.dimL == 1);
      CHECK(b.dimR == 1);
    }
  }
  SUBCASE("X on the left factor of a product space") {
    // alg{1, X (x) 1} is commutative of dimension 2: its blocks are the two
    // X-eigenspaces tensored with the untouched right factor.
    Matrix x1 = Matrix::Zero(4, 4);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 2; ++k) x1(r * 2 + k, c * 2 + k) = pauli_x()(r, c);
    StarAlgebra a = generate_algebra({x1});
    CHECK(a.dim() == 2);
    BlockTensorDecomp d = wedderburn_decompose(a);
    REQUIRE(d.blocks.size() == 2);
    for (const auto& b : d.blocks) {
      CHECK(b.dimL == 1);
      CHECK(b.dimR == 2);
    }
  }
  SUBCASE("the full left factor gives a single 2x2 block") {
    auto embed_left = [](const Matrix& m) {
      Matrix out = Matrix::Zero(4, 4);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          for (int k = 0; k < 2; ++k) out(r * 2 + k, c * 2 + k) = m(r, c);
      return out;
    };
    BlockTensorDecomp d =
        wedderburn_decompose(generate_algebra({embed_left(pauli_x()), embed_left(pauli_z())}));
    REQUIRE(d.blocks.size() == 1);
    CHECK(d.blocks[0].dimL == 2);
    CHECK(d.blocks[0].dimR == 2);
  }
  SUBCASE("commutative algebras have all dimL equal to one") {
    Rng rng(32);
    Matrix u = rng.unitary(4);
    Eigen::VectorXd ev(4);
    ev << 1, 1, 2, 3;
    Matrix h = u * ev.asDiagonal().toDenseMatrix().cast<Scalar>() * u.adjoint();
    BlockTensorDecomp d = wedderburn_decompose(generate_algebra({h}));
    for (const auto& b : d.blocks) CHECK(b.dimL == 1);
  }
}

namespace {

// Builds a channel operator on an explicit product structure: op acting on the
// stated factor of the shared space, identity on the other.
LabeledOperator channel_on_factor(const std::string& out_node, const Matrix& unitary,
                                  const std::vector<Wire>& shared, bool left_factor) {
  // shared = {S1:out (2), S2:out (2)}; the channel reads one factor
  std::vector<Wire> inw = {left_factor ? shared[0] : shared[1]};
  LabeledOperator cj = choi_of_kraus({unitary}, inw, {win(out_node, 2)});
  return cj;
}

}  // namespace

TEST_CASE("split_commuting on explicit tensor products") {
  Rng rng(33);
  std::vector<Wire> shared = {wout("S1"), wout("S2")};
  Matrix u1 = rng.unitary(2), u2 = rng.unitary(2);
  LabeledOperator rho1 = channel_on_factor("B", u1, shared, true);
  LabeledOperator rho2 = channel_on_factor("C", u2, shared, false);
  // pad both with identities so they overlap on the full shared space
  rho1 = align(rho1, SpaceSig::merge(rho1.sig, SpaceSig(shared)));
  rho2 = align(rho2, SpaceSig::merge(rho2.sig, SpaceSig(shared)));
  SplitChannels sc = split_commuting(rho1, rho2, shared);
  CHECK(sc.reconstruction_error < 1e-8);
  long total = 0;
  for (const auto& b : sc.decomp.blocks) total += static_cast<long>(b.dimL) * b.dimR;
  CHECK(total == 4);
  // reassembly reproduces the inputs
  CHECK(rel_err(reassemble_left(sc).mat, align(rho1, reassemble_left(sc).sig).mat) < 1e-8);
  CHECK(rel_err(reassemble_right(sc).mat, align(rho2, reassemble_right(sc).sig).mat) < 1e-8);
}

TEST_CASE("split_commuting on a direct sum of two products") {
  // shared space C2: channels with diagonal dependence: rho1 prepares state_m,
  // rho2 prepares state'_m when the shared wire is in basis state m.
  Rng rng(34);
  std::vector<Wire> shared = {wout("S")};
  auto diag_channel = [&](const std::string& out) {
    LabeledOperator acc;
    bool first = true;
    for (int m = 0; m < 2; ++m) {
      Matrix k(2, 1);
      Eigen::VectorXcd v = rng.ginibre(2, 1);
      v /= v.norm();
      k.col(0) = v;
      LabeledOperator prep = choi_of_kraus({k}, {}, {win(out, 2)});
      LabeledOperator proj(SpaceSig({wout("S")}), ket(m, 2));
      LabeledOperator term = tensor(prep, proj);
      acc = first ? term : add(acc, term);
      first = false;
    }
    return acc;
  };
  LabeledOperator rho1 = diag_channel("B");
  LabeledOperator rho2 = diag_channel("C");
  CHECK(commutator_norm(rho1, rho2) < 1e-12);
  SplitChannels sc = split_commuting(rho1, rho2, shared);
  CHECK(sc.decomp.blocks.size() == 2);
  CHECK(sc.reconstruction_error < 1e-8);
}

TEST_CASE("split_commuting on a product unitary") {
  Rng rng(35);
  Matrix u1 = rng.unitary(2), u2 = rng.unitary(2);
  std::vector<Wire> shared = {wout("S1"), wout("S2")};
  LabeledOperator rho1 = choi_of_kraus({u1}, {shared[0]}, {win("B", 2)});
  LabeledOperator rho2 = choi_of_kraus({u2}, {shared[1]}, {win("C", 2)});
  rho1 = align(rho1, SpaceSig::merge(rho1.sig, SpaceSig(shared)));
  rho2 = align(rho2, SpaceSig::merge(rho2.sig, SpaceSig(shared)));
  SplitChannels sc = split_commuting(rho1, rho2, shared);
  REQUIRE(sc.decomp.blocks.size() == 1);
  CHECK(sc.decomp.blocks[0].dimL == 2);
  CHECK(sc.decomp.blocks[0].dimR == 2);
  CHECK(sc.reconstruction_error < 1e-8);
}

TEST_CASE("split_commuting rejects non-commuting inputs") {
  std::vector<Wire> shared = {wout("S")};
  LabeledOperator rho1 = choi_of_kraus({hadamard()}, {wout("S")}, {win("B", 2)});
  LabeledOperator rho2 = choi_of_kraus({pauli_x()}, {wout("S")}, {win("C", 2)});
  CHECK_THROWS_AS(split_commuting(rho1, rho2, shared), DomainError);
}

TEST_SUITE_END();
