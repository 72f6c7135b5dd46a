#pragma once

#include <vector>

#include "qcm/tensor.hpp"

namespace qcm {

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite-dimensional *-algebra with identity, stored as a Hilbert-Schmidt
// orthonormal list of Hermitian matrices spanning it.
struct StarAlgebra {
  long ambient_dim = 0;
  std::vector<Matrix> basis;  // Hermitian, HS-orthonormal

  long dim() const { return static_cast<long>(basis.size()); }
};

// Smallest *-algebra with identity containing the generators.
StarAlgebra generate_algebra(const std::vector<Matrix>& generators, double eps = tol::alg);

StarAlgebra commutant(const StarAlgebra& alg, double eps = tol::alg);

// Hermitian basis of the center (elements commuting with the whole algebra).
std::vector<Matrix> algebra_center(const StarAlgebra& alg, double eps = tol::alg);

// Block structure A = sum_i M_{dL_i} (x) 1_{dR_i} on orthogonal subspaces.
struct Block {
  Matrix isometry;  // ambient_dim x (dimL*dimR); columns orthonormal; factor
                    // index big-endian (L, R)
  int dimL = 0;
  int dimR = 0;
};
struct BlockTensorDecomp {
  std::vector<Block> blocks;
};

BlockTensorDecomp wedderburn_decompose(const StarAlgebra& alg, double eps = tol::alg);

// Splits two commuting PSD channel operators across their shared wires into a
// common block-tensor decomposition with per-block left/right components:
//   rho1 = sum_i left[i] (x) 1_{R_i},   rho2 = sum_i 1_{L_i} (x) right[i].
// left[i] acts on (private wires of rho1) x L_i with the private factor first;
// right[i] on (private wires of rho2) x R_i likewise.
struct SplitChannels {
  BlockTensorDecomp decomp;       // over the shared space
  std::vector<Matrix> left;       // (dP1*dL_i) square
  std::vector<Matrix> right;      // (dP2*dR_i) square
  SpaceSig shared_sig;            // shared wires in canonical order
  SpaceSig private1, private2;    // canonical order of the private factors
  double reconstruction_error = 0;
};

SplitChannels split_commuting(const LabeledOperator& rho1, const LabeledOperator& rho2,
                              const std::vector<Wire>& shared);

// Reassembles sum_i left[i] (x) 1_{R_i} (and the right-hand counterpart) onto
// the original wire signatures; used by the reconstruction check.
LabeledOperator reassemble_left(const SplitChannels& s);
LabeledOperator reassemble_right(const SplitChannels& s);

}  // namespace qcm
