#pragma once

#include <cstdint>
#include <vector>

#include "qcm/tensor.hpp"

namespace qcm {

// Deterministic generator with explicit distributions so reports are
// byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = tol::default_seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

  std::uint64_t next_u64();
  double uniform();                     // [0,1)
  double normal();                      // standard normal (Box-Muller)
  int uniform_int(int lo, int hi);      // inclusive
  Scalar cnormal() { return Scalar(normal(), normal()); }

  Matrix ginibre(int rows, int cols);
  Matrix unitary(int dim);              // Haar-ish via QR with phase fix
  Matrix density(int dim, int rank = 0);
  Matrix hermitian(int dim);            // GUE-style
  std::vector<Matrix> kraus_channel(int din, int dout, int env = 0);  // CPTP

  std::vector<double> simplex(int n);   // random probability vector

 private:
  double cached_ = 0;
  bool has_cached_ = false;
  std::uint64_t state_;
};

}  // namespace qcm
