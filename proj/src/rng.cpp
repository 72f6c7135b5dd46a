#include "qcm/rng.hpp"

#include <cmath>

namespace qcm {

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

Matrix Rng::ginibre(int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cnormal();
  return m;
}

Matrix Rng::unitary(int dim) {
  Matrix g = ginibre(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    Scalar d = r(i, i);
    double a = std::abs(d);
    q.col(i) *= (a > 0 ? d / a : Scalar(1));
  }
  return q;
}

Matrix Rng::density(int dim, int rank) {
  if (rank <= 0 || rank > dim) rank = dim;
  Matrix g = ginibre(dim, rank);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return rho;
}

Matrix Rng::hermitian(int dim) {
  Matrix g = ginibre(dim, dim);
  return (g + g.adjoint()) / 2.0;
}

std::vector<Matrix> Rng::kraus_channel(int din, int dout, int env) {
  if (env <= 0) env = din;
  // random isometry V: C^din -> C^dout x C^env via QR of a tall Ginibre
  Matrix g = ginibre(dout * env, din);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dout * env, din);
  std::vector<Matrix> ks;
  for (int e = 0; e < env; ++e) {
    Matrix k(dout, din);
    for (int o = 0; o < dout; ++o)
      for (int i = 0; i < din; ++i) k(o, i) = q(o * env + e, i);
    ks.push_back(k);
  }
  return ks;
}

std::vector<double> Rng::simplex(int n) {
  std::vector<double> p(n);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    p[i] = -std::log(std::max(uniform(), 1e-300));
    s += p[i];
  }
  for (auto& v : p) v /= s;
  return p;
}

}  // namespace qcm
