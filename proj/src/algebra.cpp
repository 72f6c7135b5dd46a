#include "qcm/algebra.hpp"

#include <algorithm>
#include <cmath>

#include "qcm/rng.hpp"

namespace qcm {

namespace {

Scalar hs_inner(const Matrix& a, const Matrix& b) { return (a.adjoint() * b).trace(); }

// Orthogonalizes m against basis; returns normalized residual if its norm
// exceeds eps, otherwise nothing.
std::optional<Matrix> gs_residual(const std::vector<Matrix>& basis, Matrix m, double eps) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) m -= hs_inner(b, m) * b;
  double n = m.norm();
  if (n <= eps) return std::nullopt;
  return Matrix(m / n);
}

}  // namespace

StarAlgebra generate_algebra(const std::vector<Matrix>& generators, double eps) {
  if (generators.empty()) throw DomainError("generate_algebra: no generators");
  long d = generators.front().rows();
  for (const auto& g : generators)
    if (g.rows() != d || g.cols() != d)
      throw DimensionError("generate_algebra: generator dimension mismatch");
  StarAlgebra a;
  a.ambient_dim = d;
  // Seed with identity, generators and adjoints, as Hermitian components.
  std::vector<Matrix> seeds;
  seeds.push_back(Matrix::Identity(d, d));
  for (const auto& g : generators) {
    seeds.push_back((g + g.adjoint()) / 2.0);
    seeds.push_back((g - g.adjoint()) / Scalar(0, 2));
  }
  for (const auto& s : seeds)
    if (auto r = gs_residual(a.basis, s, eps)) a.basis.push_back(*r);
  // Close under products; products of Hermitians split into Hermitian parts.
  size_t lo = 0;
  long cap = d * d;
  while (a.dim() < cap) {
    size_t hi = a.basis.size();
    bool grew = false;
    for (size_t i = 0; i < hi; ++i) {
      for (size_t j = (i < lo ? lo : 0); j < hi; ++j) {
        Matrix p = a.basis[i] * a.basis[j];
        Matrix h = (p + p.adjoint()) / 2.0;
        Matrix k = (p - p.adjoint()) / Scalar(0, 2);
        if (auto r = gs_residual(a.basis, h, eps)) {
          a.basis.push_back(*r);
          grew = true;
        }
        if (auto r = gs_residual(a.basis, k, eps)) {
          a.basis.push_back(*r);
          grew = true;
        }
        if (a.dim() >= cap) break;
      }
      if (a.dim() >= cap) break;
    }
    if (!grew) break;
    lo = hi;
  }
  return a;
}

StarAlgebra commutant(const StarAlgebra& alg, double eps) {
  long d = alg.ambient_dim;
  long n = d * d;
  // vec is row-major: vec(c)_{p*d+q} = c_{pq}. Then
  //   vec(c b) = (1 (x) b^T) vec(c),  vec(b c) = (b (x) 1) vec(c),
  // so the commutator map is K_b = 1 (x) b^T - b (x) 1. The commutant is the
  // joint null space, read off the Gram matrix G = sum_k K_k^dag K_k.
  Matrix g = Matrix::Zero(n, n);
  for (const auto& b : alg.basis) {
    Matrix k = Matrix::Zero(n, n);
    for (long p = 0; p < d; ++p)
      for (long q = 0; q < d; ++q)
        for (long m = 0; m < d; ++m) {
          k(p * d + q, p * d + m) += b(m, q);   // 1 (x) b^T
          k(p * d + q, m * d + q) -= b(p, m);   // -(b (x) 1)
        }
    g += k.adjoint() * k;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  StarAlgebra com;
  com.ambient_dim = d;
  for (long i = 0; i < n; ++i) {
    if (es.eigenvalues()(i) > 1e-12 * scale) continue;
    Eigen::VectorXcd v = es.eigenvectors().col(i);
    Matrix c(d, d);
    for (long p = 0; p < d; ++p)
      for (long q = 0; q < d; ++q) c(p, q) = v(p * d + q);
    Matrix h = (c + c.adjoint()) / 2.0;
    Matrix kk = (c - c.adjoint()) / Scalar(0, 2);
    if (auto r = gs_residual(com.basis, h, eps)) com.basis.push_back(*r);
    if (auto r = gs_residual(com.basis, kk, eps)) com.basis.push_back(*r);
  }
  return com;
}

std::vector<Matrix> algebra_center(const StarAlgebra& alg, double eps) {
  // Elements sum_m a_m b_m (real coefficients over the Hermitian basis) that
  // commute with every basis element: null space of the commutator Gram form.
  long dim = alg.dim();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<std::vector<Matrix>> comms(dim);
  for (long m = 0; m < dim; ++m)
    for (long k = 0; k < dim; ++k)
      comms[m].push_back(alg.basis[m] * alg.basis[k] - alg.basis[k] * alg.basis[m]);
  for (long m = 0; m < dim; ++m)
    for (long mp = m; mp < dim; ++mp) {
      double s = 0;
      for (long k = 0; k < dim; ++k) s += hs_inner(comms[m][k], comms[mp][k]).real();
      g(m, mp) = g(mp, m) = s;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Matrix> center;
  for (long i = 0; i < dim; ++i) {
    if (es.eigenvalues()(i) > 1e-10 * scale) continue;
    Matrix c = Matrix::Zero(alg.ambient_dim, alg.ambient_dim);
    for (long m = 0; m < dim; ++m) c += es.eigenvectors()(m, i) * alg.basis[m];
    if (auto r = gs_residual(center, c, eps)) center.push_back(*r);
  }
  return center;
}

namespace {

// Clusters eigenvalues by gaps; returns groups of indices.
std::vector<std::vector<int>> cluster_eigs(const Eigen::VectorXd& ev, double gap) {
  std::vector<int> order(ev.size());
  for (int i = 0; i < ev.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ev(a) < ev(b); });
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < ev.size(); ++i) {
    if (groups.empty() || ev(order[i]) - ev(order[i - 1]) > gap)
      groups.push_back({});
    groups.back().push_back(order[i]);
  }
  return groups;
}

Matrix columns_of(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(m.rows(), idx.size());
  for (size_t k = 0; k < idx.size(); ++k) out.col(k) = m.col(idx[k]);
  return out;
}

// Least-squares coefficient solve: find span-combination of `ops` applied to
// psi best matching target.
Eigen::VectorXcd solve_span_action(const std::vector<Matrix>& ops, const Eigen::VectorXcd& psi,
                                   const Eigen::VectorXcd& target) {
  Matrix a(psi.size(), ops.size());
  for (size_t k = 0; k < ops.size(); ++k) a.col(k) = ops[k] * psi;
  return a.colPivHouseholderQr().solve(target);
}

struct FactorSplit {
  Matrix grid;  // m x (dL*dR): columns = product basis, index (l,r) big-endian
  int dL = 0, dR = 0;
};

// Splits a simple algebra acting irreducibly-with-multiplicity on C^m into its
// tensor form M_dL (x) 1_dR. `abasis` spans the algebra, `cbasis` spans its
// commutant 1_dL (x) M_dR.
std::optional<FactorSplit> try_factor_split(const std::vector<Matrix>& abasis,
                                            const std::vector<Matrix>& cbasis, int dL, int dR,
                                            Rng& rng, double eps) {
  long m = abasis.front().rows();
  // Generic elements of algebra and commutant.
  Matrix ga = Matrix::Zero(m, m), gc = Matrix::Zero(m, m);
  for (const auto& b : abasis) ga += rng.normal() * b;
  for (const auto& b : cbasis) gc += rng.normal() * b;
  ga = (ga + ga.adjoint()) / 2.0;
  gc = (gc + gc.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> ea(ga), ec(gc);
  double sa = std::max(1.0, ea.eigenvalues().cwiseAbs().maxCoeff());
  double sc = std::max(1.0, ec.eigenvalues().cwiseAbs().maxCoeff());
  auto ga_groups = cluster_eigs(ea.eigenvalues(), 1e-6 * sa);
  auto gc_groups = cluster_eigs(ec.eigenvalues(), 1e-6 * sc);
  if (static_cast<int>(ga_groups.size()) != dL || static_cast<int>(gc_groups.size()) != dR)
    return std::nullopt;
  for (const auto& g : ga_groups)
    if (static_cast<int>(g.size()) != dR) return std::nullopt;
  for (const auto& g : gc_groups)
    if (static_cast<int>(g.size()) != dL) return std::nullopt;
  Matrix v1 = columns_of(ea.eigenvectors(), ga_groups.front());  // e_1 (x) R
  Matrix w1 = columns_of(ec.eigenvectors(), gc_groups.front());  // L (x) f_1
  // psi_11 spans the (generically 1-dim) intersection of the two ranges.
  Matrix cross = w1.adjoint() * v1;  // dL x dR
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(0) < 1.0 - 1e-6) return std::nullopt;
  Eigen::VectorXcd psi11 = w1 * svd.matrixU().col(0);
  // Orthonormal basis of W1 starting at psi11 -> {e'_l (x) f_1}.
  Matrix wb(m, dL);
  wb.col(0) = psi11;
  {
    int filled = 1;
    for (int c = 0; c < dL && filled < dL; ++c) {
      Eigen::VectorXcd cand = w1.col(c);
      for (int k = 0; k < filled; ++k) cand -= (wb.col(k).adjoint() * cand)(0) * wb.col(k);
      double n = cand.norm();
      if (n > 1e-6) {
        wb.col(filled++) = cand / n;
      }
    }
    if (filled != dL) return std::nullopt;
  }
  // Basis of V1 starting at psi11 -> {e_1 (x) f'_r}.
  Matrix vb(m, dR);
  vb.col(0) = psi11;
  {
    int filled = 1;
    for (int c = 0; c < dR && filled < dR; ++c) {
      Eigen::VectorXcd cand = v1.col(c);
      for (int k = 0; k < filled; ++k) cand -= (vb.col(k).adjoint() * cand)(0) * vb.col(k);
      double n = cand.norm();
      if (n > 1e-6) vb.col(filled++) = cand / n;
    }
    if (filled != dR) return std::nullopt;
  }
  // c_r in the commutant with c_r psi11 = vb.col(r); grid psi_{l,r} = c_r wb.col(l).
  FactorSplit out;
  out.dL = dL;
  out.dR = dR;
  out.grid = Matrix(m, dL * dR);
  for (int r = 0; r < dR; ++r) {
    Eigen::VectorXcd coef = solve_span_action(cbasis, psi11, vb.col(r));
    Matrix cr = Matrix::Zero(m, m);
    for (size_t k = 0; k < cbasis.size(); ++k) cr += coef(k) * cbasis[k];
    if ((cr * psi11 - vb.col(r)).norm() > 1e-6) return std::nullopt;
    for (int l = 0; l < dL; ++l) out.grid.col(l * dR + r) = cr * wb.col(l);
  }
  // Orthonormality of the grid.
  Matrix gram = out.grid.adjoint() * out.grid;
  if ((gram - Matrix::Identity(dL * dR, dL * dR)).norm() > 1e-6 * dL * dR) return std::nullopt;
  return out;
}

}  // namespace

BlockTensorDecomp wedderburn_decompose(const StarAlgebra& alg, double eps) {
  long d = alg.ambient_dim;
  std::vector<Matrix> center = algebra_center(alg, eps);
  if (center.empty()) throw DegeneracyError("wedderburn: empty center");
  Rng rng(tol::default_seed);
  // Central minimal projectors via a generic central element.
  std::vector<Matrix> blocks_basis;  // ambient columns per block
  for (int attempt = 0; attempt < 8 && blocks_basis.empty(); ++attempt) {
    Matrix h = Matrix::Zero(d, d);
    for (const auto& z : center) h += rng.normal() * z;
    h = (h + h.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    auto groups = cluster_eigs(es.eigenvalues(), 1e-6 * scale);
    if (groups.size() != center.size()) continue;  // not generic: retry
    for (const auto& g : groups) blocks_basis.push_back(columns_of(es.eigenvectors(), g));
  }
  if (blocks_basis.empty())
    throw DegeneracyError("wedderburn: central element not generic after retries");

  BlockTensorDecomp out;
  for (const auto& bb : blocks_basis) {
    long m = bb.cols();
    // Restrict the algebra to the block.
    std::vector<Matrix> abasis;
    for (const auto& b : alg.basis) {
      Matrix r = bb.adjoint() * b * bb;
      if (auto res = gs_residual(abasis, r, eps)) abasis.push_back(*res);
    }
    StarAlgebra restricted;
    restricted.ambient_dim = m;
    restricted.basis = abasis;
    StarAlgebra com = commutant(restricted, eps);
    long adim = restricted.dim(), cdim = com.dim();
    int dL = static_cast<int>(std::lround(std::sqrt(static_cast<double>(adim))));
    int dR = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cdim))));
    if (static_cast<long>(dL) * dL != adim || static_cast<long>(dR) * dR != cdim ||
        static_cast<long>(dL) * dR != m)
      throw DegeneracyError("wedderburn: block is not a factor (dims " + std::to_string(adim) +
                            "," + std::to_string(cdim) + "," + std::to_string(m) + ")");
    std::optional<FactorSplit> split;
    for (int attempt = 0; attempt < 8 && !split; ++attempt)
      split = try_factor_split(restricted.basis, com.basis, dL, dR, rng, eps);
    if (!split) throw DegeneracyError("wedderburn: factor split failed");
    Block blk;
    blk.dimL = dL;
    blk.dimR = dR;
    blk.isometry = bb * split->grid;
    // Verify the representation: every basis element restricts to X (x) 1.
    for (const auto& b : alg.basis) {
      Matrix r = blk.isometry.adjoint() * b * blk.isometry;
      // average over the R factor
      Matrix x = Matrix::Zero(dL, dL);
      for (int l = 0; l < dL; ++l)
        for (int lp = 0; lp < dL; ++lp) {
          Scalar s = 0;
          for (int rr = 0; rr < dR; ++rr) s += r(l * dR + rr, lp * dR + rr);
          x(l, lp) = s / static_cast<double>(dR);
        }
      Matrix recon = Matrix::Zero(dL * dR, dL * dR);
      for (int l = 0; l < dL; ++l)
        for (int lp = 0; lp < dL; ++lp)
          for (int rr = 0; rr < dR; ++rr) recon(l * dR + rr, lp * dR + rr) = x(l, lp);
      if ((recon - r).norm() > 1e-6 * std::max(1.0, r.norm()))
        throw DegeneracyError("wedderburn: block verification failed");
    }
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

namespace {

// Rearranges op so that the factors listed in `first` come before the rest,
// returning the matrix in that (first..., rest...) factor order.
Matrix arrange(const LabeledOperator& op, const std::vector<Wire>& first,
               const std::vector<Wire>& rest) {
  std::vector<int> order;
  for (const auto& w : first) order.push_back(*op.sig.find(w.node, w.port));
  for (const auto& w : rest) order.push_back(*op.sig.find(w.node, w.port));
  std::vector<int> dims;
  for (int k : order) dims.push_back(op.sig.wires()[k].dim);
  IndexCoder src(wire_dims(op.sig)), dst(dims);
  long d = op.dim();
  std::vector<long> map(d);
  std::vector<int> sd(op.sig.size()), dd(op.sig.size());
  for (long i = 0; i < d; ++i) {
    dst.decode(i, dd);
    for (size_t k = 0; k < order.size(); ++k) sd[order[k]] = dd[k];
    map[i] = src.encode(sd);
  }
  Matrix out(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) out(r, c) = op.mat(map[r], map[c]);
  return out;
}

}  // namespace

SplitChannels split_commuting(const LabeledOperator& rho1, const LabeledOperator& rho2,
                              const std::vector<Wire>& shared) {
  SpaceSig ssig(shared);
  for (const auto& w : ssig.wires()) {
    if (!rho1.sig.contains(w) || !rho2.sig.contains(w))
      throw SignatureError("split_commuting: shared wire missing: " + w.label());
  }
  double cn = commutator_norm(rho1, rho2);
  double scale = std::max(1.0, rho1.norm() * rho2.norm());
  if (cn > tol::num * scale)
    throw DomainError("split_commuting: inputs do not commute (norm " + std::to_string(cn) + ")");
  if (!rho1.is_psd(1e-7) || !rho2.is_psd(1e-7))
    throw DomainError("split_commuting: inputs must be PSD");

  std::vector<Wire> p1, p2;
  for (const auto& w : rho1.sig.wires())
    if (!ssig.find(w.node, w.port)) p1.push_back(w);
  for (const auto& w : rho2.sig.wires())
    if (!ssig.find(w.node, w.port)) {
      if (rho1.sig.find(w.node, w.port))
        throw SignatureError("split_commuting: operators overlap outside shared wires");
      p2.push_back(w);
    }
  SpaceSig p1sig(p1), p2sig(p2);
  long dP1 = p1sig.total_dim(), dP2 = p2sig.total_dim(), dS = ssig.total_dim();

  // Slices of rho1 over the shared space (private factor first).
  Matrix m1 = arrange(rho1, p1sig.wires(), ssig.wires());
  Matrix m2 = arrange(rho2, p2sig.wires(), ssig.wires());
  std::vector<Matrix> gens;
  gens.push_back(Matrix::Identity(dS, dS));
  for (long a = 0; a < dP1; ++a)
    for (long b = 0; b < dP1; ++b) {
      Matrix s(dS, dS);
      for (long i = 0; i < dS; ++i)
        for (long j = 0; j < dS; ++j) s(i, j) = m1(a * dS + i, b * dS + j);
      if (s.norm() > tol::eig) gens.push_back(s);
    }
  StarAlgebra a1 = generate_algebra(gens);
  BlockTensorDecomp btd = wedderburn_decompose(a1);

  SplitChannels out;
  out.shared_sig = ssig;
  out.private1 = p1sig;
  out.private2 = p2sig;
  double err2 = 0;
  Matrix rec1 = Matrix::Zero(m1.rows(), m1.cols());
  Matrix rec2 = Matrix::Zero(m2.rows(), m2.cols());
  for (const auto& blk : btd.blocks) {
    long dL = blk.dimL, dR = blk.dimR;
    // X1 = (1_P1 (x) V)^dag m1 (1_P1 (x) V) should equal left (x) 1_R.
    Matrix v = blk.isometry;  // dS x (dL*dR)
    auto conj_in = [&](const Matrix& m, long dp) {
      // (1 (x) V)^dag m (1 (x) V)
      Matrix tmp = Matrix::Zero(dp * dS, dp * dL * dR);
      for (long a = 0; a < dp; ++a)
        tmp.block(a * dS, a * dL * dR, dS, dL * dR) = v;
      Matrix big = tmp.adjoint() * m * tmp;
      return big;
    };
    Matrix x1 = conj_in(m1, dP1);
    Matrix x2 = conj_in(m2, dP2);
    // left: average over R factor (innermost).
    Matrix left(dP1 * dL, dP1 * dL);
    for (long a = 0; a < dP1 * dL; ++a)
      for (long b = 0; b < dP1 * dL; ++b) {
        Scalar s = 0;
        for (long rix = 0; rix < dR; ++rix) s += x1(a * dR + rix, b * dR + rix);
        left(a, b) = s / static_cast<double>(dR);
      }
    // right: average over L factor; x2 index is (p2, l, r)
    Matrix right(dP2 * dR, dP2 * dR);
    for (long a2 = 0; a2 < dP2; ++a2)
      for (long r2 = 0; r2 < dR; ++r2)
        for (long b2 = 0; b2 < dP2; ++b2)
          for (long s2 = 0; s2 < dR; ++s2) {
            Scalar s = 0;
            for (long l = 0; l < dL; ++l)
              s += x2((a2 * dL + l) * dR + r2, (b2 * dL + l) * dR + s2);
            right(a2 * dR + r2, b2 * dR + s2) = s / static_cast<double>(dL);
          }
    out.left.push_back(left);
    out.right.push_back(right);
    out.decomp.blocks.push_back(blk);
    // accumulate reconstructions
    Matrix vp1(dP1 * dS, dP1 * dL * dR);
    vp1.setZero();
    for (long a = 0; a < dP1; ++a) vp1.block(a * dS, a * dL * dR, dS, dL * dR) = v;
    Matrix lfull(dP1 * dL * dR, dP1 * dL * dR);
    lfull.setZero();
    for (long a = 0; a < dP1 * dL; ++a)
      for (long b = 0; b < dP1 * dL; ++b)
        for (long rix = 0; rix < dR; ++rix) lfull(a * dR + rix, b * dR + rix) = left(a, b);
    rec1 += vp1 * lfull * vp1.adjoint();
    Matrix vp2(dP2 * dS, dP2 * dL * dR);
    vp2.setZero();
    for (long a = 0; a < dP2; ++a) vp2.block(a * dS, a * dL * dR, dS, dL * dR) = v;
    Matrix rfull(dP2 * dL * dR, dP2 * dL * dR);
    rfull.setZero();
    for (long a2 = 0; a2 < dP2; ++a2)
      for (long b2 = 0; b2 < dP2; ++b2)
        for (long l = 0; l < dL; ++l)
          for (long r2 = 0; r2 < dR; ++r2)
            for (long s2 = 0; s2 < dR; ++s2)
              rfull((a2 * dL + l) * dR + r2, (b2 * dL + l) * dR + s2) =
                  right(a2 * dR + r2, b2 * dR + s2);
    rec2 += vp2 * rfull * vp2.adjoint();
  }
  err2 = std::max((rec1 - m1).norm() / std::max(1.0, m1.norm()),
                  (rec2 - m2).norm() / std::max(1.0, m2.norm()));
  out.reconstruction_error = err2;
  if (err2 > tol::num)
    throw DegeneracyError("split_commuting: reconstruction failed (err " + std::to_string(err2) +
                          ")");
  return out;
}

namespace {

LabeledOperator assemble(const SplitChannels& s, bool left_side) {
  const SpaceSig& priv = left_side ? s.private1 : s.private2;
  long dp = priv.total_dim(), dS = s.shared_sig.total_dim();
  Matrix acc = Matrix::Zero(dp * dS, dp * dS);
  for (size_t i = 0; i < s.decomp.blocks.size(); ++i) {
    const Block& blk = s.decomp.blocks[i];
    long dL = blk.dimL, dR = blk.dimR;
    Matrix vp(dp * dS, dp * dL * dR);
    vp.setZero();
    for (long a = 0; a < dp; ++a) vp.block(a * dS, a * dL * dR, dS, dL * dR) = blk.isometry;
    Matrix full(dp * dL * dR, dp * dL * dR);
    full.setZero();
    if (left_side) {
      const Matrix& comp = s.left[i];
      for (long a = 0; a < dp * dL; ++a)
        for (long b = 0; b < dp * dL; ++b)
          for (long r = 0; r < dR; ++r) full(a * dR + r, b * dR + r) = comp(a, b);
    } else {
      const Matrix& comp = s.right[i];
      for (long a = 0; a < dp; ++a)
        for (long b = 0; b < dp; ++b)
          for (long l = 0; l < dL; ++l)
            for (long r = 0; r < dR; ++r)
              for (long r2 = 0; r2 < dR; ++r2)
                full((a * dL + l) * dR + r, (b * dL + l) * dR + r2) =
                    comp(a * dR + r, b * dR + r2);
    }
    acc += vp * full * vp.adjoint();
  }
  std::vector<Wire> factors = priv.wires();
  for (const auto& w : s.shared_sig.wires()) factors.push_back(w);
  return LabeledOperator::from_factors(factors, acc);
}

}  // namespace

LabeledOperator reassemble_left(const SplitChannels& s) { return assemble(s, true); }
LabeledOperator reassemble_right(const SplitChannels& s) { return assemble(s, false); }

}  // namespace qcm
