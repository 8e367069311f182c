#pragma once

// Spectral estimators for the constants of a discrete saddle pair:
//   inf-sup constant beta_h   (smallest singular value of B in the V/Q norms)
//   kernel ellipticity alpha_h (smallest eigenvalue of A on null(B))
//   continuity norms ||a||, ||b||.
// Norms are given by SPD Gram matrices G_V, G_Q.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <random>
#include <vector>
#include <string>
#include <utility>

#include "vmix/errors.hpp"
#include "vmix/sparse.hpp"

namespace vmix {

struct IterationControl {
  double tol = 1e-12;  // relative change of the Rayleigh quotient
  int max_iter = 20000;
};

struct InfSupEstimate {
  double beta = 0.0;
  int iterations = 0;
  bool rank_deficient = false;
};

struct KernelEllipticity {
  double alpha = std::numeric_limits<double>::infinity();
  Eigen::Index nullspace_dim = 0;
  bool empty_nullspace = true;
  Eigen::MatrixXd basis;  // G_V-orthonormal columns spanning null(B)
};

namespace detail {

inline Vec seeded_start(Eigen::Index n, unsigned seed = 20240611u) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = dist(gen) * ((i % 3 == 0) ? -1.0 : 1.0);
  return x;
}

inline bool has_zero_row(const SparseMatrix& B) {
  for (Eigen::Index r = 0; r < B.outerSize(); ++r) {
    bool nonzero = false;
    for (SparseMatrix::InnerIterator it(B, r); it; ++it) nonzero |= (it.value() != 0.0);
    if (!nonzero) return true;
  }
  return false;
}

inline double g_norm(const SparseMatrix& G, const Vec& x) { return std::sqrt(x.dot(G * x)); }

}  // namespace detail

/// Discrete inf-sup constant by inverse iteration on
///   B G_V^{-1} B^T q = mu G_Q q,   beta_h = sqrt(mu_min).
/// Each iteration is one solve with the saddle matrix [G_V B^T; B 0].
inline InfSupEstimate infsup_estimate(const SparseMatrix& G_V, const SparseMatrix& G_Q,
                                      const SparseMatrix& B, IterationControl ctl = {}) {
  InfSupEstimate out;
  if (detail::has_zero_row(B)) {
    out.rank_deficient = true;
    return out;
  }
  std::unique_ptr<SaddleFactorization> fac;
  try {
    fac = std::make_unique<SaddleFactorization>(G_V, B, 1.0, 1.0, 1.0);
  } catch (const SolverError&) {
    out.rank_deficient = true;
    return out;
  }
  const Eigen::Index nq = B.rows();
  Vec q = detail::seeded_start(nq);
  q /= detail::g_norm(G_Q, q);
  const Vec zero_v = Vec::Zero(B.cols());
  double mu_prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= ctl.max_iter; ++it) {
    const Vec gq = G_Q * q;
    auto [v, y] = fac->solve(zero_v, Vec(-gq));
    const double denom = gq.dot(y);
    if (!(denom > 0.0)) {
      out.rank_deficient = true;
      out.iterations = it;
      return out;
    }
    const double mu = q.dot(gq) / denom;
    q = y / detail::g_norm(G_Q, y);
    out.iterations = it;
    if (std::abs(mu - mu_prev) <= ctl.tol * std::abs(mu)) {
      out.beta = std::sqrt(std::max(mu, 0.0));
      return out;
    }
    mu_prev = mu;
  }
  throw SolverError("infsup_estimate: inverse iteration did not converge (last beta = " +
                    std::to_string(std::sqrt(std::max(mu_prev, 0.0))) + ")");
}

/// Dense kernel ellipticity: orthonormal basis of null(B) from a QR
/// factorization of B^T, then the smallest generalized eigenvalue of
/// Z^T A Z relative to Z^T G_V Z. Intended for small meshes.
inline KernelEllipticity kernel_ellipticity(const SparseMatrix& A, const SparseMatrix& B,
                                            const SparseMatrix& G_V) {
  if (A.rows() != A.cols() || B.cols() != A.rows() || G_V.rows() != A.rows())
    throw ParameterError("kernel_ellipticity: inconsistent shapes");
  KernelEllipticity out;
  const Eigen::MatrixXd Bt = Eigen::MatrixXd(B).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bt);
  const Eigen::Index n = Bt.rows();
  const Eigen::Index rank = qr.rank();
  out.nullspace_dim = n - rank;
  if (out.nullspace_dim == 0) return out;
  out.empty_nullspace = false;

  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd Z = Q.rightCols(out.nullspace_dim);
  const Eigen::MatrixXd Gd(G_V);
  const Eigen::MatrixXd Ad(A);
  const Eigen::MatrixXd H = Z.transpose() * Ad * Z;
  const Eigen::MatrixXd G = Z.transpose() * Gd * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(H, G);
  if (es.info() != Eigen::Success) throw SolverError("kernel_ellipticity: eigensolver failed");
  out.alpha = es.eigenvalues().minCoeff();
  // G-orthonormalize: Z L^{-T} with G = L L^T
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  out.basis = llt.matrixU().solve(Z.transpose()).transpose();
  return out;
}

/// Iterative kernel ellipticity for meshes too large for the dense path:
/// inverse iteration with the saddle matrix [A B^T; B 0] keeps every iterate
/// in null(B).
inline double kernel_ellipticity_iterative(const SparseMatrix& A, const SparseMatrix& B,
                                           const SparseMatrix& G_V, IterationControl ctl = {}) {
  SaddleFactorization fac(A, B, 1.0, 1.0, 1.0);
  const Vec zero_q = Vec::Zero(B.rows());
  Vec x = detail::seeded_start(A.rows(), 7u);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= ctl.max_iter; ++it) {
    auto [v, lam] = fac.solve(Vec(G_V * x), zero_q);
    const double gv = v.dot(G_V * v);
    if (!(gv > 0.0)) throw SolverError("kernel_ellipticity_iterative: degenerate iterate");
    const double alpha = v.dot(A * v) / gv;
    x = v / std::sqrt(gv);
    if (std::abs(alpha - prev) <= ctl.tol * std::abs(alpha)) return alpha;
    prev = alpha;
  }
  throw SolverError("kernel_ellipticity_iterative: no convergence (last alpha = " +
                    std::to_string(prev) + ")");
}

namespace detail {

// Largest eigenvalue of an operator self-adjoint in the M inner product, by
// Lanczos with full reorthogonalization. Extreme Ritz values converge even
// when the top of the spectrum is clustered, where plain power iteration
// stalls.
template <typename Op>
double lanczos_max(const SparseMatrix& M, Op&& op, Eigen::Index n, unsigned seed,
                   const IterationControl& ctl, const char* who) {
  const Eigen::Index max_steps = std::min<Eigen::Index>(n, ctl.max_iter);
  std::vector<Vec> basis;
  std::vector<double> alpha, beta;
  Vec q = seeded_start(n, seed);
  q /= g_norm(M, q);
  double prev = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < max_steps; ++k) {
    basis.push_back(q);
    Vec w = op(q);
    alpha.push_back(q.dot(M * w));
    // full reorthogonalization in the M inner product, applied twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : basis) w -= v.dot(M * w) * v;
    const double b = g_norm(M, w);
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(T, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    const double scale = std::max(std::abs(top), std::numeric_limits<double>::min());
    if (!(b > 1e-13 * scale) || std::abs(top - prev) <= ctl.tol * scale) return top;
    prev = top;
    beta.push_back(b);
    q = w / b;
  }
  if (max_steps == n) return prev;
  throw SolverError(std::string(who) + ": Lanczos did not converge (last estimate = " +
                    std::to_string(prev) + ")");
}

}  // namespace detail

/// ||a|| = largest eigenvalue of A x = lambda G_V x (A symmetric PSD).
inline double continuity_norm(const SparseMatrix& A, const SparseMatrix& G_V,
                              IterationControl ctl = {1e-10, 600}) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(Eigen::SparseMatrix<double>(G_V));
  if (ldlt.info() != Eigen::Success) throw SolverError("continuity_norm: G_V not SPD");
  return detail::lanczos_max(
      G_V, [&](const Vec& x) { return Vec(ldlt.solve(Vec(A * x))); }, A.rows(), 11u, ctl,
      "continuity_norm");
}

/// ||b|| = largest singular value of B in the (G_V, G_Q) norms.
inline double b_norm(const SparseMatrix& B, const SparseMatrix& G_V, const SparseMatrix& G_Q,
                     IterationControl ctl = {1e-10, 600}) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lv, lq;
  lv.compute(Eigen::SparseMatrix<double>(G_V));
  lq.compute(Eigen::SparseMatrix<double>(G_Q));
  if (lv.info() != Eigen::Success || lq.info() != Eigen::Success)
    throw SolverError("b_norm: Gram matrix not SPD");
  const SparseMatrix Bt = B.transpose();
  const double mu = detail::lanczos_max(
      G_Q, [&](const Vec& q) { return Vec(lq.solve(Vec(B * lv.solve(Vec(Bt * q))))); }, B.rows(),
      13u, ctl, "b_norm");
  return std::sqrt(std::max(mu, 0.0));
}

/// Every constant needed by the certificate, estimated in one pass.
struct SaddleConstants {
  double alpha = 0.0;   // kernel ellipticity
  double beta = 0.0;    // inf-sup
  double norm_a = 0.0;  // continuity of a
  double norm_b = 0.0;  // continuity of b
  bool dense = false;
};

namespace detail {

// Extreme generalized eigenvalues of (H, G) with G SPD.
inline std::pair<double, double> dense_extremes(const Eigen::MatrixXd& H, const Eigen::MatrixXd& G) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(H, G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace detail

/// Dense eigensolves up to `dense_limit` velocity unknowns, inverse and power
/// iterations beyond.
inline SaddleConstants estimate_saddle_constants(const SparseMatrix& A, const SparseMatrix& B,
                                                 const SparseMatrix& G_V, const SparseMatrix& G_Q,
                                                 Eigen::Index dense_limit = 1500) {
  SaddleConstants c;
  if (A.rows() <= dense_limit) {
    c.dense = true;
    const Eigen::MatrixXd Gv(G_V), Gq(G_Q), Ad(A), Bd(B);
    Eigen::LLT<Eigen::MatrixXd> llt(Gv);
    if (llt.info() != Eigen::Success) throw SolverError("estimate_saddle_constants: G_V not SPD");
    const Eigen::MatrixXd S = Bd * llt.solve(Bd.transpose());
    const auto [smin, smax] = detail::dense_extremes(S, Gq);
    c.beta = std::sqrt(std::max(smin, 0.0));
    c.norm_b = std::sqrt(std::max(smax, 0.0));
    c.norm_a = detail::dense_extremes(Ad, Gv).second;
    c.alpha = kernel_ellipticity(A, B, G_V).alpha;
    return c;
  }
  c.beta = infsup_estimate(G_V, G_Q, B).beta;
  c.alpha = kernel_ellipticity_iterative(A, B, G_V);
  c.norm_a = continuity_norm(A, G_V);
  c.norm_b = b_norm(B, G_V, G_Q);
  return c;
}

}  // namespace vmix
