#pragma once

// Sparse storage and direct factorization of block saddle systems
//   K = [ g1*A   g2*B^T ]
//       [ g3*B   0      ]
// backed by Eigen's supernodal SparseLU with partial pivoting.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vmix/errors.hpp"

namespace vmix {

/// Compressed row storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols,
                                  const std::vector<Triplet>& trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

inline double max_asymmetry(const SparseMatrix& a) {
  const SparseMatrix t = a.transpose();
  const SparseMatrix d = a - t;
  double m = 0.0;
  for (Eigen::Index k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

inline SparseMatrix diagonal_matrix(const Vec& d) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  return from_triplets(d.size(), d.size(), t);
}

/// Stacks [g1*A g2*B^T; g3*B 0] into one sparse matrix.
inline SparseMatrix saddle_matrix(const SparseMatrix& A, const SparseMatrix& B, double g1,
                                  double g2, double g3) {
  const Eigen::Index nv = A.rows();
  const Eigen::Index nq = B.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros()));
  for (Eigen::Index r = 0; r < A.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
      t.emplace_back(it.row(), it.col(), g1 * it.value());
  for (Eigen::Index r = 0; r < B.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(B, r); it; ++it) {
      t.emplace_back(nv + it.row(), it.col(), g3 * it.value());
      t.emplace_back(it.col(), nv + it.row(), g2 * it.value());
    }
  return from_triplets(nv + nq, nv + nq, t);
}

/// Reusable LU factors of a saddle matrix. Immutable after construction;
/// concurrent solve() calls on one instance are safe.
class SaddleFactorization {
 public:
  SaddleFactorization(const SparseMatrix& A, const SparseMatrix& B, double g1, double g2,
                      double g3)
      : nv_(A.rows()), nq_(B.rows()), gammas_{g1, g2, g3} {
    if (A.rows() != A.cols()) throw ParameterError("factorize_saddle: A must be square");
    if (B.cols() != A.rows())
      throw ParameterError("factorize_saddle: B must have as many columns as A has rows");
    for (int i = 0; i < 3; ++i)
      if (gammas_[i] == 0.0 || !std::isfinite(gammas_[i]))
        throw SolverError("factorize_saddle: block scaling gamma" + std::to_string(i + 1) +
                          " is zero or non-finite");
    for (Eigen::Index r = 0; r < B.outerSize(); ++r) {
      bool nonzero = false;
      for (SparseMatrix::InnerIterator it(B, r); it; ++it) nonzero |= (it.value() != 0.0);
      if (!nonzero)
        throw SolverError("factorize_saddle: rank deficiency, row " + std::to_string(r) +
                          " of B is zero");
    }
    K_ = saddle_matrix(A, B, g1, g2, g3);
    Eigen::SparseMatrix<double> colmajor = K_;
    lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->analyzePattern(colmajor);
    lu_->factorize(colmajor);
    if (lu_->info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "factorize_saddle: numerical singularity (gamma = " << g1 << ", " << g2 << ", "
          << g3 << "; " << lu_->lastErrorMessage() << ")";
      throw SolverError(msg.str());
    }
  }

  Vec solve(const Vec& rhs) const {
    if (rhs.size() != nv_ + nq_) throw ParameterError("SaddleFactorization: rhs size mismatch");
    Vec x = lu_->solve(rhs);
    if (lu_->info() != Eigen::Success || !x.allFinite())
      throw SolverError("SaddleFactorization: solve failed");
    return x;
  }

  /// Solves for (u, p) with block right-hand sides.
  std::pair<Vec, Vec> solve(const Vec& f, const Vec& g) const {
    Vec rhs(nv_ + nq_);
    rhs << f, g;
    Vec x = solve(rhs);
    return {x.head(nv_), x.tail(nq_)};
  }

  double backward_error(const Vec& x, const Vec& rhs) const {
    const double nr = rhs.norm();
    return (K_ * x - rhs).norm() / (nr > 0.0 ? nr : 1.0);
  }

  const SparseMatrix& matrix() const { return K_; }
  const std::array<double, 3>& gammas() const { return gammas_; }
  Eigen::Index n_v() const { return nv_; }
  Eigen::Index n_q() const { return nq_; }

 private:
  Eigen::Index nv_, nq_;
  std::array<double, 3> gammas_;
  SparseMatrix K_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

inline SaddleFactorization factorize_saddle(const SparseMatrix& A, const SparseMatrix& B,
                                            double g1 = 1.0, double g2 = 1.0,
                                            double g3 = 1.0) {
  return SaddleFactorization(A, B, g1, g2, g3);
}

}  // namespace vmix
