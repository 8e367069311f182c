#pragma once

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "vmix/errors.hpp"
#include "vmix/sparse.hpp"
#include "vmix/time_grid.hpp"

namespace vmix {

/// Measured norms entering the stability inequality, L^1 in time.
struct StabilityMeasurements {
  double u_norm = 0.0;  // |u|_{L1(V)}
  double p_norm = 0.0;  // |p|_{L1(Q)}
  double f_norm = 0.0;  // |f|_{L1(V')}
  double g_norm = 0.0;  // |g|_{L1(Q')}
};

/// Accumulates Gram-norm integrals of a run.
class NormAccumulator {
 public:
  NormAccumulator(const SparseMatrix& G_V, const SparseMatrix& G_Q, const TimeGrid& grid)
      : G_V_(G_V), G_Q_(G_Q), grid_(grid) {
    lv_.compute(Eigen::SparseMatrix<double>(G_V));
    lq_.compute(Eigen::SparseMatrix<double>(G_Q));
    if (lv_.info() != Eigen::Success || lq_.info() != Eigen::Success)
      throw SolverError("NormAccumulator: Gram matrix not SPD");
  }
  void add(std::size_t n, const Vec& u, const Vec& p, const Vec& f, const Vec& g) {
    const double w = (n == 0 || n == grid_.n_steps() ? 0.5 : 1.0) * grid_.dt();
    m_.u_norm += w * std::sqrt(std::max(0.0, u.dot(G_V_ * u)));
    m_.p_norm += w * std::sqrt(std::max(0.0, p.dot(G_Q_ * p)));
    m_.f_norm += w * std::sqrt(std::max(0.0, f.dot(lv_.solve(f))));
    m_.g_norm += w * std::sqrt(std::max(0.0, g.dot(lq_.solve(g))));
  }
  const StabilityMeasurements& result() const { return m_; }

 private:
  SparseMatrix G_V_, G_Q_;
  TimeGrid grid_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lv_, lq_;
  StabilityMeasurements m_;
};

}  // namespace vmix
