#pragma once

// Trapezoid time stepping for the block Volterra saddle system
//
//   A u(t) + B^T p(t) = f(t) + int_0^t [k1(t,s) A u(s) + k2(t,s) B^T p(s)] ds
//   B u(t)            = g(t) + int_0^t  k3(t,s) B u(s) ds
//
// The t_n end of each trapezoid sum is moved to the left-hand side, which
// scales the blocks by gamma_i = 1 - (dt/2) k_i(t_n, t_n).

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vmix/errors.hpp"
#include "vmix/kernels.hpp"
#include "vmix/sparse.hpp"
#include "vmix/time_grid.hpp"

namespace vmix {

/// Composite trapezoid weights on [0, t_n]. For n = 0 the single weight is 0.
inline std::vector<double> trapezoid_weights(const TimeGrid& grid, std::size_t n) {
  if (n > grid.n_steps()) throw IndexError("trapezoid_weights: step index out of range");
  if (n == 0) return {0.0};
  std::vector<double> w(n + 1, grid.dt());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

struct BlockSaddleSystem {
  SparseMatrix A;  // n_V x n_V, symmetric PSD
  SparseMatrix B;  // n_Q x n_V
  std::optional<MemoryKernel> k1, k2, k3;

  Eigen::Index n_v() const { return A.rows(); }
  Eigen::Index n_q() const { return B.rows(); }

  void validate() const {
    if (A.rows() != A.cols()) throw ParameterError("BlockSaddleSystem: A must be square");
    if (B.cols() != A.rows()) throw ParameterError("BlockSaddleSystem: B/A shape mismatch");
    if (max_asymmetry(A) >= 1e-12) throw ParameterError("BlockSaddleSystem: A is not symmetric");
  }
};

enum class Field { u, p };
enum class SumMode { direct, recurrence };

/// Keep every past vector, or only x_0 plus the exponential accumulators.
enum class Retention { full, recurrence_only };

/// Past solution vectors and, per (field, decay rate), the running sums
/// P_n = exp(-r dt) P_{n-1} + dt x_n used by exponential kernels.
class HistoryBuffer {
 public:
  HistoryBuffer(const TimeGrid& grid, Retention retention = Retention::full)
      : grid_(grid), retention_(retention) {}

  /// Must be called before the first push.
  void track_rate(Field which, double rate) {
    if (count_ > 0) throw ModeError("HistoryBuffer: rates must be tracked before the first push");
    accumulators_.try_emplace({which, rate}, Vec());
  }

  void push(const Vec& u, const Vec& p) {
    if (count_ == 0) {
      u0_ = u;
      p0_ = p;
    }
    if (retention_ == Retention::full) {
      us_.push_back(u);
      ps_.push_back(p);
    }
    const double dt = grid_.dt();
    for (auto& [key, acc] : accumulators_) {
      const Vec& x = key.first == Field::u ? u : p;
      if (count_ == 0)
        acc = dt * x;
      else
        acc = std::exp(-key.second * dt) * acc + dt * x;
    }
    ++count_;
  }

  std::size_t size() const { return count_; }
  Retention retention() const { return retention_; }
  const TimeGrid& grid() const { return grid_; }

  const Vec& u(std::size_t j) const { return stored(us_, j); }
  const Vec& p(std::size_t j) const { return stored(ps_, j); }
  const Vec& first(Field which) const {
    if (count_ == 0) throw IndexError("HistoryBuffer: empty");
    return which == Field::u ? u0_ : p0_;
  }

  bool tracks(Field which, double rate) const {
    return accumulators_.count({which, rate}) != 0;
  }

  /// sum_{j<n} w_{n,j} k(t_n, t_j) x_j.
  Vec sum(const MemoryKernel& k, std::size_t n, Field which, SumMode mode) const {
    if (n < 1) throw IndexError("history_sum: n must be >= 1");
    if (n > count_) throw IndexError("history_sum: history incomplete for step " + std::to_string(n));
    return mode == SumMode::direct ? direct_sum(k, n, which) : recurrence_sum(k, n, which);
  }

 private:
  const Vec& stored(const std::vector<Vec>& xs, std::size_t j) const {
    if (retention_ != Retention::full)
      throw ModeError("HistoryBuffer: past vectors are not retained");
    if (j >= xs.size()) throw IndexError("HistoryBuffer: index out of range");
    return xs[j];
  }

  Vec direct_sum(const MemoryKernel& k, std::size_t n, Field which) const {
    if (retention_ != Retention::full)
      throw ModeError("history_sum: direct summation needs full retention");
    const auto& xs = which == Field::u ? us_ : ps_;
    const auto w = trapezoid_weights(grid_, n);
    const double tn = grid_.node(n);
    Vec acc = Vec::Zero(xs[0].size());
    for (std::size_t j = 0; j < n; ++j) acc += (w[j] * k(tn, grid_.node(j))) * xs[j];
    return acc;
  }

  Vec recurrence_sum(const MemoryKernel& k, std::size_t n, Field which) const {
    const auto& ex = k.exp_structure();
    if (!ex) throw ModeError("history_sum: recurrence requires an exponential-convolution kernel");
    auto it = accumulators_.find({which, ex->rate});
    if (it == accumulators_.end())
      throw ModeError("history_sum: no accumulator for this field and decay rate");
    if (n != count_)
      throw ModeError("history_sum: recurrence only serves the step following the latest push");
    const double dt = grid_.dt();
    const double tn = grid_.node(n);
    // sum_{j<n} dt e^{-r(t_n - t_j)} x_j minus the half weight at j = 0
    return ex->coeff * (std::exp(-ex->rate * dt) * it->second -
                        (0.5 * dt * std::exp(-ex->rate * tn)) * first(which));
  }

  TimeGrid grid_;
  Retention retention_;
  std::size_t count_ = 0;
  std::vector<Vec> us_, ps_;
  Vec u0_, p0_;
  std::map<std::pair<Field, double>, Vec> accumulators_;
};

inline Vec history_sum(const HistoryBuffer& hist, const MemoryKernel& k, std::size_t n,
                       Field which, SumMode mode = SumMode::direct) {
  return hist.sum(k, n, which, mode);
}

/// gamma = 1 - w_{n,n} k(t_n, t_n); 1 for an absent kernel or n = 0.
inline double implicit_gamma(const std::optional<MemoryKernel>& k, const TimeGrid& grid,
                             std::size_t n) {
  if (!k || n == 0) return 1.0;
  const double tn = grid.node(n);
  return 1.0 - 0.5 * grid.dt() * (*k)(tn, tn);
}

/// Throws StabilityGateError unless |w_{n,n} k(t_n,t_n)| < 1.
inline void check_stability_gate(const std::optional<MemoryKernel>& k, const TimeGrid& grid,
                                 std::size_t n, const char* name) {
  if (!k || n == 0) return;
  const double tn = grid.node(n);
  const double load = std::abs(0.5 * grid.dt() * (*k)(tn, tn));
  if (!(load < 1.0)) {
    std::ostringstream msg;
    msg << "dt too large for kernel " << name << ": |w_nn k(t_n,t_n)| = " << load
        << " >= 1 at step " << n << " (dt = " << grid.dt() << "); use dt < 2/C_k = "
        << (k->bound() > 0.0 ? 2.0 / k->bound() : INFINITY);
    throw StabilityGateError(msg.str());
  }
}

struct StepperOptions {
  /// Use exponential recurrences when every attached kernel allows it.
  bool use_recurrence = true;
  /// Compare recurrence and direct sums at every step (needs full retention).
  bool audit_history = false;
  /// Retain every past vector even when recurrences make it unnecessary.
  bool retain_full = false;
};

class VolterraStepper {
 public:
  VolterraStepper(BlockSaddleSystem sys, const TimeGrid& grid, StepperOptions opt = {})
      : sys_(std::move(sys)), grid_(grid), opt_(opt), hist_(grid, Retention::full) {
    sys_.validate();
    const bool all_exp = kernel_ok(sys_.k1) && kernel_ok(sys_.k2) && kernel_ok(sys_.k3);
    recurrence_ = opt_.use_recurrence && all_exp;
    if (opt_.audit_history && !recurrence_)
      throw ModeError("VolterraStepper: audit requires exponential-convolution kernels");
    const bool full = !recurrence_ || opt_.audit_history || opt_.retain_full;
    hist_ = HistoryBuffer(grid, full ? Retention::full : Retention::recurrence_only);
    if (recurrence_) {
      if (sys_.k1) hist_.track_rate(Field::u, sys_.k1->exp_structure()->rate);
      if (sys_.k3) hist_.track_rate(Field::u, sys_.k3->exp_structure()->rate);
      if (sys_.k2) hist_.track_rate(Field::p, sys_.k2->exp_structure()->rate);
    }
    // convolution kernels have constant k(t,t): gate every step up front
    if (grid_.n_steps() >= 1) gate(1);
  }

  /// Advances to step n; steps must be taken in order starting at 0.
  std::pair<Vec, Vec> step(std::size_t n, const Vec& f_n, const Vec& g_n) {
    if (n != hist_.size())
      throw IndexError("VolterraStepper: expected step " + std::to_string(hist_.size()) +
                       ", got " + std::to_string(n));
    if (n > grid_.n_steps()) throw IndexError("VolterraStepper: past the final time");
    if (f_n.size() != sys_.n_v() || g_n.size() != sys_.n_q())
      throw ParameterError("VolterraStepper: right-hand side size mismatch");
    gate(n);

    Vec f = f_n;
    Vec g = g_n;
    if (n > 0) {
      if (sys_.k1) f += sys_.A * memory(*sys_.k1, n, Field::u);
      if (sys_.k2) f += sys_.B.transpose() * memory(*sys_.k2, n, Field::p);
      if (sys_.k3) g += sys_.B * memory(*sys_.k3, n, Field::u);
    }
    const auto gam = gammas(n);
    auto [u, p] = factorization(gam).solve(f, g);
    hist_.push(u, p);
    return {std::move(u), std::move(p)};
  }

  std::pair<Vec, Vec> advance(const Vec& f_n, const Vec& g_n) {
    return step(hist_.size(), f_n, g_n);
  }

  std::array<double, 3> gammas(std::size_t n) const {
    return {implicit_gamma(sys_.k1, grid_, n), implicit_gamma(sys_.k2, grid_, n),
            implicit_gamma(sys_.k3, grid_, n)};
  }

  std::size_t next_step() const { return hist_.size(); }
  const HistoryBuffer& history() const { return hist_; }
  const BlockSaddleSystem& system() const { return sys_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t factorization_count() const { return factorizations_; }
  bool uses_recurrence() const { return recurrence_; }
  double max_audit_discrepancy() const { return audit_max_; }
  std::size_t audited_sums() const { return audit_count_; }

 private:
  static bool kernel_ok(const std::optional<MemoryKernel>& k) {
    return !k || k->is_exp_convolution();
  }

  void gate(std::size_t n) const {
    check_stability_gate(sys_.k1, grid_, n, "k1");
    check_stability_gate(sys_.k2, grid_, n, "k2");
    check_stability_gate(sys_.k3, grid_, n, "k3");
  }

  Vec memory(const MemoryKernel& k, std::size_t n, Field which) {
    if (!recurrence_) return hist_.sum(k, n, which, SumMode::direct);
    Vec rec = hist_.sum(k, n, which, SumMode::recurrence);
    if (opt_.audit_history) {
      const Vec dir = hist_.sum(k, n, which, SumMode::direct);
      const double scale = dir.norm();
      const double diff = (rec - dir).norm();
      audit_max_ = std::max(audit_max_, scale > 0.0 ? diff / scale : diff);
      ++audit_count_;
    }
    return rec;
  }

  const SaddleFactorization& factorization(const std::array<double, 3>& gam) {
    auto it = cache_.find(gam);
    if (it != cache_.end()) return *it->second;
    // non-convolution kernels change gamma every step; keep the cache small
    if (cache_.size() >= 4) cache_.clear();
    auto fac = std::make_unique<SaddleFactorization>(sys_.A, sys_.B, gam[0], gam[1], gam[2]);
    ++factorizations_;
    return *cache_.emplace(gam, std::move(fac)).first->second;
  }

  BlockSaddleSystem sys_;
  TimeGrid grid_;
  StepperOptions opt_;
  HistoryBuffer hist_;
  bool recurrence_ = false;
  std::map<std::array<double, 3>, std::unique_ptr<SaddleFactorization>> cache_;
  std::size_t factorizations_ = 0;
  double audit_max_ = 0.0;
  std::size_t audit_count_ = 0;
};

/// Runs steps 0..N, calling observer(n, t_n, u_n, p_n) after each one.
/// data(n, t_n) must return the pair (f_n, g_n).
template <typename Data, typename Observer>
void run_volterra(VolterraStepper& stepper, Data&& data, Observer&& observer) {
  const TimeGrid& grid = stepper.grid();
  for (std::size_t n = stepper.next_step(); n <= grid.n_steps(); ++n) {
    const double tn = grid.node(n);
    auto [f, g] = data(n, tn);
    auto [u, p] = stepper.step(n, f, g);
    observer(n, tn, u, p);
  }
}

}  // namespace vmix
