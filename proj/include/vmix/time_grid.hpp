#pragma once

#include <cmath>
#include <cstddef>

#include "vmix/errors.hpp"

namespace vmix {

/// Uniform partition of [0, T] with nodes t_j = j * dt.
class TimeGrid {
 public:
  TimeGrid(double final_time, std::size_t n_steps) : T_(final_time), n_(n_steps) {
    if (!(final_time > 0.0) || !std::isfinite(final_time))
      throw ParameterError("TimeGrid: final time must be positive and finite");
    if (n_steps < 1) throw ParameterError("TimeGrid: n_steps must be >= 1");
  }

  double final_time() const { return T_; }
  std::size_t n_steps() const { return n_; }
  double dt() const { return T_ / static_cast<double>(n_); }

  // Last node is returned as T exactly.
  double node(std::size_t j) const {
    if (j > n_) throw IndexError("TimeGrid: node index out of range");
    return j == n_ ? T_ : static_cast<double>(j) * dt();
  }

 private:
  double T_;
  std::size_t n_;
};

}  // namespace vmix
