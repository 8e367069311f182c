#pragma once

// Relaxation moduli, Volterra memory kernels and the scalar creep factor
// phi(t) = 1 + int_0^t k(t,s) phi(s) ds used as the time factor of
// step-loaded viscoelastic solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vmix/errors.hpp"
#include "vmix/quadrature.hpp"
#include "vmix/time_grid.hpp"

namespace vmix {

/// Standard linear solid: spring k1 in parallel with a Maxwell arm (k2, eta2).
struct PronySLS {
  double k1;
  double k2;
  double eta2;

  void validate() const {
    if (!(k1 > 0.0) || !(k2 > 0.0) || !(eta2 > 0.0))
      throw ParameterError("PronySLS: k1, k2 and eta2 must be positive");
  }
  double e_inf() const { return k1 * k2 / (k1 + k2); }
  double relaxation_time() const { return eta2 / (k1 + k2); }
};

/// Single-exponential relaxation modulus E(t) = e_inf + (e0 - e_inf) exp(-rate t).
struct RelaxationModulus {
  double e0;
  double e_inf;
  double rate;

  static RelaxationModulus from_sls(const PronySLS& p) {
    p.validate();
    return {p.k1, p.e_inf(), 1.0 / p.relaxation_time()};
  }

  void validate() const {
    if (!(e0 > 0.0) || e_inf < 0.0 || e_inf > e0 || rate < 0.0)
      throw ParameterError("RelaxationModulus: need e0 > 0, 0 <= e_inf <= e0, rate >= 0");
  }

  double operator()(double t) const { return e_inf + (e0 - e_inf) * std::exp(-rate * t); }
  double derivative(double t) const { return -(e0 - e_inf) * rate * std::exp(-rate * t); }
};

inline double sls_relaxation(const PronySLS& p, double t) {
  p.validate();
  if (t < 0.0) throw ParameterError("sls_relaxation: t must be >= 0");
  const double e_inf = p.e_inf();
  if (std::isinf(t)) return e_inf;
  return e_inf + (p.k1 - e_inf) * std::exp(-t / p.relaxation_time());
}

/// k(t,s) = coeff * exp(-rate (t - s)).
struct ExpConvolution {
  double coeff;
  double rate;
};

/// Bounded two-time kernel on the triangle 0 <= s <= t <= T.
class MemoryKernel {
 public:
  using Fn = std::function<double(double, double)>;

  static MemoryKernel exp_convolution(double coeff, double rate) {
    if (!std::isfinite(coeff) || !std::isfinite(rate) || rate < 0.0)
      throw ParameterError("exp_convolution kernel: need finite coeff and rate >= 0");
    MemoryKernel k;
    k.exp_ = ExpConvolution{coeff, rate};
    k.bound_ = std::abs(coeff);
    k.fn_ = [coeff, rate](double t, double s) { return coeff * std::exp(-rate * (t - s)); };
    return k;
  }

  static MemoryKernel general(Fn fn, double bound) {
    if (!fn) throw ParameterError("general kernel: empty callable");
    if (!(bound >= 0.0)) throw ParameterError("general kernel: bound must be >= 0");
    MemoryKernel k;
    k.fn_ = std::move(fn);
    k.bound_ = bound;
    return k;
  }

  static MemoryKernel zero() { return exp_convolution(0.0, 0.0); }

  double operator()(double t, double s) const { return fn_(t, s); }
  double bound() const { return bound_; }
  const std::optional<ExpConvolution>& exp_structure() const { return exp_; }
  bool is_exp_convolution() const { return exp_.has_value(); }

  MemoryKernel scaled(double factor) const {
    if (exp_) return exp_convolution(factor * exp_->coeff, exp_->rate);
    auto fn = fn_;
    return general([fn, factor](double t, double s) { return factor * fn(t, s); },
                   std::abs(factor) * bound_);
  }

 private:
  MemoryKernel() = default;
  Fn fn_;
  double bound_ = 0.0;
  std::optional<ExpConvolution> exp_;
};

/// k(t,s) = E'(t-s)/E(0).
inline MemoryKernel beam_kernel(const RelaxationModulus& m) {
  m.validate();
  return MemoryKernel::exp_convolution(m.derivative(0.0) / m.e0, m.rate);
}

inline MemoryKernel beam_kernel(const PronySLS& p) {
  return beam_kernel(RelaxationModulus::from_sls(p));
}

/// Non-Fickian flow kernel (1/delta) exp(-(t-s)/delta).
inline MemoryKernel fickian_kernel(double delta) {
  if (!(delta > 0.0)) throw ParameterError("fickian_kernel: delta must be positive");
  return MemoryKernel::exp_convolution(1.0 / delta, 1.0 / delta);
}

struct CreepFactor {
  std::vector<double> samples;  // phi(t_n), n = 0..n_steps
  double residual = 0.0;        // max residual of the scalar Volterra equation
  double dt = 0.0;
  std::function<double(double)> closed_form;  // empty for general kernels

  /// phi(t); closed form when available, otherwise piecewise-linear in the samples.
  double value(double t) const {
    if (closed_form) return closed_form(t);
    if (samples.empty()) return 1.0;
    const double pos = t / dt;
    const auto last = samples.size() - 1;
    if (pos <= 0.0) return samples.front();
    if (pos >= static_cast<double>(last)) return samples.back();
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return (1.0 - frac) * samples[i] + frac * samples[i + 1];
  }
};

namespace detail {

// Trapezoid solve of phi = 1 + int k phi on N uniform panels of [0, T].
inline std::vector<double> creep_trapezoid(const MemoryKernel& k, double T, std::size_t N) {
  const double h = T / static_cast<double>(N);
  std::vector<double> phi(N + 1);
  phi[0] = 1.0;
  for (std::size_t n = 1; n <= N; ++n) {
    const double tn = h * static_cast<double>(n);
    double acc = 0.5 * h * k(tn, 0.0) * phi[0];
    for (std::size_t j = 1; j < n; ++j) acc += h * k(tn, h * static_cast<double>(j)) * phi[j];
    const double diag = 1.0 - 0.5 * h * k(tn, tn);
    if (diag == 0.0) throw OracleError("creep_factor: singular trapezoid step");
    phi[n] = (1.0 + acc) / diag;
  }
  return phi;
}

// Fourth-order integral of g over [0, t_i] from samples on a uniform grid.
inline double integrate_samples(const std::vector<double>& g, std::size_t i, double h) {
  if (i == 0) return 0.0;
  if (i == 1) {
    if (g.size() < 3) return 0.5 * h * (g[0] + g[1]);
    return h * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0;
  }
  auto simpson = [&](std::size_t a, std::size_t b) {
    double s = g[a] + g[b];
    for (std::size_t j = a + 1; j < b; ++j) s += ((j - a) % 2 == 1 ? 4.0 : 2.0) * g[j];
    return s * h / 3.0;
  };
  if (i % 2 == 0) return simpson(0, i);
  // odd panel count: Simpson on the first i-3 panels, 3/8 rule on the last three
  const double tail = 3.0 * h / 8.0 * (g[i - 3] + 3.0 * g[i - 2] + 3.0 * g[i - 1] + g[i]);
  return (i > 3 ? simpson(0, i - 3) : 0.0) + tail;
}

}  // namespace detail

/// Scalar creep factor on the nodes of `grid`.
///
/// Exponential-convolution kernels use the exact solution
/// phi(t) = 1 + c (1 - exp(-(r - c) t)) / (r - c); the residual is measured by
/// composite Gauss quadrature of the Volterra integral. Other kernels use a
/// Richardson-extrapolated trapezoid solve that starts at ten times the grid
/// resolution and doubles until the residual gate is met.
inline CreepFactor creep_factor(const MemoryKernel& k, const TimeGrid& grid,
                                double residual_gate = 1e-10) {
  CreepFactor out;
  out.dt = grid.dt();
  const std::size_t n_steps = grid.n_steps();
  const double T = grid.final_time();

  if (const auto& ex = k.exp_structure()) {
    const double c = ex->coeff;
    const double lam = ex->rate - c;
    auto phi = [c, lam](double t) {
      if (lam == 0.0) return 1.0 + c * t;
      return 1.0 - c * std::expm1(-lam * t) / lam;
    };
    out.closed_form = phi;
    out.samples.resize(n_steps + 1);
    const double scale = std::max({1.0, ex->rate, std::abs(lam)});
    double res = 0.0;
    for (std::size_t n = 0; n <= n_steps; ++n) {
      const double tn = grid.node(n);
      out.samples[n] = phi(tn);
      const auto panels = static_cast<std::size_t>(std::ceil(2.0 * scale * tn)) + 4;
      const double integral =
          quad::composite([&](double s) { return k(tn, s) * phi(s); }, 0.0, tn, panels);
      res = std::max(res, std::abs(out.samples[n] - 1.0 - integral));
    }
    out.residual = res;
    if (!(res < residual_gate))
      throw OracleError("creep_factor: closed-form residual " + std::to_string(res) +
                        " above gate");
    return out;
  }

  constexpr std::size_t max_panels = 100000;
  std::size_t N = 10 * n_steps;
  std::vector<double> coarse = detail::creep_trapezoid(k, T, N);
  while (2 * N <= max_panels) {
    std::vector<double> fine = detail::creep_trapezoid(k, T, 2 * N);
    std::vector<double> rich(N + 1);
    for (std::size_t i = 0; i <= N; ++i) rich[i] = (4.0 * fine[2 * i] - coarse[i]) / 3.0;

    const double h = T / static_cast<double>(N);
    double res = 0.0;
    std::vector<double> g(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
      const double ti = h * static_cast<double>(i);
      for (std::size_t j = 0; j <= i; ++j) g[j] = k(ti, h * static_cast<double>(j)) * rich[j];
      if (i < 2 && N >= 2) {
        // the 3-point start formula needs g[2] at the current t_i
        g[2] = k(ti, 2.0 * h) * rich[2];
      }
      res = std::max(res, std::abs(rich[i] - 1.0 - detail::integrate_samples(g, i, h)));
    }
    if (res < residual_gate) {
      const std::size_t stride = N / n_steps;
      out.samples.resize(n_steps + 1);
      for (std::size_t n = 0; n <= n_steps; ++n) out.samples[n] = rich[n * stride];
      out.residual = res;
      return out;
    }
    coarse = std::move(fine);
    N *= 2;
  }
  throw OracleError("creep_factor: trapezoid refinement did not reach the residual gate");
}

}  // namespace vmix
