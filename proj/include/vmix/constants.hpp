#pragma once

// Closed-form stability and a-priori error constants of the continuous and
// semi-discrete Volterra saddle problems.

#include <algorithm>
#include <cmath>

#include "vmix/errors.hpp"

namespace vmix {

struct StabilityConstants {
  double C1, C2, C3, C4;
  double alpha0, beta, norm_a, C_k1, C_k2, C_k3, C_ktilde, T;
};

struct ErrorConstants {
  double C1s, C2s, C3s, C4s;
  double C1u, C1p, C2u, C2p;
  double alpha0_star, beta_star, norm_a, norm_b, C_k1, C_k2, C_k3, C_ktilde, T;
};

namespace detail {

inline void check_constant_inputs(double alpha0, double beta, double norm_a, double C_k1,
                                  double C_k2, double C_k3, double C_ktilde, double T) {
  if (!(alpha0 > 0.0)) throw ParameterError("constants: alpha0 must be positive");
  if (!(beta > 0.0)) throw ParameterError("constants: beta must be positive");
  if (!(T > 0.0)) throw ParameterError("constants: T must be positive");
  if (!(norm_a >= 0.0) || !(C_k1 >= 0.0) || !(C_k2 >= 0.0) || !(C_k3 >= 0.0) ||
      !(C_ktilde >= 0.0))
    throw ParameterError("constants: norms and kernel bounds must be nonnegative");
}

// 1 + T X e^{T X},  X = (|a|/alpha0) C_ktilde + C_k3
inline double gronwall_factor(double alpha0, double norm_a, double C_k3, double C_ktilde,
                              double T) {
  const double X = norm_a / alpha0 * C_ktilde + C_k3;
  return 1.0 + T * X * std::exp(T * X);
}

// 1 + C_k1 + C_k2 e^{T C_k2} (1 + T C_k1)
inline double pressure_bracket(double C_k1, double C_k2, double T) {
  return 1.0 + C_k1 + C_k2 * std::exp(T * C_k2) * (1.0 + T * C_k1);
}

}  // namespace detail

/// Constants of the a-priori bound
///   |u|_{L1(V)} + |p|_{L1(Q)} <= (C1 + C3) |f|_{L1(V')} + (C2 + C4) |g|_{L1(Q')}.
/// Large T times the kernel bounds overflows to +inf, which is reported as is.
inline StabilityConstants stability_constants(double alpha0, double beta, double norm_a,
                                              double C_k1, double C_k2, double C_k3,
                                              double C_ktilde, double T) {
  detail::check_constant_inputs(alpha0, beta, norm_a, C_k1, C_k2, C_k3, C_ktilde, T);
  StabilityConstants c{};
  const double G = detail::gronwall_factor(alpha0, norm_a, C_k3, C_ktilde, T);
  const double P = detail::pressure_bracket(C_k1, C_k2, T);
  c.C1 = G / alpha0;
  c.C2 = (1.0 + norm_a / alpha0) * G / beta;
  c.C3 = 1.0 + C_k2 * std::exp(T * C_k2) + c.C1 * norm_a * P;
  c.C4 = c.C2 * norm_a * P;
  c.alpha0 = alpha0;
  c.beta = beta;
  c.norm_a = norm_a;
  c.C_k1 = C_k1;
  c.C_k2 = C_k2;
  c.C_k3 = C_k3;
  c.C_ktilde = C_ktilde;
  c.T = T;
  return c;
}

/// Starred constants use the discrete ellipticity and inf-sup constants.
/// C3*, C4* are built from C1*, C2*.
inline ErrorConstants error_constants(double alpha0_star, double beta_star, double norm_a,
                                      double norm_b, double C_k1, double C_k2, double C_k3,
                                      double C_ktilde, double T) {
  if (!(norm_b >= 0.0)) throw ParameterError("constants: norm_b must be nonnegative");
  const auto s =
      stability_constants(alpha0_star, beta_star, norm_a, C_k1, C_k2, C_k3, C_ktilde, T);
  ErrorConstants e{};
  e.C1s = s.C1;
  e.C2s = s.C2;
  e.C3s = s.C3;
  e.C4s = s.C4;
  const double m = 1.0 + T * std::max(C_k1, C_k2);
  e.C1u = e.C1s * m * norm_a + e.C2s * norm_b * (1.0 + C_k3) + 1.0;
  e.C1p = e.C1s * m * norm_b;
  e.C2u = e.C3s * m * norm_a + e.C4s * norm_b * (1.0 + C_k3);
  e.C2p = e.C3s * m * norm_b + 1.0;
  e.alpha0_star = alpha0_star;
  e.beta_star = beta_star;
  e.norm_a = norm_a;
  e.norm_b = norm_b;
  e.C_k1 = C_k1;
  e.C_k2 = C_k2;
  e.C_k3 = C_k3;
  e.C_ktilde = C_ktilde;
  e.T = T;
  return e;
}

}  // namespace vmix
