#pragma once

// Convergence studies over a list of mesh levels, with per-level stability
// certificates and experimental rates.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vmix/beam.hpp"
#include "vmix/config.hpp"
#include "vmix/constants.hpp"
#include "vmix/errors.hpp"
#include "vmix/estimators.hpp"
#include "vmix/laplace.hpp"
#include "vmix/norms.hpp"
#include "vmix/time_grid.hpp"

namespace vmix {

/// r = log(e/e') / log(h/h'); empty when either error is not positive.
inline std::optional<double> convergence_rate(double e, double e_next, double h, double h_next) {
  if (!(e > 0.0) || !(e_next > 0.0) || !(h > 0.0) || !(h_next > 0.0) || h == h_next)
    return std::nullopt;
  return std::log(e / e_next) / std::log(h / h_next);
}

/// Stability bound of one run evaluated with estimated constants.
struct Certificate {
  SaddleConstants estimates;
  StabilityConstants stability;
  ErrorConstants error;
  StabilityMeasurements measured;
  double bound = 0.0;  // (C1 + C3)|f| + (C2 + C4)|g|
  double lhs = 0.0;    // |u| + |p|
  double slack = 0.0;  // bound - lhs
};

namespace detail {

// C * |x| with 0 * inf treated as 0 (an absent load contributes nothing).
inline double bound_term(double C, double norm) { return norm == 0.0 ? 0.0 : C * norm; }

}  // namespace detail

/// Builds both constant sets from the estimates and checks the stability
/// inequality against the measured norms. k1 = k2 = 0 for both drivers, so
/// C_k3 and C_ktilde both equal the k3 bound.
inline Certificate make_certificate(const SaddleConstants& est, double C_k3, double T,
                                    const StabilityMeasurements& m) {
  Certificate c;
  c.estimates = est;
  c.measured = m;
  c.stability = stability_constants(est.alpha, est.beta, est.norm_a, 0.0, 0.0, C_k3, C_k3, T);
  c.error = error_constants(est.alpha, est.beta, est.norm_a, est.norm_b, 0.0, 0.0, C_k3, C_k3, T);
  const auto& s = c.stability;
  c.bound = detail::bound_term(s.C1 + s.C3, m.f_norm) + detail::bound_term(s.C2 + s.C4, m.g_norm);
  c.lhs = m.u_norm + m.p_norm;
  c.slack = c.bound - c.lhs;
  return c;
}

struct StudyLevel {
  std::size_t level = 0;  // n_elements or m
  std::size_t dof = 0;
  double h = 0.0;
  std::vector<double> errors;       // in ConvergenceReport::fields order
  std::vector<double> exact_norms;  // same order; empty when unavailable
  StabilityMeasurements norms;
  std::optional<Certificate> certificate;
  std::vector<double> probe_t, probe_u;
  std::size_t factorizations = 0;
  double audit_discrepancy = 0.0;

  double relative(std::size_t f) const {
    return exact_norms.empty() || exact_norms[f] == 0.0 ? errors[f] : errors[f] / exact_norms[f];
  }
};

struct ConvergenceReport {
  Problem problem = Problem::beam;
  std::vector<std::string> fields;  // e.g. "e0_M", "e1_V"
  std::vector<StudyLevel> rows;
  std::string config_hash;
  double wall_seconds = 0.0;

  /// Rate of field f between rows i-1 and i (row 0 has none).
  std::optional<double> rate(std::size_t i, std::size_t f) const {
    if (i == 0 || i >= rows.size()) return std::nullopt;
    return convergence_rate(rows[i - 1].errors[f], rows[i].errors[f], rows[i - 1].h, rows[i].h);
  }
  std::size_t field_index(const std::string& name) const {
    for (std::size_t f = 0; f < fields.size(); ++f)
      if (fields[f] == name) return f;
    throw IndexError("ConvergenceReport: no field '" + name + "'");
  }
};

inline std::vector<std::string> report_fields(Problem p) {
  if (p == Problem::beam) return {"e0_M", "e0_V", "e1_M", "e1_V", "e0_w", "e0_beta"};
  return {"e0_sigma", "e0_u"};
}

inline BeamSetup beam_setup(const StudyConfig& c) {
  const auto rk = resolve_kernel(c.kernel);
  BeamSetup s;
  s.beam = c.beam;
  s.e0 = rk.e0;
  s.kernel = rk.kernel;
  return s;
}

inline LaplaceSetup laplace_setup(const StudyConfig& c) {
  LaplaceSetup s;
  s.solution.form = c.memory_form;
  if (c.kernel.type == "fickian")
    s.solution.kernel = ExpConvolution{1.0 / c.kernel.delta, 1.0 / c.kernel.delta};
  else if (c.kernel.type == "custom_exp")
    s.solution.kernel = ExpConvolution{c.kernel.coeff, c.kernel.rate};
  else
    s.solution.kernel.reset();
  s.probe_point = c.probe;
  return s;
}

/// Bound of the kernel attached to the b-row, 0 when absent.
inline double k3_bound(const StudyConfig& c) {
  if (c.problem == Problem::beam) {
    const auto k = beam_setup(c).kernel;
    return k ? k->bound() : 0.0;
  }
  const auto k = laplace_setup(c).solution.k3();
  return k ? k->bound() : 0.0;
}

inline SaddleConstants estimate_beam_constants(const BeamConfig& cfg, std::size_t n) {
  const Mesh1D mesh = uniform_mesh1d(cfg.L, n);
  return estimate_saddle_constants(assemble_beam_a(cfg, mesh), assemble_beam_b(mesh),
                                   beam_gram_v(mesh), beam_gram_q(mesh));
}

inline SaddleConstants estimate_laplace_constants(std::size_t m) {
  LaplaceSystem ls(m);
  return estimate_saddle_constants(ls.mass, ls.div, rt0_gram(*ls.space, ls.mass, ls.div),
                                   p0_gram(*ls.space));
}

namespace detail {

// Rethrows the active exception with a level prefix, keeping its type.
[[noreturn]] inline void rethrow_with_level(const std::string& where) {
  try {
    throw;
  } catch (const StabilityGateError& e) {
    throw StabilityGateError(where + e.what());
  } catch (const SolverError& e) {
    throw SolverError(where + e.what());
  } catch (const OracleError& e) {
    throw OracleError(where + e.what());
  } catch (const ModeError& e) {
    throw ModeError(where + e.what());
  } catch (const MeshError& e) {
    throw MeshError(where + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(where + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const IndexError& e) {
    throw IndexError(where + e.what());
  } catch (const IoError& e) {
    throw IoError(where + e.what());
  }
}

inline StudyLevel beam_level(const StudyConfig& c, const BeamSetup& s, std::size_t n,
                             const TimeGrid& grid, const BeamReference& ref) {
  StepperOptions opt;
  opt.audit_history = c.audit_history;
  const auto r = run_beam(s, n, grid, ref, opt);
  StudyLevel L;
  L.level = n;
  L.dof = r.dof;
  L.h = r.h;
  const auto& e = r.errors.e;
  const auto& x = r.errors.exact;
  L.errors = {e.M, e.V, e.M_h1, e.V_h1, e.w, e.beta};
  L.exact_norms = {x.M, x.V, x.M_h1, x.V_h1, x.w, x.beta};
  L.norms = r.norms;
  L.factorizations = r.factorizations;
  L.audit_discrepancy = r.audit_discrepancy;
  if (c.estimate_constants)
    L.certificate = make_certificate(estimate_beam_constants(c.beam, n),
                                     s.kernel ? s.kernel->bound() : 0.0, c.T, r.norms);
  return L;
}

inline StudyLevel laplace_level(const StudyConfig& c, const LaplaceSetup& s, std::size_t m,
                                const TimeGrid& grid) {
  StepperOptions opt;
  opt.audit_history = c.audit_history;
  auto r = run_laplace(s, m, grid, opt);
  StudyLevel L;
  L.level = m;
  L.dof = r.dof;
  L.h = r.h;
  L.errors = {r.errors.sigma, r.errors.u};
  L.norms = r.norms;
  L.probe_t = std::move(r.probe_t);
  L.probe_u = std::move(r.probe_u);
  L.factorizations = r.factorizations;
  L.audit_discrepancy = r.audit_discrepancy;
  if (c.estimate_constants) {
    const auto k3 = s.solution.k3();
    L.certificate =
        make_certificate(estimate_laplace_constants(m), k3 ? k3->bound() : 0.0, c.T, r.norms);
  }
  return L;
}

}  // namespace detail

/// Runs every level of the study in order. `on_level` sees the report after
/// each completed level, so callers can flush partial results; errors carry
/// the failing level in their message and keep their type.
inline ConvergenceReport run_study(const StudyConfig& c,
                                   const std::function<void(const ConvergenceReport&)>& on_level = {}) {
  const auto start = std::chrono::steady_clock::now();
  ConvergenceReport rep;
  rep.problem = c.problem;
  rep.fields = report_fields(c.problem);
  rep.config_hash = config_hash(c);
  const TimeGrid grid(c.T, c.n_steps);

  auto finish_level = [&](StudyLevel L) {
    rep.rows.push_back(std::move(L));
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_level) on_level(rep);
  };

  if (c.problem == Problem::beam) {
    const BeamSetup s = beam_setup(c);
    std::size_t finest = 0;
    for (auto n : c.levels) finest = std::max(finest, n);
    std::optional<BeamReference> ref;
    try {
      ref = beam_exact_reference(s.beam, s.load, s.e0, s.kernel, grid, c.n_ref_factor * finest);
    } catch (...) {
      detail::rethrow_with_level("reference solution: ");
    }
    for (auto n : c.levels) {
      try {
        finish_level(detail::beam_level(c, s, n, grid, *ref));
      } catch (...) {
        detail::rethrow_with_level("level n=" + std::to_string(n) + ": ");
      }
    }
  } else {
    const LaplaceSetup s = laplace_setup(c);
    for (auto m : c.levels) {
      try {
        finish_level(detail::laplace_level(c, s, m, grid));
      } catch (...) {
        detail::rethrow_with_level("level m=" + std::to_string(m) + ": ");
      }
    }
  }
  return rep;
}

}  // namespace vmix
