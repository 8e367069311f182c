#pragma once

// Bending-moment mixed formulation of a clamped viscoelastic Timoshenko beam.
//
//   V_h = (M, V) in P1 x P1 (continuous),  Q_h = (beta, w) in P0 x P0
//   a((M,V),(tau,xi)) = (M/I_hat, tau) + eps^2 (V/kappa, xi)
//   b((tau,xi),(eta,v)) = (eta, tau' - xi) - (v, xi')
//
// Unknown layout: [M_0..M_n, V_0..V_n] and [beta_0..beta_{n-1}, w_0..w_{n-1}].
// Clamped conditions on (w, beta) are natural here; (M, V) carry none.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vmix/errors.hpp"
#include "vmix/kernels.hpp"
#include "vmix/mesh.hpp"
#include "vmix/norms.hpp"
#include "vmix/quadrature.hpp"
#include "vmix/sparse.hpp"
#include "vmix/time_grid.hpp"
#include "vmix/volterra.hpp"

namespace vmix {

enum class BeamProfile { joined, smooth };

struct BeamConfig {
  BeamProfile profile = BeamProfile::joined;
  double L = 1.0;
  double d = 1e-3;  // thickness, joined profile only
  double nu = 0.35;
  double ks = 5.0 / 6.0;

  void validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("beam: L must be positive");
    if (profile == BeamProfile::joined && !(d > 0.0)) throw ConfigError("beam: d must be positive");
    if (!(nu > -1.0) || !(nu < 0.5)) throw ConfigError("beam: nu must lie in (-1, 0.5)");
    if (!(ks > 0.0)) throw ConfigError("beam: ks must be positive");
  }

  // Piecewise coefficients pick their side from `xm`, a point inside the
  // element, so the jump at L/2 is never sampled from the wrong side.
  double I(double x, double xm) const {
    if (profile == BeamProfile::smooth) return std::exp(x) / 12.0;
    return xm <= 0.5 * L ? 27e-2 * d * d * d / 4.0 : 1e-2 * d * d * d / 4.0;
  }
  double A(double x, double xm) const {
    if (profile == BeamProfile::smooth) return 12.0 * std::exp(-x);
    return xm <= 0.5 * L ? 9e-2 * d : 3e-2 * d;
  }

  /// eps^2 = (1/L) int I/(A L^2) dx.
  double eps2() const {
    if (profile == BeamProfile::joined) return 5.0 * d * d / (12.0 * L * L);
    return std::expm1(2.0 * L) / (288.0 * L * L * L);
  }
  double eps2_quadrature(std::size_t panels = 64) const {
    auto g = [this](double x) { return I(x, x) / (A(x, x) * L * L); };
    const double half = 0.5 * L;
    // split at L/2 so the joined profile is integrated piecewise
    auto left = [&](double x) { return I(x, 0.25 * L) / (A(x, 0.25 * L) * L * L); };
    auto right = [&](double x) { return I(x, 0.75 * L) / (A(x, 0.75 * L) * L * L); };
    if (profile == BeamProfile::smooth) return quad::composite(g, 0.0, L, panels) / L;
    return (quad::composite(left, 0.0, half, panels) + quad::composite(right, half, L, panels)) / L;
  }
  double eps() const { return std::sqrt(eps2()); }

  double I_hat(double x, double xm) const { return I(x, xm) / std::pow(eps(), 3); }
  double A_hat(double x, double xm) const { return ks * A(x, xm) / eps(); }
  double kappa(double x, double xm) const { return A_hat(x, xm) / (2.0 * (1.0 + nu)); }

  void check_mesh(const Mesh1D& mesh) const {
    if (std::abs(mesh.length() - L) > 1e-12 * L)
      throw ConfigError("beam: mesh length does not match L");
    if (profile == BeamProfile::joined &&
        (mesh.n_elements() % 2 != 0 || !mesh.has_node(0.5 * L)))
      throw ConfigError("beam: the joined profile needs an even element count (x = L/2 a node)");
  }
};

inline std::size_t beam_v_dofs(const Mesh1D& m) { return 2 * (m.n_elements() + 1); }
inline std::size_t beam_q_dofs(const Mesh1D& m) { return 2 * m.n_elements(); }

inline SparseMatrix assemble_beam_a(const BeamConfig& cfg, const Mesh1D& mesh) {
  cfg.validate();
  cfg.check_mesh(mesh);
  const std::size_t n = mesh.n_elements();
  const std::size_t off = n + 1;
  const double e2 = cfg.eps2();
  std::vector<Triplet> t;
  t.reserve(8 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = mesh.left(i), h = mesh.right(i) - x0, xm = x0 + 0.5 * h;
    double mm[2][2] = {}, vv[2][2] = {};
    for (const auto& q : quad::gauss2) {
      const double x = x0 + q.x * h;
      const double ih = cfg.I_hat(x, xm), kp = cfg.kappa(x, xm);
      if (!(ih > 0.0) || !(kp > 0.0) || !std::isfinite(ih) || !std::isfinite(kp))
        throw ConfigError("assemble_beam_a: nonpositive coefficient at x = " + std::to_string(x));
      const double phi[2] = {1.0 - q.x, q.x};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          mm[a][b] += q.w * h * phi[a] * phi[b] / ih;
          vv[a][b] += q.w * h * e2 * phi[a] * phi[b] / kp;
        }
    }
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        t.emplace_back(i + a, i + b, mm[a][b]);
        t.emplace_back(off + i + a, off + i + b, vv[a][b]);
      }
  }
  return from_triplets(static_cast<Eigen::Index>(2 * off), static_cast<Eigen::Index>(2 * off), t);
}

inline SparseMatrix assemble_beam_b(const Mesh1D& mesh) {
  const std::size_t n = mesh.n_elements();
  const std::size_t off = n + 1;
  std::vector<Triplet> t;
  t.reserve(6 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = mesh.right(i) - mesh.left(i);
    // beta row: int (tau' - xi)
    t.emplace_back(i, i, -1.0);
    t.emplace_back(i, i + 1, 1.0);
    t.emplace_back(i, off + i, -0.5 * h);
    t.emplace_back(i, off + i + 1, -0.5 * h);
    // w row: -int xi'
    t.emplace_back(n + i, off + i, 1.0);
    t.emplace_back(n + i, off + i + 1, -1.0);
  }
  return from_triplets(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(2 * off), t);
}

/// Transverse load f and moment load g, both times a Heaviside step unless
/// `time` is set. Primitives, when given, are used for exact cell integrals.
struct BeamLoad {
  std::function<double(double)> f;
  std::function<double(double)> g;
  std::function<double(double)> f_primitive;
  std::function<double(double)> g_primitive;
  std::function<double(double)> time;  // empty: H(t)

  bool separable_step() const { return !time; }
  double time_factor(double t) const { return time ? time(t) : (t >= 0.0 ? 1.0 : 0.0); }

  static BeamLoad exponential() {
    auto e = [](double x) { return std::exp(x); };
    return {e, nullptr, e, nullptr, nullptr};
  }
  static BeamLoad uniform(double q) {
    return {[q](double) { return q; }, nullptr, [q](double x) { return q * x; }, nullptr, nullptr};
  }
};

namespace detail {

inline double cell_integral(const std::function<double(double)>& fn,
                            const std::function<double(double)>& primitive, double a, double b) {
  if (primitive) return primitive(b) - primitive(a);
  if (!fn) return 0.0;
  double s = 0.0;
  for (const auto& q : quad::gauss2) s += q.w * fn(a + q.x * (b - a));
  return s * (b - a);
}

}  // namespace detail

/// Data for the b-row: [-int g_E over cells ; -int f_E over cells] at time t,
/// with f_E = f/E(0). The a-row data is identically zero.
inline std::pair<Vec, Vec> beam_rhs(const Mesh1D& mesh, const BeamLoad& load, double e0, double t) {
  if (!(e0 > 0.0)) throw ParameterError("beam_rhs: E(0) must be positive");
  const std::size_t n = mesh.n_elements();
  Vec a_row = Vec::Zero(static_cast<Eigen::Index>(2 * (n + 1)));
  Vec b_row(static_cast<Eigen::Index>(2 * n));
  const double s = load.time_factor(t) / e0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = mesh.left(i), x1 = mesh.right(i);
    b_row[i] = -s * detail::cell_integral(load.g, load.g_primitive, x0, x1);
    b_row[n + i] = -s * detail::cell_integral(load.f, load.f_primitive, x0, x1);
  }
  return {a_row, b_row};
}

struct BeamFields {
  Vec M, V, beta, w;

  static BeamFields from_solution(const Vec& u, const Vec& p, std::size_t n) {
    const auto np1 = static_cast<Eigen::Index>(n + 1), ne = static_cast<Eigen::Index>(n);
    if (u.size() != 2 * np1 || p.size() != 2 * ne)
      throw ParameterError("BeamFields: solution size does not match the mesh");
    return {u.head(np1), u.tail(np1), p.head(ne), p.tail(ne)};
  }
};

/// Memory-free mixed solve with the load frozen at t = 0.
inline BeamFields beam_elastic_solve(const BeamConfig& cfg, const Mesh1D& mesh,
                                     const BeamLoad& load, double e0) {
  const SparseMatrix A = assemble_beam_a(cfg, mesh);
  const SparseMatrix B = assemble_beam_b(mesh);
  auto [f, g] = beam_rhs(mesh, load, e0, 0.0);
  auto [u, p] = factorize_saddle(A, B).solve(f, g);
  return BeamFields::from_solution(u, p, mesh.n_elements());
}

/// Gram matrices of the norms: H^1 on each of (M, V), L^2 on each of (beta, w).
inline SparseMatrix beam_gram_v(const Mesh1D& mesh) {
  const std::size_t n = mesh.n_elements();
  const std::size_t off = n + 1;
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = mesh.right(i) - mesh.left(i);
    const double loc[2][2] = {{h / 3.0 + 1.0 / h, h / 6.0 - 1.0 / h},
                              {h / 6.0 - 1.0 / h, h / 3.0 + 1.0 / h}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        t.emplace_back(i + a, i + b, loc[a][b]);
        t.emplace_back(off + i + a, off + i + b, loc[a][b]);
      }
  }
  return from_triplets(static_cast<Eigen::Index>(2 * off), static_cast<Eigen::Index>(2 * off), t);
}

inline SparseMatrix beam_gram_q(const Mesh1D& mesh) {
  const std::size_t n = mesh.n_elements();
  Vec d(static_cast<Eigen::Index>(2 * n));
  for (std::size_t i = 0; i < n; ++i) d[i] = d[n + i] = mesh.right(i) - mesh.left(i);
  return diagonal_matrix(d);
}

/// Separable reference solution elastic(x) * phi(t).
struct BeamReference {
  Mesh1D mesh;
  BeamFields elastic;
  CreepFactor phi;
};

inline BeamReference beam_exact_reference(const BeamConfig& cfg, const BeamLoad& load, double e0,
                                          const std::optional<MemoryKernel>& kernel,
                                          const TimeGrid& grid, std::size_t n_ref) {
  if (!load.separable_step())
    throw OracleError("beam_exact_reference: unsupported oracle, the load must be q(x) H(t)");
  BeamReference ref;
  ref.mesh = uniform_mesh1d(cfg.L, n_ref);
  ref.elastic = beam_elastic_solve(cfg, ref.mesh, load, e0);
  ref.phi = creep_factor(kernel ? *kernel : MemoryKernel::zero(), grid);
  return ref;
}

/// L^2 errors of (M, V, beta, w) and H^1 errors of (M, V).
struct BeamSpatialErrors {
  double M = 0, V = 0, beta = 0, w = 0;
  double M_h1 = 0, V_h1 = 0;
};

namespace detail {

inline std::size_t locate(const Mesh1D& m, double x) {
  auto it = std::upper_bound(m.nodes.begin(), m.nodes.end(), x);
  std::size_t i = it == m.nodes.begin() ? 0 : static_cast<std::size_t>(it - m.nodes.begin()) - 1;
  return std::min(i, m.n_elements() - 1);
}

inline std::vector<double> overlay_nodes(const Mesh1D& a, const Mesh1D& b) {
  std::vector<double> x;
  x.reserve(a.nodes.size() + b.nodes.size());
  std::merge(a.nodes.begin(), a.nodes.end(), b.nodes.begin(), b.nodes.end(),
             std::back_inserter(x));
  const double tol = 1e-13 * std::max(1.0, a.length());
  x.erase(std::unique(x.begin(), x.end(), [tol](double p, double q) { return q - p <= tol; }),
          x.end());
  return x;
}

}  // namespace detail

/// Norms of (a_fields on a_mesh) - scale * (b_fields on b_mesh), integrated
/// exactly piecewise on the union of both node sets with 4-point Gauss.
inline BeamSpatialErrors beam_spatial_errors(const Mesh1D& a_mesh, const BeamFields& a,
                                             const Mesh1D& b_mesh, const BeamFields& b,
                                             double scale) {
  const auto x = detail::overlay_nodes(a_mesh, b_mesh);
  double sM = 0, sV = 0, sb = 0, sw = 0, dM = 0, dV = 0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double x0 = x[k], x1 = x[k + 1], h = x1 - x0, xm = 0.5 * (x0 + x1);
    const std::size_t ia = detail::locate(a_mesh, xm), ib = detail::locate(b_mesh, xm);
    const double al = a_mesh.left(ia), ah = a_mesh.right(ia) - al;
    const double bl = b_mesh.left(ib), bh = b_mesh.right(ib) - bl;
    const double dMa = (a.M[ia + 1] - a.M[ia]) / ah, dMb = (b.M[ib + 1] - b.M[ib]) / bh;
    const double dVa = (a.V[ia + 1] - a.V[ia]) / ah, dVb = (b.V[ib + 1] - b.V[ib]) / bh;
    const double eb = a.beta[ia] - scale * b.beta[ib];
    const double ew = a.w[ia] - scale * b.w[ib];
    sb += eb * eb * h;
    sw += ew * ew * h;
    const double edM = dMa - scale * dMb, edV = dVa - scale * dVb;
    dM += edM * edM * h;
    dV += edV * edV * h;
    for (const auto& q : quad::gauss4) {
      const double xq = x0 + q.x * h;
      const double sa = (xq - al) / ah, sb_ = (xq - bl) / bh;
      const double Ma = (1 - sa) * a.M[ia] + sa * a.M[ia + 1];
      const double Mb = (1 - sb_) * b.M[ib] + sb_ * b.M[ib + 1];
      const double Va = (1 - sa) * a.V[ia] + sa * a.V[ia + 1];
      const double Vb = (1 - sb_) * b.V[ib] + sb_ * b.V[ib + 1];
      const double eM = Ma - scale * Mb, eV = Va - scale * Vb;
      sM += q.w * h * eM * eM;
      sV += q.w * h * eV * eV;
    }
  }
  BeamSpatialErrors e;
  e.M = std::sqrt(sM);
  e.V = std::sqrt(sV);
  e.beta = std::sqrt(sb);
  e.w = std::sqrt(sw);
  e.M_h1 = std::sqrt(sM + dM);
  e.V_h1 = std::sqrt(sV + dV);
  return e;
}

/// Spatial norms of a field set (the zero comparison).
inline BeamSpatialErrors beam_field_norms(const Mesh1D& mesh, const BeamFields& f) {
  BeamFields zero{Vec::Zero(f.M.size()), Vec::Zero(f.V.size()), Vec::Zero(f.beta.size()),
                  Vec::Zero(f.w.size())};
  return beam_spatial_errors(mesh, f, mesh, zero, 0.0);
}

/// L^1-in-time errors (trapezoid) and the matching exact-field norms.
struct BeamErrors {
  BeamSpatialErrors e;      // e0 for all fields; M_h1, V_h1 hold e1
  BeamSpatialErrors exact;  // same norms of the exact fields
};

/// Trapezoid accumulator for per-step spatial errors.
class BeamErrorAccumulator {
 public:
  BeamErrorAccumulator(const BeamReference& ref, const TimeGrid& grid)
      : ref_(ref), grid_(grid), ref_norms_(beam_field_norms(ref.mesh, ref.elastic)) {}

  void add(std::size_t n, const Mesh1D& mesh, const BeamFields& num) {
    const double t = grid_.node(n);
    const double w = (n == 0 || n == grid_.n_steps() ? 0.5 : 1.0) * grid_.dt();
    const double phi = ref_.phi.value(t);
    const auto e = beam_spatial_errors(mesh, num, ref_.mesh, ref_.elastic, phi);
    acc(out_.e, e, w);
    acc(out_.exact, ref_norms_, w * std::abs(phi));
  }
  const BeamErrors& result() const { return out_; }

 private:
  static void acc(BeamSpatialErrors& s, const BeamSpatialErrors& e, double w) {
    s.M += w * e.M;
    s.V += w * e.V;
    s.beta += w * e.beta;
    s.w += w * e.w;
    s.M_h1 += w * e.M_h1;
    s.V_h1 += w * e.V_h1;
  }
  const BeamReference& ref_;
  TimeGrid grid_;
  BeamSpatialErrors ref_norms_;
  BeamErrors out_;
};

/// Errors of a stored time series (one BeamFields per grid node).
inline BeamErrors beam_errors(const Mesh1D& mesh, const std::vector<BeamFields>& series,
                              const BeamReference& ref, const TimeGrid& grid) {
  if (series.size() != grid.n_steps() + 1)
    throw ParameterError("beam_errors: series length must be n_steps + 1");
  BeamErrorAccumulator acc(ref, grid);
  for (std::size_t n = 0; n < series.size(); ++n) acc.add(n, mesh, series[n]);
  return acc.result();
}

/// Problem data of a beam run besides the mesh.
struct BeamSetup {
  BeamConfig beam;
  BeamLoad load = BeamLoad::exponential();
  double e0 = 1.0;                     // E(0), scales the loads
  std::optional<MemoryKernel> kernel;  // attached as k3
};

inline BlockSaddleSystem beam_system(const BeamSetup& s, const Mesh1D& mesh) {
  BlockSaddleSystem sys;
  sys.A = assemble_beam_a(s.beam, mesh);
  sys.B = assemble_beam_b(mesh);
  sys.k3 = s.kernel;
  return sys;
}

struct BeamRunResult {
  std::size_t n_elements = 0;
  std::size_t dof = 0;
  double h = 0.0;
  BeamErrors errors;
  StabilityMeasurements norms;
  BeamFields final_fields;
  std::size_t factorizations = 0;
  double audit_discrepancy = 0.0;
};

/// Full Volterra run on one mesh with errors measured against `ref` step by step.
inline BeamRunResult run_beam(const BeamSetup& s, std::size_t n_elements, const TimeGrid& grid,
                              const BeamReference& ref, StepperOptions opt = {}) {
  const Mesh1D mesh = uniform_mesh1d(s.beam.L, n_elements);
  VolterraStepper stepper(beam_system(s, mesh), grid, opt);
  BeamErrorAccumulator errs(ref, grid);
  NormAccumulator norms(beam_gram_v(mesh), beam_gram_q(mesh), grid);
  BeamRunResult r;
  r.n_elements = n_elements;
  r.dof = beam_v_dofs(mesh);
  r.h = mesh.h();
  auto data = [&](std::size_t, double t) { return beam_rhs(mesh, s.load, s.e0, t); };
  run_volterra(stepper, data, [&](std::size_t n, double t, const Vec& u, const Vec& p) {
    auto fields = BeamFields::from_solution(u, p, n_elements);
    errs.add(n, mesh, fields);
    auto [f, g] = beam_rhs(mesh, s.load, s.e0, t);
    norms.add(n, u, p, f, g);
    if (n == grid.n_steps()) r.final_fields = std::move(fields);
  });
  r.errors = errs.result();
  r.norms = norms.result();
  r.factorizations = stepper.factorization_count();
  r.audit_discrepancy = stepper.max_audit_discrepancy();
  return r;
}

}  // namespace vmix
