#pragma once

// Lowest-order Raviart-Thomas x P0 discretization of the Laplace problem with
// memory on the unit square:
//
//   (sigma, tau) + (u, div tau) = 0
//   (div sigma, v) = -(f, v) + int_0^t k3(t,s) (div sigma(s), v) ds
//
// with homogeneous Dirichlet data for u (natural in this form).

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
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

/// RT0 on a triangle mesh. Local basis function k of triangle K (attached to
/// the edge opposite vertex k) is s |e| / (2|K|) (x - P_k), where s = +1 when
/// the global edge normal points out of K.
class RT0Space {
 public:
  explicit RT0Space(const TriMesh& mesh) : mesh_(mesh), dofs_(build_dofmap(mesh, SpaceTag::RT0)) {
    const std::size_t nt = mesh.triangles.size();
    area_.resize(nt);
    sign_.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      area_[t] = mesh.area(t);
      if (!(area_[t] > 0.0))
        throw MeshError("RT0Space: degenerate or clockwise triangle " + std::to_string(t));
      const auto& tri = mesh.triangles[t];
      for (int k = 0; k < 3; ++k) {
        const std::size_t e = mesh.tri_edges[t][k];
        const auto n = normal(e);
        const auto& P = mesh.vertices[tri[k]];
        const auto& a = mesh.vertices[mesh.edges[e].a];
        const auto& b = mesh.vertices[mesh.edges[e].b];
        const double mx = 0.5 * (a.x + b.x) - P.x, my = 0.5 * (a.y + b.y) - P.y;
        sign_[t][k] = (mx * n[0] + my * n[1]) > 0.0 ? 1.0 : -1.0;
      }
    }
  }

  const TriMesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  std::size_t n_dofs() const { return dofs_.n_dofs; }
  double area(std::size_t t) const { return area_[t]; }
  double sign(std::size_t t, int k) const { return sign_[t][k]; }

  /// Global unit normal of edge e: tangent a->b rotated clockwise.
  std::array<double, 2> normal(std::size_t e) const {
    const auto& a = mesh_.vertices[mesh_.edges[e].a];
    const auto& b = mesh_.vertices[mesh_.edges[e].b];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    return {(b.y - a.y) / len, -(b.x - a.x) / len};
  }

  /// Local basis function k of triangle t at (x, y).
  std::array<double, 2> basis(std::size_t t, int k, double x, double y) const {
    const std::size_t e = mesh_.tri_edges[t][k];
    const auto& P = mesh_.vertices[mesh_.triangles[t][k]];
    const double c = sign_[t][k] * mesh_.edge_length(e) / (2.0 * area_[t]);
    return {c * (x - P.x), c * (y - P.y)};
  }
  double basis_div(std::size_t t, int k) const {
    return sign_[t][k] * mesh_.edge_length(mesh_.tri_edges[t][k]) / area_[t];
  }

  std::array<double, 2> evaluate(const Vec& dofs, std::size_t t, double x, double y) const {
    std::array<double, 2> v{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const auto phi = basis(t, k, x, y);
      const double c = dofs[static_cast<Eigen::Index>(mesh_.tri_edges[t][k])];
      v[0] += c * phi[0];
      v[1] += c * phi[1];
    }
    return v;
  }

  /// Cartesian point of a barycentric quadrature node.
  std::array<double, 2> point(std::size_t t, const std::array<double, 3>& bary) const {
    const auto& tri = mesh_.triangles[t];
    double x = 0.0, y = 0.0;
    for (int k = 0; k < 3; ++k) {
      x += bary[k] * mesh_.vertices[tri[k]].x;
      y += bary[k] * mesh_.vertices[tri[k]].y;
    }
    return {x, y};
  }

  /// Canonical interpolant: mean normal flux density through every edge.
  template <typename Field>
  Vec interpolate(Field&& sigma) const {
    Vec out(static_cast<Eigen::Index>(n_dofs()));
    for (std::size_t e = 0; e < mesh_.edges.size(); ++e) {
      const auto& a = mesh_.vertices[mesh_.edges[e].a];
      const auto& b = mesh_.vertices[mesh_.edges[e].b];
      const auto n = normal(e);
      double s = 0.0;
      for (const auto& q : quad::gauss4) {
        const auto v = sigma(a.x + q.x * (b.x - a.x), a.y + q.x * (b.y - a.y));
        s += q.w * (v[0] * n[0] + v[1] * n[1]);
      }
      out[static_cast<Eigen::Index>(e)] = s;
    }
    return out;
  }

 private:
  const TriMesh& mesh_;
  DofMap dofs_;
  std::vector<double> area_;
  std::vector<std::array<double, 3>> sign_;
};

inline SparseMatrix assemble_rt0_mass(const RT0Space& space) {
  const TriMesh& mesh = space.mesh();
  std::vector<Triplet> t;
  t.reserve(9 * mesh.triangles.size());
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
    double loc[3][3] = {};
    for (const auto& q : quad::tri_midpoint) {
      const auto p = space.point(k, q.bary);
      std::array<std::array<double, 2>, 3> phi;
      for (int i = 0; i < 3; ++i) phi[i] = space.basis(k, i, p[0], p[1]);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          loc[i][j] += q.w * space.area(k) * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        t.emplace_back(mesh.tri_edges[k][i], mesh.tri_edges[k][j], loc[i][j]);
  }
  const auto n = static_cast<Eigen::Index>(space.n_dofs());
  return from_triplets(n, n, t);
}

/// Rows: triangles (P0 dofs); entries int_K div(phi_e) = s |e|.
inline SparseMatrix assemble_rt0_div(const RT0Space& space, const DofMap& p0) {
  const TriMesh& mesh = space.mesh();
  if (p0.tag != SpaceTag::P0_tri || p0.n_dofs != mesh.triangles.size())
    throw ConfigError("assemble_rt0_div: pressure space must be P0 on the same triangles");
  std::vector<Triplet> t;
  t.reserve(3 * mesh.triangles.size());
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k)
    for (int i = 0; i < 3; ++i)
      t.emplace_back(p0.index[k], mesh.tri_edges[k][i], space.basis_div(k, i) * space.area(k));
  return from_triplets(static_cast<Eigen::Index>(p0.n_dofs),
                       static_cast<Eigen::Index>(space.n_dofs()), t);
}

/// H(div) Gram matrix M + B^T diag(1/|K|) B.
inline SparseMatrix rt0_gram(const RT0Space& space, const SparseMatrix& mass,
                             const SparseMatrix& div) {
  Vec inv(div.rows());
  for (Eigen::Index k = 0; k < inv.size(); ++k) inv[k] = 1.0 / space.area(static_cast<std::size_t>(k));
  SparseMatrix g = mass + SparseMatrix(div.transpose() * diagonal_matrix(inv) * div);
  g.makeCompressed();
  return g;
}

inline SparseMatrix p0_gram(const RT0Space& space) {
  Vec a(static_cast<Eigen::Index>(space.mesh().triangles.size()));
  for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = space.area(static_cast<std::size_t>(k));
  return diagonal_matrix(a);
}

/// Sign of the memory term relative to the physical kernel k.
/// pde:            -lap u = f + int k lap u      (k3 = -k)
/// mixed_verbatim: (div sigma, v) = -(f, v) + int k (div sigma, v)   (k3 = +k)
enum class MemoryForm { pde, mixed_verbatim };

/// u = cos(t) (x - x^2)(y - y^2) with an exponential kernel c exp(-r (t - s))
/// (absent kernel: no memory).
struct ManufacturedSolution {
  std::optional<ExpConvolution> kernel;
  MemoryForm form = MemoryForm::pde;

  static ManufacturedSolution fickian(double delta, MemoryForm form = MemoryForm::pde) {
    if (!(delta > 0.0)) throw ParameterError("ManufacturedSolution: delta must be positive");
    return {ExpConvolution{1.0 / delta, 1.0 / delta}, form};
  }

  double u(double x, double y, double t) const { return std::cos(t) * (x - x * x) * (y - y * y); }
  std::array<double, 2> sigma(double x, double y, double t) const {
    const double c = std::cos(t);
    return {c * (1.0 - 2.0 * x) * (y - y * y), c * (x - x * x) * (1.0 - 2.0 * y)};
  }
  double laplacian(double x, double y, double t) const {
    return -2.0 * std::cos(t) * ((x - x * x) + (y - y * y));
  }

  /// int_0^t c exp(-r (t - s)) cos(s) ds in closed form.
  double memory_integral(double t) const {
    if (!kernel) return 0.0;
    const double c = kernel->coeff, r = kernel->rate;
    return c / (r * r + 1.0) * (r * std::cos(t) + std::sin(t) - r * std::exp(-r * t));
  }

  /// Source consistent with `form`.
  double f(double x, double y, double t) const {
    const double s = 2.0 * ((x - x * x) + (y - y * y));
    const double sgn = form == MemoryForm::pde ? 1.0 : -1.0;
    return s * (std::cos(t) + sgn * memory_integral(t));
  }

  /// Kernel attached to the b-row of the discrete system.
  std::optional<MemoryKernel> k3() const {
    if (!kernel) return std::nullopt;
    const double sgn = form == MemoryForm::pde ? -1.0 : 1.0;
    return MemoryKernel::exp_convolution(sgn * kernel->coeff, kernel->rate);
  }
};

/// Cell data g = -int_K f(., t) with the edge-midpoint rule.
inline Vec manufactured_rhs(const RT0Space& space, const ManufacturedSolution& ms, double t) {
  const std::size_t nt = space.mesh().triangles.size();
  Vec g(static_cast<Eigen::Index>(nt));
  for (std::size_t k = 0; k < nt; ++k) {
    double s = 0.0;
    for (const auto& q : quad::tri_midpoint) {
      const auto p = space.point(k, q.bary);
      s += q.w * ms.f(p[0], p[1], t);
    }
    g[static_cast<Eigen::Index>(k)] = -s * space.area(k);
  }
  return g;
}

struct LaplaceSpatialErrors {
  double sigma = 0.0;
  double u = 0.0;
};

inline LaplaceSpatialErrors laplace_spatial_errors(const RT0Space& space, const Vec& sigma_h,
                                                   const Vec& u_h, const ManufacturedSolution& ms,
                                                   double t) {
  double es = 0.0, eu = 0.0;
  const std::size_t nt = space.mesh().triangles.size();
  for (std::size_t k = 0; k < nt; ++k) {
    const double a = space.area(k);
    for (const auto& q : quad::tri_midpoint) {
      const auto p = space.point(k, q.bary);
      const auto sh = space.evaluate(sigma_h, k, p[0], p[1]);
      const auto s = ms.sigma(p[0], p[1], t);
      const double du = u_h[static_cast<Eigen::Index>(k)] - ms.u(p[0], p[1], t);
      es += q.w * a * ((sh[0] - s[0]) * (sh[0] - s[0]) + (sh[1] - s[1]) * (sh[1] - s[1]));
      eu += q.w * a * du * du;
    }
  }
  return {std::sqrt(es), std::sqrt(eu)};
}

/// L^1-in-time errors (trapezoid) of a stored series.
inline LaplaceSpatialErrors laplace_errors(const RT0Space& space,
                                           const std::vector<std::pair<Vec, Vec>>& series,
                                           const ManufacturedSolution& ms, const TimeGrid& grid) {
  if (series.size() != grid.n_steps() + 1)
    throw ParameterError("laplace_errors: series length must be n_steps + 1");
  LaplaceSpatialErrors out;
  for (std::size_t n = 0; n < series.size(); ++n) {
    const double w = (n == 0 || n == grid.n_steps() ? 0.5 : 1.0) * grid.dt();
    const auto e = laplace_spatial_errors(space, series[n].first, series[n].second, ms, grid.node(n));
    out.sigma += w * e.sigma;
    out.u += w * e.u;
  }
  return out;
}

/// Triangle of the structured mesh containing (x, y). Points on shared edges
/// go to the cell of floor(x m), floor(y m) and to its lower triangle when
/// x - x_i >= y - y_j.
inline std::size_t probe_cell(const TriMesh& mesh, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw ParameterError("probe: point outside the unit square");
  const std::size_t m = mesh.divisions;
  if (m == 0) throw ParameterError("probe: mesh is not a structured unit-square mesh");
  const double md = static_cast<double>(m);
  const std::size_t i = std::min(static_cast<std::size_t>(std::floor(x * md)), m - 1);
  const std::size_t j = std::min(static_cast<std::size_t>(std::floor(y * md)), m - 1);
  const double lx = x - static_cast<double>(i) / md, ly = y - static_cast<double>(j) / md;
  return 2 * (j * m + i) + (lx >= ly ? 0 : 1);
}

/// u_h at a point for every stored step.
inline std::vector<double> probe(const TriMesh& mesh, const std::vector<Vec>& u_series, double x,
                                 double y) {
  const auto k = static_cast<Eigen::Index>(probe_cell(mesh, x, y));
  std::vector<double> out;
  out.reserve(u_series.size());
  for (const auto& u : u_series) out.push_back(u[k]);
  return out;
}

struct LaplaceSetup {
  ManufacturedSolution solution = ManufacturedSolution::fickian(0.01);
  std::optional<std::array<double, 2>> probe_point;
};

struct LaplaceRunResult {
  std::size_t m = 0;
  std::size_t dof = 0;  // RT0 edge count
  double h = 0.0;
  LaplaceSpatialErrors errors;  // L^1 in time
  StabilityMeasurements norms;
  std::vector<double> probe_t, probe_u;
  std::size_t factorizations = 0;
  double audit_discrepancy = 0.0;
};

struct LaplaceSystem {
  TriMesh mesh;
  std::unique_ptr<RT0Space> space;
  DofMap p0;
  SparseMatrix mass, div;

  explicit LaplaceSystem(std::size_t m)
      : mesh(structured_unit_square(m)),
        space(std::make_unique<RT0Space>(mesh)),
        p0(build_dofmap(mesh, SpaceTag::P0_tri)),
        mass(assemble_rt0_mass(*space)),
        div(assemble_rt0_div(*space, p0)) {}
  LaplaceSystem(const LaplaceSystem&) = delete;
  LaplaceSystem& operator=(const LaplaceSystem&) = delete;
};

inline LaplaceRunResult run_laplace(const LaplaceSetup& s, std::size_t m, const TimeGrid& grid,
                                    StepperOptions opt = {}) {
  LaplaceSystem ls(m);
  BlockSaddleSystem sys{ls.mass, ls.div, std::nullopt, std::nullopt, s.solution.k3()};
  VolterraStepper stepper(std::move(sys), grid, opt);
  NormAccumulator norms(rt0_gram(*ls.space, ls.mass, ls.div), p0_gram(*ls.space), grid);

  LaplaceRunResult r;
  r.m = m;
  r.dof = ls.space->n_dofs();
  r.h = ls.mesh.h();
  std::optional<Eigen::Index> cell;
  if (s.probe_point)
    cell = static_cast<Eigen::Index>(probe_cell(ls.mesh, (*s.probe_point)[0], (*s.probe_point)[1]));
  const Vec zero_f = Vec::Zero(static_cast<Eigen::Index>(ls.space->n_dofs()));

  auto data = [&](std::size_t, double t) {
    return std::pair<Vec, Vec>{zero_f, manufactured_rhs(*ls.space, s.solution, t)};
  };
  run_volterra(stepper, data, [&](std::size_t n, double t, const Vec& sigma, const Vec& u) {
    const double w = (n == 0 || n == grid.n_steps() ? 0.5 : 1.0) * grid.dt();
    const auto e = laplace_spatial_errors(*ls.space, sigma, u, s.solution, t);
    r.errors.sigma += w * e.sigma;
    r.errors.u += w * e.u;
    norms.add(n, sigma, u, zero_f, manufactured_rhs(*ls.space, s.solution, t));
    if (cell) {
      r.probe_t.push_back(t);
      r.probe_u.push_back(u[*cell]);
    }
  });
  r.norms = norms.result();
  r.factorizations = stepper.factorization_count();
  r.audit_discrepancy = stepper.max_audit_discrepancy();
  return r;
}

}  // namespace vmix
