#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "vmix/beam.hpp"

using namespace vmix;

namespace {

Eigen::MatrixXd block(const SparseMatrix& A, Eigen::Index r, Eigen::Index c, Eigen::Index nr,
                      Eigen::Index nc) {
  return Eigen::MatrixXd(A).block(r, c, nr, nc);
}

Eigen::Matrix2d p1_mass() {
  Eigen::Matrix2d m;
  m << 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0;
  return m;
}

BeamConfig joined(double d) {
  BeamConfig c;
  c.d = d;
  return c;
}

BeamConfig smooth() {
  BeamConfig c;
  c.profile = BeamProfile::smooth;
  return c;
}

// Primal P1 x P1 Timoshenko solve for (beta, w) clamped at both ends:
//   (I_hat beta', theta') + (kappa eps^-2 (beta - w'), theta - v') = (f, v) + (g, theta)
// Bending by 2-point Gauss, shear by the midpoint rule.
std::pair<Vec, Vec> primal_timoshenko(const BeamConfig& cfg, const Mesh1D& mesh,
                                      const std::function<double(double)>& f) {
  const std::size_t n = mesh.n_elements();
  const std::size_t nn = n + 1;
  const double ie2 = 1.0 / cfg.eps2();
  std::vector<Triplet> t;
  Vec rhs = Vec::Zero(static_cast<Eigen::Index>(2 * nn));
  // unknowns: beta_0..beta_n, w_0..w_n
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = mesh.left(i), h = mesh.right(i) - x0, xm = x0 + 0.5 * h;
    double kb = 0.0;
    for (const auto& q : quad::gauss2) kb += q.w * h * cfg.I_hat(x0 + q.x * h, xm);
    kb /= h * h;
    const double ks = cfg.kappa(xm, xm) * ie2 * h;
    // shear strain at the midpoint: (b0+b1)/2 - (w1-w0)/h
    const double sb[2] = {0.5, 0.5}, sw[2] = {1.0 / h, -1.0 / h};
    const std::size_t bi[2] = {i, i + 1}, wi[2] = {nn + i, nn + i + 1};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double sa = a == b ? 1.0 : -1.0;
        t.emplace_back(bi[a], bi[b], kb * sa + ks * sb[a] * sb[b]);
        t.emplace_back(bi[a], wi[b], ks * sb[a] * sw[b]);
        t.emplace_back(wi[a], bi[b], ks * sw[a] * sb[b]);
        t.emplace_back(wi[a], wi[b], ks * sw[a] * sw[b]);
      }
    for (const auto& q : quad::gauss2) {
      const double x = x0 + q.x * h;
      rhs[static_cast<Eigen::Index>(nn + i)] += q.w * h * f(x) * (1.0 - q.x);
      rhs[static_cast<Eigen::Index>(nn + i + 1)] += q.w * h * f(x) * q.x;
    }
  }
  // clamp both ends by identity rows
  const std::size_t fixed[4] = {0, n, nn, nn + n};
  auto is_fixed = [&](std::size_t k) { return std::find(fixed, fixed + 4, k) != fixed + 4; };
  std::vector<Triplet> kept;
  for (const auto& e : t)
    if (!is_fixed(static_cast<std::size_t>(e.row())) && !is_fixed(static_cast<std::size_t>(e.col())))
      kept.push_back(e);
  for (auto k : fixed) {
    kept.emplace_back(k, k, 1.0);
    rhs[static_cast<Eigen::Index>(k)] = 0.0;
  }
  Eigen::SparseMatrix<double> K(static_cast<Eigen::Index>(2 * nn), static_cast<Eigen::Index>(2 * nn));
  K.setFromTriplets(kept.begin(), kept.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
  const Vec x = lu.solve(rhs);
  return {x.head(static_cast<Eigen::Index>(nn)), x.tail(static_cast<Eigen::Index>(nn))};
}

}  // namespace

TEST(BeamConfig, EpsSquaredClosedFormMatchesQuadrature) {
  for (double d : {1e-1, 1e-3}) {
    const auto c = joined(d);
    EXPECT_NEAR(c.eps2(), 5.0 * d * d / 12.0, 1e-18);
    EXPECT_NEAR(c.eps2_quadrature(), c.eps2(), 1e-12 * c.eps2());
  }
  const auto s = smooth();
  EXPECT_NEAR(s.eps2_quadrature(), s.eps2(), 1e-12 * s.eps2());
}

TEST(BeamConfig, ScaledCoefficientsPositive) {
  for (const auto& c : {joined(1e-1), joined(1e-4), smooth()})
    for (int i = 0; i <= 100; ++i) {
      const double x = 0.01 * i;
      EXPECT_GT(c.I_hat(x, x), 0.0);
      EXPECT_GT(c.A_hat(x, x), 0.0);
      EXPECT_GT(c.kappa(x, x), 0.0);
    }
}

TEST(BeamConfig, Validation) {
  auto c = joined(1e-3);
  c.nu = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = joined(0.0);
  EXPECT_THROW(assemble_beam_a(c, uniform_mesh1d(1.0, 4)), ConfigError);
  c = joined(1e-3);
  c.ks = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = joined(1e-3);
  EXPECT_THROW(assemble_beam_a(c, uniform_mesh1d(2.0, 4)), ConfigError);
}

// On the joined profile I_hat and kappa are constant per side, so every
// element block is the P1 mass matrix times h / I_hat and eps^2 h / kappa.
TEST(AssembleBeamA, ElementBlocksAreScaledP1Mass) {
  const auto cfg = joined(1e-2);
  const auto mesh = uniform_mesh1d(1.0, 2);
  const auto A = assemble_beam_a(cfg, mesh);
  ASSERT_EQ(A.rows(), 6);
  const double h = 0.5;
  for (std::size_t i = 0; i < 2; ++i) {
    const double xm = mesh.left(i) + 0.5 * h;
    const double ih = cfg.I_hat(xm, xm), kp = cfg.kappa(xm, xm);
    Eigen::Matrix2d mm = Eigen::Matrix2d::Zero(), vv = Eigen::Matrix2d::Zero();
    mm += p1_mass() * h / ih;
    vv += p1_mass() * cfg.eps2() * h / kp;
    Eigen::Matrix2d gotM = block(A, i, i, 2, 2), gotV = block(A, 3 + i, 3 + i, 2, 2);
    // strip the neighbour's contribution from the shared node
    if (i == 0) {
      const double xr = 0.75;
      gotM(1, 1) -= h / (3.0 * cfg.I_hat(xr, xr));
      gotV(1, 1) -= cfg.eps2() * h / (3.0 * cfg.kappa(xr, xr));
    } else {
      const double xl = 0.25;
      gotM(0, 0) -= h / (3.0 * cfg.I_hat(xl, xl));
      gotV(0, 0) -= cfg.eps2() * h / (3.0 * cfg.kappa(xl, xl));
    }
    EXPECT_LT((gotM - mm).norm(), 1e-12 * mm.norm());
    EXPECT_LT((gotV - vv).norm(), 1e-12 * vv.norm());
  }
  // no coupling between the M and V blocks
  EXPECT_EQ(block(A, 0, 3, 3, 3).norm(), 0.0);
}

TEST(AssembleBeamA, OneElementMomentBlockIsTwoPointGaussOfInverseIhat) {
  const auto cfg = smooth();
  const auto A = assemble_beam_a(cfg, uniform_mesh1d(1.0, 1));
  const double g = 0.5 / std::sqrt(3.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double ref = 0.0;
      for (double x : {0.5 - g, 0.5 + g}) {
        const double pa = a == 0 ? 1.0 - x : x, pb = b == 0 ? 1.0 - x : x;
        ref += 0.5 * pa * pb / cfg.I_hat(x, 0.5);
      }
      EXPECT_NEAR(A.coeff(a, b), ref, 1e-14 * std::abs(ref));
    }
}

// Summing the moment block integrates 1/I_hat; the 2-point rule converges at order 4.
TEST(AssembleBeamA, MomentBlockQuadratureConvergesAtOrderFour) {
  const auto cfg = smooth();
  EXPECT_EQ(cfg.I_hat(0.3, 0.1), cfg.I_hat(0.3, 0.9));
  const double exact = quad::composite([&](double x) { return 1.0 / cfg.I_hat(x, x); }, 0.0, 1.0, 512);
  std::vector<double> err;
  for (std::size_t n : {4u, 8u, 16u}) {
    const auto A = assemble_beam_a(cfg, uniform_mesh1d(1.0, n));
    err.push_back(std::abs(block(A, 0, 0, n + 1, n + 1).sum() - exact));
  }
  for (std::size_t i = 1; i < err.size(); ++i)
    EXPECT_NEAR(std::log2(err[i - 1] / err[i]), 4.0, 0.2);
}

TEST(AssembleBeamA, Symmetric) {
  for (const auto& c : {joined(1e-3), smooth()}) {
    const auto A = assemble_beam_a(c, uniform_mesh1d(1.0, 16));
    EXPECT_LT(max_asymmetry(A), 1e-14);
  }
}

TEST(AssembleBeamA, ShearBlockVanishesWithThickness) {
  const auto mesh = uniform_mesh1d(1.0, 8);
  const auto a1 = assemble_beam_a(joined(1e-2), mesh), a2 = assemble_beam_a(joined(1e-4), mesh);
  const Eigen::MatrixXd v1 = block(a1, 9, 9, 9, 9), v2 = block(a2, 9, 9, 9, 9);
  EXPECT_NEAR((v2 - 1e-4 * v1).norm(), 0.0, 1e-12 * v1.norm());
  EXPECT_LT(v2.cwiseAbs().maxCoeff(), 1e-6);
  // the moment block does not depend on d once I is scaled by eps^3
  EXPECT_NEAR((block(a1, 0, 0, 9, 9) - block(a2, 0, 0, 9, 9)).norm(), 0.0,
              1e-10 * block(a1, 0, 0, 9, 9).norm());
}

TEST(AssembleBeamB, OneElementRows) {
  const Eigen::MatrixXd B(assemble_beam_b(uniform_mesh1d(1.0, 1)));
  ASSERT_EQ(B.rows(), 2);
  ASSERT_EQ(B.cols(), 4);
  Eigen::MatrixXd expect(2, 4);
  expect << -1, 1, -0.5, -0.5, 0, 0, 1, -1;
  EXPECT_EQ((B - expect).norm(), 0.0);
}

TEST(AssembleBeamB, ConstantMomentIsInKernelOfBetaRows) {
  const auto mesh = uniform_mesh1d(1.0, 10);
  const auto B = assemble_beam_b(mesh);
  Vec u = Vec::Zero(22);
  u.head(11).setConstant(3.7);
  EXPECT_LT((B * u).norm(), 1e-14);
}

TEST(AssembleBeamB, NullspaceDimensionTwo) {
  for (std::size_t n : {1u, 2u, 7u, 30u}) {
    const Eigen::MatrixXd B(assemble_beam_b(uniform_mesh1d(1.0, n)));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    EXPECT_EQ(B.cols() - lu.rank(), 2) << "n = " << n;
  }
}

TEST(BeamRhs, UnitLoadTwoCells) {
  const auto [a, b] = beam_rhs(uniform_mesh1d(1.0, 2), BeamLoad::uniform(1.0), 1.0, 0.5);
  EXPECT_EQ(a.norm(), 0.0);
  ASSERT_EQ(b.size(), 4);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_DOUBLE_EQ(b[2], -0.5);
  EXPECT_DOUBLE_EQ(b[3], -0.5);
}

TEST(BeamRhs, ZeroLoadGivesZero) {
  const BeamLoad none{nullptr, nullptr, nullptr, nullptr, nullptr};
  const auto [a, b] = beam_rhs(uniform_mesh1d(1.0, 5), none, 1.0, 1.0);
  EXPECT_EQ(a.norm(), 0.0);
  EXPECT_EQ(b.norm(), 0.0);
}

TEST(BeamRhs, ExponentialLoadClosedForm) {
  const auto mesh = uniform_mesh1d(1.0, 8);
  const double e0 = 2.0;
  const auto [a, b] = beam_rhs(mesh, BeamLoad::exponential(), e0, 3.0);
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_NEAR(b[static_cast<Eigen::Index>(8 + i)],
                -(std::exp(mesh.right(i)) - std::exp(mesh.left(i))) / e0, 1e-15);
  // Heaviside: nothing before t = 0
  EXPECT_EQ(beam_rhs(mesh, BeamLoad::exponential(), 1.0, -1.0).second.norm(), 0.0);
  EXPECT_THROW(beam_rhs(mesh, BeamLoad::exponential(), 0.0, 1.0), ParameterError);
}

TEST(BeamRhs, QuadratureFallbackWithoutPrimitive) {
  const auto mesh = uniform_mesh1d(1.0, 4);
  BeamLoad l{[](double x) { return 3.0 * x; }, nullptr, nullptr, nullptr, nullptr};
  const auto [a, b] = beam_rhs(mesh, l, 1.0, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double x0 = mesh.left(i), x1 = mesh.right(i);
    EXPECT_NEAR(b[static_cast<Eigen::Index>(4 + i)], -1.5 * (x1 * x1 - x0 * x0), 1e-15);
  }
}

TEST(BeamFields, FromSolutionSizes) {
  const auto f = BeamFields::from_solution(Vec::LinSpaced(8, 0, 7), Vec::LinSpaced(6, 0, 5), 3);
  EXPECT_EQ(f.M.size(), 4);
  EXPECT_EQ(f.V[0], 4.0);
  EXPECT_EQ(f.w[0], 3.0);
  EXPECT_THROW(BeamFields::from_solution(Vec::Zero(8), Vec::Zero(5), 3), ParameterError);
}

TEST(BeamReference, ZeroKernelIsElastic) {
  const TimeGrid grid(15.0, 30);
  const auto ref = beam_exact_reference(joined(1e-3), BeamLoad::exponential(), 1.0, std::nullopt,
                                        grid, 64);
  for (double t : {0.0, 1.0, 7.3, 15.0}) EXPECT_EQ(ref.phi.value(t), 1.0);
  EXPECT_GT(ref.elastic.w.norm(), 0.0);
}

TEST(BeamReference, SlsRatio) {
  const TimeGrid grid(15.0, 1500);
  const auto ref = beam_exact_reference(joined(1e-3), BeamLoad::exponential(), 1.0,
                                        beam_kernel(PronySLS{1.0, 1.0, 1.0}), grid, 64);
  EXPECT_EQ(ref.phi.value(0.0), 1.0);
  for (double t : {0.1, 1.0, 5.0, 15.0})
    EXPECT_NEAR(ref.phi.value(t), 2.0 / 3.0 + std::exp(-3.0 * t) / 3.0, 1e-12);
}

TEST(BeamReference, RejectsNonSeparableLoad) {
  auto load = BeamLoad::exponential();
  load.time = [](double t) { return std::sin(t); };
  EXPECT_THROW(beam_exact_reference(joined(1e-3), load, 1.0, std::nullopt, TimeGrid(1.0, 4), 16),
               OracleError);
}

TEST(BeamErrors, IdenticalFieldsGiveZero) {
  const auto mesh = uniform_mesh1d(1.0, 16);
  const auto f = beam_elastic_solve(smooth(), mesh, BeamLoad::exponential(), 1.0);
  const auto e = beam_spatial_errors(mesh, f, mesh, f, 1.0);
  EXPECT_EQ(e.M, 0.0);
  EXPECT_EQ(e.V, 0.0);
  EXPECT_EQ(e.beta, 0.0);
  EXPECT_EQ(e.w, 0.0);
  EXPECT_EQ(e.M_h1, 0.0);
  EXPECT_EQ(e.V_h1, 0.0);

  // the same field restricted to a nested finer mesh is still identical
  const auto fine = uniform_mesh1d(1.0, 64);
  BeamFields g{Vec(65), Vec(65), Vec(64), Vec(64)};
  for (std::size_t k = 0; k <= 64; ++k) {
    const std::size_t i = std::min<std::size_t>(k / 4, 15);
    const double s = (fine.nodes[k] - mesh.left(i)) / mesh.h();
    g.M[static_cast<Eigen::Index>(k)] = (1 - s) * f.M[i] + s * f.M[i + 1];
    g.V[static_cast<Eigen::Index>(k)] = (1 - s) * f.V[i] + s * f.V[i + 1];
  }
  for (std::size_t k = 0; k < 64; ++k) {
    g.beta[static_cast<Eigen::Index>(k)] = f.beta[static_cast<Eigen::Index>(k / 4)];
    g.w[static_cast<Eigen::Index>(k)] = f.w[static_cast<Eigen::Index>(k / 4)];
  }
  const auto e2 = beam_spatial_errors(mesh, f, fine, g, 1.0);
  EXPECT_LT(e2.M_h1 + e2.V_h1 + e2.beta + e2.w, 1e-12 * (f.M.norm() + f.V.norm()));
}

TEST(BeamErrors, ConstantInTimeErrorIntegratesToCT) {
  const TimeGrid grid(15.0, 150);
  const auto ref = beam_exact_reference(joined(1e-3), BeamLoad::exponential(), 1.0, std::nullopt,
                                        grid, 32);
  auto shifted = ref.elastic;
  shifted.w.array() += 0.25;  // L^2 error 0.25 on a unit interval
  std::vector<BeamFields> series(grid.n_steps() + 1, shifted);
  const auto e = beam_errors(ref.mesh, series, ref, grid);
  EXPECT_NEAR(e.e.w, 0.25 * 15.0, 1e-12);
  EXPECT_NEAR(e.e.M, 0.0, 1e-12);
  series.pop_back();
  EXPECT_THROW(beam_errors(ref.mesh, series, ref, grid), ParameterError);
}

TEST(BeamErrors, FieldNormOfKnownPolynomial) {
  const auto mesh = uniform_mesh1d(1.0, 10);
  BeamFields f{Vec(11), Vec::Zero(11), Vec::Zero(10), Vec::Ones(10)};
  for (int k = 0; k <= 10; ++k) f.M[k] = 0.1 * k;  // M = x
  const auto n = beam_field_norms(mesh, f);
  EXPECT_NEAR(n.M, std::sqrt(1.0 / 3.0), 1e-14);
  EXPECT_NEAR(n.M_h1, std::sqrt(1.0 / 3.0 + 1.0), 1e-14);
  EXPECT_NEAR(n.w, 1.0, 1e-14);
}

TEST(BeamElastic, ZeroKernelRunIsStationary) {
  BeamSetup s;
  s.beam = joined(1e-3);
  const TimeGrid grid(1.0, 10);
  const auto ref = beam_exact_reference(s.beam, s.load, s.e0, s.kernel, grid, 32);
  const auto r = run_beam(s, 16, grid, ref);
  const auto el = beam_elastic_solve(s.beam, uniform_mesh1d(1.0, 16), s.load, s.e0);
  EXPECT_LT((r.final_fields.w - el.w).norm(), 1e-12 * el.w.norm());
  EXPECT_LT((r.final_fields.M - el.M).norm(), 1e-12 * el.M.norm());
  EXPECT_EQ(r.factorizations, 1u);
}

// Mixed w_h against cell averages of a primal P1 Timoshenko solve on the same fine mesh.
TEST(BeamElastic, AgreesWithPrimalDisplacementSolve) {
  for (const auto& cfg : {joined(1e-1), smooth()}) {
    const auto mesh = uniform_mesh1d(1.0, 512);
    const auto mixed = beam_elastic_solve(cfg, mesh, BeamLoad::exponential(), 1.0);
    const auto [beta, w] = primal_timoshenko(cfg, mesh, [](double x) { return std::exp(x); });
    double diff = 0.0, scale = 0.0, bdiff = 0.0, bscale = 0.0;
    for (Eigen::Index i = 0; i < 512; ++i) {
      diff = std::max(diff, std::abs(mixed.w[i] - 0.5 * (w[i] + w[i + 1])));
      scale = std::max(scale, std::abs(mixed.w[i]));
      bdiff = std::max(bdiff, std::abs(mixed.beta[i] - 0.5 * (beta[i] + beta[i + 1])));
      bscale = std::max(bscale, std::abs(mixed.beta[i]));
    }
    EXPECT_GT(scale, 0.0);
    EXPECT_LT(diff / scale, 1e-3);
    EXPECT_LT(bdiff / bscale, 1e-3);
  }
}

// Volterra run with a separable load equals elastic_h(x) phi(t_n) up to O(dt^2).
TEST(BeamVolterra, SeparabilityAgainstCreepFactor) {
  BeamSetup s;
  s.beam = joined(1e-3);
  s.kernel = beam_kernel(PronySLS{1.0, 1.0, 1.0});
  const auto mesh = uniform_mesh1d(1.0, 16);
  const auto el = beam_elastic_solve(s.beam, mesh, s.load, s.e0);
  for (std::size_t N : {100u, 200u}) {
    const TimeGrid grid(2.0, N);
    VolterraStepper st(beam_system(s, mesh), grid);
    const double phiT = 2.0 / 3.0 + std::exp(-6.0) / 3.0;
    double worst = 0.0;
    run_volterra(
        st, [&](std::size_t, double t) { return beam_rhs(mesh, s.load, s.e0, t); },
        [&](std::size_t n, double t, const Vec& u, const Vec& p) {
          const double phi = 2.0 / 3.0 + std::exp(-3.0 * t) / 3.0;
          const auto f = BeamFields::from_solution(u, p, 16);
          worst = std::max(worst, (f.w - phi * el.w).norm() / el.w.norm());
          if (n == N) EXPECT_NEAR(f.M.norm() / el.M.norm(), phiT, 1e-3);
        });
    // trapezoid in time: error ~ C dt^2 with C of order one here
    EXPECT_LT(worst, 2.0 * grid.dt() * grid.dt());
    EXPECT_GT(worst, 0.0);
  }
}

// Relative errors of a short run at n = 40 barely move across four thicknesses.
TEST(BeamVolterra, LockingFreeAcrossThickness) {
  const TimeGrid grid(1.0, 100);
  std::vector<std::array<double, 6>> rel;
  for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) {
    BeamSetup s;
    s.beam = joined(d);
    s.kernel = beam_kernel(PronySLS{1.0, 1.0, 1.0});
    const auto ref = beam_exact_reference(s.beam, s.load, s.e0, s.kernel, grid, 640);
    const auto r = run_beam(s, 40, grid, ref);
    const auto& e = r.errors.e;
    const auto& x = r.errors.exact;
    rel.push_back({e.M / x.M, e.V / x.V, e.M_h1 / x.M_h1, e.V_h1 / x.V_h1, e.beta / x.beta,
                   e.w / x.w});
  }
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < rel.size(); ++i)
      for (std::size_t j = i + 1; j < rel.size(); ++j)
        EXPECT_LT(std::abs(rel[i][f] - rel[j][f]) / std::max(rel[i][f], rel[j][f]), 0.1)
            << "field " << f << " d pair " << i << "," << j;
}

TEST(BeamVolterra, ShortRunRates) {
  BeamSetup s;
  s.beam = smooth();
  s.kernel = beam_kernel(RelaxationModulus{1.0, 0.5, 1.0});
  const TimeGrid grid(1.0, 200);
  const auto ref = beam_exact_reference(s.beam, s.load, s.e0, s.kernel, grid, 256);
  const auto a = run_beam(s, 8, grid, ref), b = run_beam(s, 16, grid, ref);
  auto rate = [](double e1, double e2) { return std::log(e1 / e2) / std::log(2.0); };
  EXPECT_NEAR(rate(a.errors.e.M, b.errors.e.M), 2.0, 0.15);
  EXPECT_NEAR(rate(a.errors.e.M_h1, b.errors.e.M_h1), 1.0, 0.1);
  EXPECT_NEAR(rate(a.errors.e.w, b.errors.e.w), 1.0, 0.1);
  EXPECT_NEAR(rate(a.errors.e.beta, b.errors.e.beta), 1.0, 0.1);
  EXPECT_EQ(a.dof, 18u);
  EXPECT_DOUBLE_EQ(a.h, 0.125);
}
