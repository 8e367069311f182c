#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "vmix/constants.hpp"
#include "vmix/kernels.hpp"
#include "vmix/volterra.hpp"

using namespace vmix;

namespace {

Vec random_vec(std::mt19937& rng, Eigen::Index n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& M) {
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (M(i, j) != 0.0) t.emplace_back(i, j, M(i, j));
  return from_triplets(M.rows(), M.cols(), t);
}

// Random SPD A (n x n) and full-rank B (m x n).
std::pair<SparseMatrix, SparseMatrix> random_saddle(std::mt19937& rng, int n, int m) {
  Eigen::MatrixXd R(n, n), Bd(m, n);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) R(i, j) = N(rng);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) Bd(i, j) = N(rng);
  Eigen::MatrixXd A = R * R.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  return {dense_to_sparse(A), dense_to_sparse(Bd)};
}

}  // namespace

TEST(TimeGrid, NodesAndStep) {
  const TimeGrid g(15.0, 1500);
  EXPECT_DOUBLE_EQ(g.dt(), 0.01);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(1500), 15.0);
  EXPECT_THROW(g.node(1501), IndexError);
  EXPECT_THROW(TimeGrid(0.0, 10), ParameterError);
  EXPECT_THROW(TimeGrid(1.0, 0), ParameterError);
}

TEST(TrapezoidWeights, Examples) {
  const auto w = trapezoid_weights(TimeGrid(1.0, 2), 2);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 0.25);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 0.25);

  const auto w1 = trapezoid_weights(TimeGrid(0.003, 1), 1);
  ASSERT_EQ(w1.size(), 2u);
  EXPECT_DOUBLE_EQ(w1[0], 0.0015);
  EXPECT_DOUBLE_EQ(w1[1], 0.0015);

  double s = 0.0;
  for (double v : trapezoid_weights(TimeGrid(7.0, 10), 0)) s += v;
  EXPECT_EQ(s, 0.0);
}

TEST(TrapezoidWeights, OutOfRange) {
  EXPECT_THROW(trapezoid_weights(TimeGrid(1.0, 4), 5), IndexError);
}

TEST(TrapezoidWeights, SumToElapsedTime) {
  const TimeGrid g(4.5, 3000);
  for (std::size_t n : {1u, 2u, 17u, 3000u}) {
    double s = 0.0;
    for (double v : trapezoid_weights(g, n)) s += v;
    EXPECT_NEAR(s, g.node(n), 1e-12);
  }
}

TEST(Step, HandSolvableSaddle) {
  BlockSaddleSystem sys;
  sys.A = dense_to_sparse(Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd b(1, 2);
  b << 1.0, 0.0;
  sys.B = dense_to_sparse(b);
  VolterraStepper st(sys, TimeGrid(1.0, 3));
  Vec f(2), g(1);
  f << 1.0, 0.0;
  g << 1.0;
  for (std::size_t n = 0; n <= 3; ++n) {
    auto [u, p] = st.step(n, f, g);
    EXPECT_NEAR(u[0], 1.0, 1e-15);
    EXPECT_NEAR(u[1], 0.0, 1e-15);
    EXPECT_NEAR(p[0], 0.0, 1e-15);
  }
  EXPECT_THROW(st.step(4, f, g), IndexError);
}

TEST(Step, StepsMustBeInOrder) {
  std::mt19937 rng(1);
  auto [A, B] = random_saddle(rng, 6, 2);
  VolterraStepper st({A, B}, TimeGrid(1.0, 5));
  EXPECT_THROW(st.step(1, Vec::Zero(6), Vec::Zero(2)), IndexError);
  EXPECT_THROW(st.step(0, Vec::Zero(5), Vec::Zero(2)), ParameterError);
}

// With every kernel absent each step is the stationary solve of its own data.
TEST(Step, ZeroKernelReproducesStationarySolve) {
  std::mt19937 rng(3);
  auto [A, B] = random_saddle(rng, 30, 10);
  const TimeGrid grid(2.0, 25);
  VolterraStepper st({A, B}, grid);
  const auto fac = factorize_saddle(A, B);
  for (std::size_t n = 0; n <= grid.n_steps(); ++n) {
    const Vec f = random_vec(rng, 30), g = random_vec(rng, 10);
    auto [u, p] = st.step(n, f, g);
    auto [u0, p0] = fac.solve(f, g);
    EXPECT_LT((u - u0).norm(), 1e-12 * u0.norm());
    EXPECT_LT((p - p0).norm(), 1e-12 * p0.norm());
  }
  EXPECT_EQ(st.factorization_count(), 1u);
}

TEST(Step, ImplicitGammaLaplaceExample) {
  const TimeGrid grid(4.5, 3000);
  const auto k3 = fickian_kernel(0.01);
  EXPECT_NEAR(grid.dt(), 0.0015, 1e-15);
  EXPECT_NEAR(implicit_gamma(k3, grid, 1), 0.925, 1e-12);
  EXPECT_NEAR(implicit_gamma(k3, grid, 2999), 0.925, 1e-12);
  EXPECT_EQ(implicit_gamma(k3, grid, 0), 1.0);
  EXPECT_EQ(implicit_gamma(std::nullopt, grid, 5), 1.0);
}

TEST(Step, StabilityGateRejectsLargeStep) {
  std::mt19937 rng(5);
  auto [A, B] = random_saddle(rng, 6, 2);
  BlockSaddleSystem sys{A, B, std::nullopt, std::nullopt, fickian_kernel(0.01)};
  try {
    VolterraStepper st(sys, TimeGrid(0.3, 10));  // dt = 0.03 >= 2 delta
    FAIL() << "gate did not trigger";
  } catch (const StabilityGateError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dt too large for kernel k3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("use dt < 2/C_k = 0.02"), std::string::npos) << msg;
  }
  // dt exactly 2 delta is still rejected
  EXPECT_THROW(VolterraStepper(sys, TimeGrid(0.2, 10)), StabilityGateError);
  EXPECT_NO_THROW(VolterraStepper(sys, TimeGrid(0.19, 10)));
}

// Convolution kernels give one factorization for n = 0 and one for n >= 1.
TEST(Step, FactorizationReuse) {
  std::mt19937 rng(9);
  auto [A, B] = random_saddle(rng, 12, 4);
  const TimeGrid grid(1.0, 40);
  for (bool rec : {true, false}) {
    StepperOptions opt;
    opt.use_recurrence = rec;
    VolterraStepper st({A, B, beam_kernel(PronySLS{1, 1, 1}), std::nullopt,
                        fickian_kernel(0.1)},
                       grid, opt);
    for (std::size_t n = 0; n <= grid.n_steps(); ++n) st.step(n, random_vec(rng, 12), random_vec(rng, 4));
    EXPECT_EQ(st.factorization_count(), 2u);
    EXPECT_EQ(st.uses_recurrence(), rec);
  }
}

TEST(Step, GeneralKernelFallsBackToDirectSums) {
  std::mt19937 rng(13);
  auto [A, B] = random_saddle(rng, 8, 3);
  const TimeGrid grid(1.0, 20);
  auto k = MemoryKernel::general([](double t, double s) { return 0.3 * std::cos(t - 2.0 * s); }, 0.3);
  VolterraStepper st({A, B, std::nullopt, std::nullopt, k}, grid);
  EXPECT_FALSE(st.uses_recurrence());
  for (std::size_t n = 0; n <= grid.n_steps(); ++n) st.step(n, random_vec(rng, 8), random_vec(rng, 3));
  // gamma changes every step; the cache stays bounded
  EXPECT_GT(st.factorization_count(), 4u);
  StepperOptions opt;
  opt.audit_history = true;
  EXPECT_THROW(VolterraStepper({A, B, std::nullopt, std::nullopt, k}, grid, opt), ModeError);
}

TEST(HistorySum, SinglePanelConstantKernel) {
  const TimeGrid grid(1.0, 10);
  HistoryBuffer h(grid);
  Vec x(3);
  x << 1.0, -2.0, 0.5;
  h.push(x, Vec::Zero(1));
  const auto k = MemoryKernel::general([](double, double) { return 4.0; }, 4.0);
  const Vec s = history_sum(h, k, 1, Field::u);
  EXPECT_LT((s - 0.5 * grid.dt() * 4.0 * x).norm(), 1e-15);
}

TEST(HistorySum, ZeroKernel) {
  std::mt19937 rng(2);
  const TimeGrid grid(1.0, 10);
  HistoryBuffer h(grid);
  h.track_rate(Field::u, 0.0);
  for (int j = 0; j < 5; ++j) h.push(random_vec(rng, 4), random_vec(rng, 2));
  EXPECT_EQ(history_sum(h, MemoryKernel::zero(), 5, Field::u).norm(), 0.0);
  EXPECT_EQ(history_sum(h, MemoryKernel::zero(), 5, Field::u, SumMode::recurrence).norm(), 0.0);
}

TEST(HistorySum, RecurrenceMatchesDirect) {
  std::mt19937 rng(17);
  const TimeGrid grid(2.0, 200);
  const auto k = MemoryKernel::exp_convolution(-0.7, 3.0);
  const auto kp = MemoryKernel::exp_convolution(2.0, 0.5);
  HistoryBuffer h(grid);
  h.track_rate(Field::u, 3.0);
  h.track_rate(Field::p, 0.5);
  for (std::size_t n = 1; n <= 50; ++n) {
    h.push(random_vec(rng, 7), random_vec(rng, 3));
    const Vec d = history_sum(h, k, n, Field::u, SumMode::direct);
    const Vec r = history_sum(h, k, n, Field::u, SumMode::recurrence);
    EXPECT_LE((d - r).norm(), 1e-12 * d.norm());
    const Vec dp = history_sum(h, kp, n, Field::p, SumMode::direct);
    const Vec rp = history_sum(h, kp, n, Field::p, SumMode::recurrence);
    EXPECT_LE((dp - rp).norm(), 1e-12 * dp.norm());
  }
}

TEST(HistorySum, ModeErrors) {
  const TimeGrid grid(1.0, 10);
  HistoryBuffer h(grid);
  h.track_rate(Field::u, 1.0);
  h.push(Vec::Ones(2), Vec::Ones(1));
  h.push(Vec::Ones(2), Vec::Ones(1));
  const auto general = MemoryKernel::general([](double, double) { return 1.0; }, 1.0);
  EXPECT_THROW(history_sum(h, general, 2, Field::u, SumMode::recurrence), ModeError);
  // untracked rate
  EXPECT_THROW(history_sum(h, MemoryKernel::exp_convolution(1.0, 2.0), 2, Field::u,
                           SumMode::recurrence),
               ModeError);
  // recurrence only serves the newest step
  EXPECT_THROW(history_sum(h, MemoryKernel::exp_convolution(1.0, 1.0), 1, Field::u,
                           SumMode::recurrence),
               ModeError);
  EXPECT_THROW(history_sum(h, general, 0, Field::u), IndexError);
  EXPECT_THROW(history_sum(h, general, 3, Field::u), IndexError);
  EXPECT_THROW(h.track_rate(Field::p, 2.0), ModeError);

  HistoryBuffer lean(grid, Retention::recurrence_only);
  lean.track_rate(Field::u, 1.0);
  lean.push(Vec::Ones(2), Vec::Ones(1));
  EXPECT_THROW(history_sum(lean, general, 1, Field::u, SumMode::direct), ModeError);
  EXPECT_THROW(lean.u(0), ModeError);
}

TEST(HistoryBuffer, LengthTracksCompletedSteps) {
  std::mt19937 rng(4);
  auto [A, B] = random_saddle(rng, 5, 2);
  const TimeGrid grid(1.0, 8);
  VolterraStepper st({A, B, std::nullopt, std::nullopt, fickian_kernel(1.0)}, grid);
  for (std::size_t n = 0; n <= grid.n_steps(); ++n) {
    st.step(n, random_vec(rng, 5), random_vec(rng, 2));
    EXPECT_EQ(st.history().size(), n + 1);
  }
}

TEST(Stepper, AuditOverTwoHundredSteps) {
  std::mt19937 rng(21);
  auto [A, B] = random_saddle(rng, 20, 6);
  const TimeGrid grid(1.0, 200);
  StepperOptions opt;
  opt.audit_history = true;
  VolterraStepper st({A, B, beam_kernel(PronySLS{1, 1, 1}), fickian_kernel(0.05),
                      fickian_kernel(0.01)},
                     grid, opt);
  for (std::size_t n = 0; n <= grid.n_steps(); ++n) st.step(n, random_vec(rng, 20), random_vec(rng, 6));
  EXPECT_EQ(st.audited_sums(), 3u * 200u);
  EXPECT_LE(st.max_audit_discrepancy(), 1e-12);
}

// Recurrence and direct stepping give the same trajectory.
TEST(Stepper, RecurrenceAndDirectAgree) {
  std::mt19937 rng(23);
  auto [A, B] = random_saddle(rng, 10, 4);
  const TimeGrid grid(1.0, 60);
  StepperOptions direct;
  direct.use_recurrence = false;
  BlockSaddleSystem sys{A, B, fickian_kernel(0.2), std::nullopt, beam_kernel(PronySLS{1, 1, 1})};
  VolterraStepper a(sys, grid), b(sys, grid, direct);
  for (std::size_t n = 0; n <= grid.n_steps(); ++n) {
    const Vec f = random_vec(rng, 10), g = random_vec(rng, 4);
    auto [ua, pa] = a.step(n, f, g);
    auto [ub, pb] = b.step(n, f, g);
    EXPECT_LE((ua - ub).norm(), 1e-11 * ub.norm());
    EXPECT_LE((pa - pb).norm(), 1e-11 * pb.norm());
  }
}

// Scalar Volterra problem u = 1 + int k u with k the unit SLS kernel:
// the stepper's value at T converges at second order in dt.
TEST(Stepper, SecondOrderInTime) {
  BlockSaddleSystem sys;
  sys.A = dense_to_sparse(Eigen::MatrixXd::Identity(1, 1));
  sys.B = dense_to_sparse(Eigen::MatrixXd::Identity(1, 1));
  sys.k3 = beam_kernel(PronySLS{1, 1, 1});
  const double T = 2.0;
  const double exact = 2.0 / 3.0 + std::exp(-3.0 * T) / 3.0;
  std::vector<double> err;
  for (std::size_t N : {25u, 50u, 100u}) {
    VolterraStepper st(sys, TimeGrid(T, N));
    double uT = 0.0;
    for (std::size_t n = 0; n <= N; ++n) uT = st.step(n, Vec::Zero(1), Vec::Ones(1)).first[0];
    err.push_back(std::abs(uT - exact));
  }
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(StabilityConstants, ZeroKernelCollapse) {
  const double a0 = 0.8, b = 0.6, na = 2.5;
  const auto c = stability_constants(a0, b, na, 0, 0, 0, 0, 3.0);
  EXPECT_NEAR(c.C1, 1.0 / a0, 1e-15);
  EXPECT_NEAR(c.C2, (1.0 + na / a0) / b, 1e-14);
  EXPECT_NEAR(c.C3, 1.0 + na * c.C1, 1e-14);
  EXPECT_NEAR(c.C4, na * c.C2, 1e-14);

  const auto u = stability_constants(1, 1, 1, 0, 0, 0, 0, 1);
  EXPECT_EQ(u.C1, 1.0);
  EXPECT_EQ(u.C2, 2.0);
  EXPECT_EQ(u.C3, 2.0);
  EXPECT_EQ(u.C4, 2.0);
}

TEST(StabilityConstants, OnePlusE) {
  const auto c = stability_constants(1, 1, 1, 0, 0, 0, 1, 1);
  EXPECT_NEAR(c.C1, 1.0 + std::exp(1.0), 1e-14);
  EXPECT_NEAR(c.C1, 3.71828, 1e-5);
  EXPECT_GE(c.C1, 1.0 / c.alpha0);
}

TEST(StabilityConstants, RejectsBadInputs) {
  EXPECT_THROW(stability_constants(0, 1, 1, 0, 0, 0, 0, 1), ParameterError);
  EXPECT_THROW(stability_constants(1, -1, 1, 0, 0, 0, 0, 1), ParameterError);
  EXPECT_THROW(stability_constants(1, 1, 1, 0, 0, 0, 0, 0), ParameterError);
  EXPECT_THROW(stability_constants(1, 1, -1, 0, 0, 0, 0, 1), ParameterError);
  EXPECT_THROW(error_constants(1, 1, 1, -1, 0, 0, 0, 0, 1), ParameterError);
}

TEST(StabilityConstants, DoublingTNeverDecreases) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> U(0.05, 2.0), K(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const double a0 = U(rng), b = U(rng), na = U(rng), nb = U(rng);
    const double k1 = K(rng), k2 = K(rng), k3 = K(rng), kt = K(rng), T = U(rng);
    const auto s1 = stability_constants(a0, b, na, k1, k2, k3, kt, T);
    const auto s2 = stability_constants(a0, b, na, k1, k2, k3, kt, 2 * T);
    EXPECT_GE(s2.C1, s1.C1);
    EXPECT_GE(s2.C2, s1.C2);
    EXPECT_GE(s2.C3, s1.C3);
    EXPECT_GE(s2.C4, s1.C4);
    const auto e1 = error_constants(a0, b, na, nb, k1, k2, k3, kt, T);
    const auto e2 = error_constants(a0, b, na, nb, k1, k2, k3, kt, 2 * T);
    EXPECT_GE(e2.C1u, e1.C1u);
    EXPECT_GE(e2.C1p, e1.C1p);
    EXPECT_GE(e2.C2u, e1.C2u);
    EXPECT_GE(e2.C2p, e1.C2p);
    for (double v : {s1.C1, s1.C2, s1.C3, s1.C4, e1.C1u, e1.C1p, e1.C2u, e1.C2p})
      EXPECT_GE(v, 0.0);
  }
}

TEST(ErrorConstants, ZeroKernelCollapse) {
  const double a = 0.7, b = 0.4, na = 3.0, nb = 1.5;
  const auto e = error_constants(a, b, na, nb, 0, 0, 0, 0, 2.0);
  EXPECT_NEAR(e.C1u, e.C1s * na + e.C2s * nb + 1.0, 1e-13);
  EXPECT_NEAR(e.C1p, e.C1s * nb, 1e-14);
  EXPECT_NEAR(e.C1s, 1.0 / a, 1e-15);
}

// Values frozen from an independent evaluation of the closed forms.
TEST(ErrorConstants, FrozenUnitInputs) {
  const auto e = error_constants(1, 1, 1, 1, 1, 1, 1, 0, 1);
  EXPECT_NEAR(e.C1s, 3.718281828459045, 1e-13);
  EXPECT_NEAR(e.C2s, 7.43656365691809, 1e-13);
  EXPECT_NEAR(e.C3s, 31.369521340156524, 1e-12);
  EXPECT_NEAR(e.C4s, 55.30247902339496, 1e-12);
  EXPECT_NEAR(e.C1u, 23.30969097075427, 1e-12);
  EXPECT_NEAR(e.C1p, 7.43656365691809, 1e-13);
  EXPECT_NEAR(e.C2u, 173.34400072710298, 1e-11);
  EXPECT_NEAR(e.C2p, 63.73904268031305, 1e-12);
  EXPECT_GT(e.C1u, e.C1p);
}

TEST(StabilityConstants, RationalInputsExact) {
  // X = 0, P = 1 + 1/2 + 0 = 3/2 with C_k1 = 1/2, C_k2 = 0
  const auto c = stability_constants(0.5, 0.25, 2.0, 0.5, 0.0, 0.0, 0.0, 4.0);
  EXPECT_DOUBLE_EQ(c.C1, 2.0);
  EXPECT_DOUBLE_EQ(c.C2, 20.0);
  EXPECT_DOUBLE_EQ(c.C3, 1.0 + 2.0 * 2.0 * 1.5);
  EXPECT_DOUBLE_EQ(c.C4, 20.0 * 2.0 * 1.5);
}
