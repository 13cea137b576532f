#include "erligme/selftest.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace erligme;

namespace {

SolverConfig tight(double eps = 1e-10) {
  SolverConfig sc;
  sc.eps_stop = eps;
  sc.max_iters = 200000;
  return sc;
}

/// Soft threshold, the closed-form lasso solution.
double lasso_solution(double y, double lam) {
  return std::copysign(std::max(std::abs(y) - lam, 0.0), y);
}

/// Scalar MC (firm) threshold: argmin ½(x − y)² + μ(|x| − (b²/2)x² for |x| ≤ 1/b², 1/(2b²) else),
/// with b² = θ/μ and θ < 1.
double firm_solution(double y, double mu, double theta) {
  const double b2 = theta / mu;
  const double a = std::abs(y);
  if (a <= mu) return 0.0;
  if (a >= 1.0 / b2) return y;
  return std::copysign((a - mu) / (1.0 - theta), y);
}

}  // namespace

TEST(Steps, ScalarLassoArithmetic) {
  const Steps s = default_steps(scalar_model(0.0), 1.1);
  EXPECT_NEAR(s.sigma, 1.1 * 3.0, 1e-9);
  EXPECT_NEAR(s.tau, 1.1 * 2.0, 1e-9);
  EXPECT_EQ(s.b_gram, 0.0);
  EXPECT_THROW(default_steps(scalar_model(0.0), 1.0), ConfigError);
}

TEST(Steps, ErBlockSpectrum) {
  VariantConfig c;
  c.regularizer = Regularizer::DSTV;
  c.enhancement = Enhancement::er_ligme;
  c.n = 4;
  c.w = 2;
  c.mu = 0.25;
  c.theta = c.rho = 1.5;
  ReferenceData ref;
  ref.z_r = Vec::Zero(regularizer_parts(c).z_len);
  const ModelSpec s = build_model(c, identity(48), Vec::Zero(48), ref);
  const Steps st = default_steps(s);
  EXPECT_NEAR(c.mu * st.lb_gram, c.theta, 1e-12);
}

TEST(Steps, TheoremRuleFormula) {
  const ModelSpec s = scalar_model(0.99);
  const Steps t = theorem_steps(s, 1.2);
  const double b2 = 0.99 / 0.5;
  EXPECT_NEAR(t.sigma, 0.6 * 1.0 + 0.5 * 2.0 + 0.2, 1e-9);
  EXPECT_NEAR(t.tau, (0.6 + 2.0 / 1.2) * 0.5 * b2 + 0.2, 1e-9);
}

TEST(Solve, ScalarLasso) {
  const SolveResult r = solve(scalar_model(0.0), tight());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.state.x[0], 1.5, 1e-3);
  EXPECT_NEAR(r.state.x[0], lasso_solution(2.0, 0.5), 1e-6);
}

TEST(Solve, ScalarLigmeDebiases) {
  const SolveResult r = solve(scalar_model(0.99), tight());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.state.x[0], 2.0, 1e-2);
  EXPECT_NEAR(r.state.x[0], firm_solution(2.0, 0.5, 0.99), 1e-6);
}

TEST(Solve, ScalarFirmThresholdRegimes) {
  for (double y : {0.3, 0.6, 0.9, -1.4}) {
    ModelSpec s = scalar_model(0.8);
    s.y = s.y_hat = Vec::Constant(1, y);
    const double want = firm_solution(y, 0.5, 0.8);
    EXPECT_NEAR(solve(s, tight()).state.x[0], want, 1e-6) << y;
  }
}

TEST(Solve, WarmStartAtSolution) {
  const ModelSpec s = scalar_model(0.99);
  const SolveResult first = solve(s, tight(1e-13));
  SolverConfig sc;
  sc.eps_stop = 1e-5;
  const SolveResult again = solve(s, sc, first.state);
  EXPECT_TRUE(again.converged);
  EXPECT_EQ(again.iterations, 1);
  EXPECT_LE(again.residual, 1e-5);
}

TEST(Solve, ConvergedPointIsLocallyOptimal) {
  const Problem p = make_denoise_problem(8, 3, 0.1, 3);
  VariantConfig c;
  c.regularizer = Regularizer::DVTV;
  c.n = 8;
  c.mu = 0.2;
  const ModelSpec s = build_model(c, p.phi, p.y);
  SolverConfig sc;
  sc.eps_stop = 1e-6;
  sc.max_iters = 100000;
  const SolveResult r = solve(s, sc);
  ASSERT_TRUE(r.converged);
  const Vec x = r.state.x.cwiseMax(0.0).cwiseMin(1.0);
  const double best = objective_value(s, x);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vec moved = (x + oracle::gaussian(x.size(), rng, 1e-2)).cwiseMax(0.0).cwiseMin(1.0);
    EXPECT_GE(objective_value(s, moved), best - 1e-7);
  }
  EXPECT_LT(best, objective_value(s, initial_state(s).x));
}

TEST(Solve, GuardAndNanAbort) {
  ModelSpec bad = scalar_model(0.0);
  bad.y = bad.y_hat = Vec::Constant(1, std::nan(""));
  EXPECT_THROW(solve(bad), SolverError);

  // Steps far below the Lipschitz bound make the iteration blow up.
  SolverConfig sc;
  sc.sigma = 0.05;
  sc.tau = 0.05;
  sc.eps_stop = 1e-12;
  sc.max_iters = 5000;
  EXPECT_THROW(solve(scalar_model(0.99), sc), SolverError);
}

TEST(Solve, MaxItersReportsNotConverged) {
  SolverConfig sc;
  sc.eps_stop = 1e-14;
  sc.max_iters = 5;
  const SolveResult r = solve(scalar_model(0.0), sc);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.stop_reason, "max_iters");
  EXPECT_EQ(r.iterations, 5);
  EXPECT_EQ(r.residuals.size(), 5u);
}

TEST(Solve, ConfigErrors) {
  SolverConfig sc;
  sc.eps_stop = 0.0;
  EXPECT_THROW(solve(scalar_model(0.0), sc), ConfigError);
  sc.eps_stop = 1e-3;
  sc.max_iters = 0;
  EXPECT_THROW(solve(scalar_model(0.0), sc), ConfigError);
}

TEST(Tightness, InteriorStartHasPositiveGaps) {
  VariantConfig c;
  c.regularizer = Regularizer::DSTV;
  c.n = 4;
  c.w = 2;
  const Problem p = make_denoise_problem(8, 3, 0.1, 1);
  const Vec y = p.y.head(48);
  ModelSpec s = build_model(c, identity(48), y);
  Vec x = initial_state(s).x;
  const Segment& z = s.layout.at("z");
  x.segment(z.offset, z.length).array() += 0.5;
  const auto gaps = tightness_report(s, x);
  ASSERT_FALSE(gaps.empty());
  for (const auto& g : gaps) EXPECT_GT(g.raw, 0.0);
  EXPECT_LE(max_relative_gap(s, initial_state(s).x), 1e-12);
}

TEST(Tightness, SlackEntriesSitAtTheReference) {
  // With θ = ρ the penalty is flat on saturated entries, so an entry whose
  // epigraph constraint is slack must equal its reference value.
  const Problem p = make_denoise_problem(8, 3, 0.1, 2);
  VariantConfig c;
  c.regularizer = Regularizer::DSTV;
  c.n = 8;
  c.w = 2;
  c.mu = 0.2;
  SolverConfig sc;
  sc.eps_stop = 1e-7;
  sc.max_iters = 200000;
  const SolveResult plain = solve(build_model(c, p.phi, p.y), sc);
  c.enhancement = Enhancement::er_ligme;
  c.theta = c.rho = 3.5;
  const ReferenceData ref = reference_from_solution(c, plain.state.x.head(192), c.rho);
  const ModelSpec s = build_model(c, p.phi, p.y, ref);
  const SolveResult r = solve(s, sc);
  ASSERT_TRUE(r.converged);
  const Segment& zs = s.layout.at("z");
  const Vec z = r.state.x.segment(zs.offset, zs.length);
  const Vec inner = eval_regularizer(c, r.state.x.head(192)).inner;
  int slack = 0;
  for (Index i = 0; i < z.size(); ++i) {
    EXPECT_GE(z[i] - inner[i], -1e-4) << i;
    if (z[i] - inner[i] > 1e-3) {
      ++slack;
      EXPECT_NEAR(z[i], ref.z_r[i], 1e-4) << i;
    }
  }
  EXPECT_LE(slack, 2);
}

TEST(SelfTest, AllChecksPass) {
  for (const auto& r : run_self_tests()) EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
}
